use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use irv_pivot::election::{admissible_rankings, Candidate};
use irv_pivot::experiment::{run_experiment_partial, write_csv, write_dat, BallotLength, ExperimentConfig};
use irv_pivot::io::{parse_ballot, read_profile};
use irv_pivot::oracle::{mc_pivot_batch, OracleConfig};
use irv_pivot::pivot::{best_ballot, PivotConfig, PivotEngine, UtilityVector};
use irv_pivot::skellam::{Tolerance, DEFAULT_TAIL_EPS};
use irv_pivot::smdp::{smdp_sweep, SmdpMethod};

/// Pivotal vote probabilities for instant-runoff and plurality elections.
#[derive(Parser)]
#[command(name = "pivot", version)]
struct Cli {
    /// Truncation bound for the infinite Skellam sums.
    #[arg(long, global = true, env = "PIVOT_TAIL_EPS", default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct PivotOpts {
    /// Also count half the tie mass of every comparison inside a drop order.
    #[arg(long)]
    with_sequence_ties: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Direct, indirect and total pivotal probability of one ballot.
    Compute {
        #[arg(long)]
        profile: PathBuf,
        /// Comma-separated candidate ids, most preferred first.
        #[arg(long)]
        ballot: String,
        /// Comma-separated utilities, one per candidate.
        #[arg(long)]
        utility: Option<String>,
        /// Include the individual pivotal events.
        #[arg(long)]
        events: bool,
        #[command(flatten)]
        opts: PivotOpts,
    },
    /// Reports for every admissible ballot.
    Sweep {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        utility: Option<String>,
        /// Only ballots of the profile's full length.
        #[arg(long)]
        full_length: bool,
        #[arg(long)]
        events: bool,
        #[command(flatten)]
        opts: PivotOpts,
    },
    /// The admissible ballot with the highest expected utility.
    Best {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        utility: String,
        #[arg(long)]
        full_length: bool,
        #[command(flatten)]
        opts: PivotOpts,
    },
    /// Plurality pivotal probability of every candidate.
    Smdp {
        #[arg(long)]
        profile: PathBuf,
        /// Treat the pairwise comparisons as independent.
        #[arg(long)]
        pairwise_approx: bool,
    },
    /// Monte-Carlo estimate from simulated counts.
    Oracle {
        #[arg(long)]
        profile: PathBuf,
        /// Ballot to evaluate; repeat to share draws between ballots.
        #[arg(long, required = true)]
        ballot: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed of the tie-break stream; derived from --seed by default.
        #[arg(long)]
        tie_seed: Option<u64>,
        #[arg(long)]
        utility: Option<String>,
    },
    /// Summed IRV and plurality pivotal probabilities over generated profiles.
    Experiment {
        #[arg(long, default_value = "powerlaw")]
        dist: String,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        kappas: Vec<usize>,
        #[arg(long, default_value_t = 1000.0)]
        voters: f64,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Allow rankings of any length up to this; full rankings otherwise.
        #[arg(long)]
        ballot_len: Option<usize>,
        /// CSV output path; a gnuplot .dat file is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fill in the seconds column (makes output run-dependent).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        pairwise_approx: bool,
        #[command(flatten)]
        opts: PivotOpts,
    },
}

fn parse_utility(text: &str, kappa: usize) -> Result<UtilityVector> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("utility entry {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(UtilityVector::new(values, kappa)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn smdp_method(pairwise: bool) -> SmdpMethod {
    if pairwise {
        SmdpMethod::PairwiseApprox
    } else {
        SmdpMethod::Exact
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let tol = Tolerance::new(cli.tail_eps)?;
    let pivot_cfg = |opts: &PivotOpts| PivotConfig { tol, sequence_ties: opts.with_sequence_ties };

    match cli.cmd {
        Command::Compute { profile, ballot, utility, events, opts } => {
            let profile = read_profile(&profile)?;
            let ballot = parse_ballot(&ballot, profile.kappa())?;
            let utility = utility.map(|u| parse_utility(&u, profile.kappa())).transpose()?;
            let engine = PivotEngine::new(&profile, pivot_cfg(&opts))?;
            print_json(&engine.report(&ballot, utility.as_ref(), events)?)
        }
        Command::Sweep { profile, utility, full_length, events, opts } => {
            let profile = read_profile(&profile)?;
            let utility = utility.map(|u| parse_utility(&u, profile.kappa())).transpose()?;
            let engine = PivotEngine::new(&profile, pivot_cfg(&opts))?;
            let ballots = admissible_rankings(profile.kappa(), profile.max_len(), full_length)?;
            print_json(&engine.sweep_with(&ballots, utility.as_ref(), events)?)
        }
        Command::Best { profile, utility, full_length, opts } => {
            let profile = read_profile(&profile)?;
            let utility = parse_utility(&utility, profile.kappa())?;
            let (_, report) = best_ballot(&profile, &utility, pivot_cfg(&opts), full_length)?;
            print_json(&report)
        }
        Command::Smdp { profile, pairwise_approx } => {
            let profile = read_profile(&profile)?;
            let reports: Vec<_> = smdp_sweep(&profile, tol, smdp_method(pairwise_approx))
                .into_iter()
                .map(|r| r.to_pivot_report(profile.kappa()))
                .collect();
            print_json(&reports)
        }
        Command::Oracle { profile, ballot, draws, seed, tie_seed, utility } => {
            let profile = read_profile(&profile)?;
            let ballots = ballot
                .iter()
                .map(|b| parse_ballot(b, profile.kappa()))
                .collect::<irv_pivot::Result<Vec<_>>>()?;
            let utility = utility.map(|u| parse_utility(&u, profile.kappa())).transpose()?;
            let mut cfg = OracleConfig::new(draws, seed)?;
            if let Some(t) = tie_seed {
                cfg.tie_coin_seed = t;
            }
            #[derive(Serialize)]
            struct Row {
                ballot: Vec<Candidate>,
                #[serde(flatten)]
                estimate: irv_pivot::oracle::OracleEstimate,
            }
            let rows: Vec<Row> = ballots
                .iter()
                .zip(mc_pivot_batch(&profile, &ballots, utility.as_ref(), &cfg)?)
                .map(|(b, estimate)| Row { ballot: b.candidates().to_vec(), estimate })
                .collect();
            print_json(&rows)
        }
        Command::Experiment {
            dist,
            kappas,
            voters,
            runs,
            base_seed,
            ballot_len,
            out,
            timing,
            pairwise_approx,
            opts,
        } => {
            let cfg = ExperimentConfig {
                kappas,
                n_voters: voters,
                runs,
                distribution: dist.parse()?,
                base_seed,
                ballot_length: ballot_len.map_or(BallotLength::Full, BallotLength::UpTo),
                pivot: pivot_cfg(&opts),
                smdp: smdp_method(pairwise_approx),
                timing,
            };
            let (rows, status) = run_experiment_partial(&cfg);
            match &out {
                Some(path) => {
                    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&rows, BufWriter::new(file))?;
                    let dat = path.with_extension("dat");
                    let file = File::create(&dat).with_context(|| format!("creating {}", dat.display()))?;
                    let mut w = BufWriter::new(file);
                    write_dat(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_csv(&rows, io::stdout().lock())?,
            }
            if let Err(e) = status {
                bail!("experiment stopped after {} rows: {e}", rows.len());
            }
            Ok(())
        }
    }
}
