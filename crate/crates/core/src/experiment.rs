//! IRV vs plurality comparison over generated electorates.
//!
//! For each run and candidate count a profile is generated, the pivotal
//! probabilities of every admissible IRV ballot are summed, and so are the
//! plurality pivotal probabilities of every candidate.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::election::{admissible_rankings, BallotProfile};
use crate::error::{Error, Result};
use crate::pivot::{PivotConfig, PivotEngine, MAX_PIVOT_CANDIDATES};
use crate::smdp::{smdp_sweep, SmdpMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceModel {
    Uniform,
    Powerlaw,
}

impl fmt::Display for PreferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreferenceModel::Uniform => "uniform",
            PreferenceModel::Powerlaw => "powerlaw",
        })
    }
}

impl FromStr for PreferenceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PreferenceModel::Uniform),
            "powerlaw" | "power-law" => Ok(PreferenceModel::Powerlaw),
            _ => Err(Error::Config(format!("unknown distribution {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum System {
    #[serde(rename = "IRV")]
    Irv,
    #[serde(rename = "SMDP")]
    Smdp,
}

/// Which rankings voters may cast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallotLength {
    /// Every candidate ranked.
    #[default]
    Full,
    /// Any ranking of length `1..=L` (capped at κ).
    UpTo(usize),
}

impl BallotLength {
    fn resolve(self, kappa: usize) -> (usize, bool) {
        match self {
            BallotLength::Full => (kappa, true),
            BallotLength::UpTo(l) => (l.min(kappa), false),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kappas: Vec<usize>,
    pub n_voters: f64,
    pub runs: u64,
    pub distribution: PreferenceModel,
    pub base_seed: u64,
    pub ballot_length: BallotLength,
    pub pivot: PivotConfig,
    pub smdp: SmdpMethod,
    /// Record wall time per row. Off by default so output is reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kappas: vec![3, 4, 5],
            n_voters: 1000.0,
            runs: 100,
            distribution: PreferenceModel::Powerlaw,
            base_seed: 0,
            ballot_length: BallotLength::Full,
            pivot: PivotConfig::default(),
            smdp: SmdpMethod::Exact,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.n_voters.is_finite() && self.n_voters > 0.0) {
            return Err(Error::Config(format!("voter count {} must be positive", self.n_voters)));
        }
        if self.kappas.is_empty() {
            return Err(Error::Config("no candidate counts given".into()));
        }
        if let Some(&k) = self.kappas.iter().find(|&&k| k < 2) {
            return Err(Error::CandidateCount(k));
        }
        if self.ballot_length == BallotLength::UpTo(0) {
            return Err(Error::Config("ballot length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub run_id: u64,
    pub kappa: usize,
    pub system: System,
    pub distribution: PreferenceModel,
    pub total_pivot: f64,
    pub seconds: Option<f64>,
}

/// Every admissible ranking at rate `n / count`.
pub fn gen_uniform_profile(kappa: usize, max_len: usize, n_voters: f64, full_length: bool) -> Result<BallotProfile> {
    let rankings = admissible_rankings(kappa, max_len, full_length)?;
    let rate = n_voters / rankings.len() as f64;
    BallotProfile::new(kappa, max_len, rankings.into_iter().map(|r| (r, rate)).collect())
}

/// Half the electorate holds one seeded ranking; the other half is spread
/// evenly over every admissible ranking, the focal one included.
pub fn gen_powerlaw_profile(
    kappa: usize,
    max_len: usize,
    n_voters: f64,
    seed: u64,
    full_length: bool,
) -> Result<BallotProfile> {
    let rankings = admissible_rankings(kappa, max_len, full_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let focal = rng.random_range(0..rankings.len());
    let share = n_voters / 2.0 / rankings.len() as f64;
    let rates = rankings
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, if i == focal { n_voters / 2.0 + share } else { share }))
        .collect();
    BallotProfile::new(kappa, max_len, rates)
}

fn job(cfg: &ExperimentConfig, run_id: u64, kappa: usize) -> Result<[RunResult; 2]> {
    if kappa > MAX_PIVOT_CANDIDATES {
        return Err(Error::Config(format!(
            "pivotal enumeration supports at most {MAX_PIVOT_CANDIDATES} candidates, got {kappa}"
        )));
    }
    let (max_len, full) = cfg.ballot_length.resolve(kappa);
    let profile = match cfg.distribution {
        PreferenceModel::Uniform => gen_uniform_profile(kappa, max_len, cfg.n_voters, full)?,
        PreferenceModel::Powerlaw => {
            gen_powerlaw_profile(kappa, max_len, cfg.n_voters, cfg.base_seed.wrapping_add(run_id), full)?
        }
    };

    let start = Instant::now();
    let engine = PivotEngine::new(&profile, cfg.pivot)?;
    let ballots = admissible_rankings(kappa, max_len, full)?;
    let irv: f64 = engine.sweep(&ballots, None)?.iter().map(|r| r.p_total).sum();
    let irv_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let smdp: f64 = smdp_sweep(&profile, cfg.pivot.tol, cfg.smdp).iter().map(|r| r.p_pivotal).sum();
    let smdp_secs = start.elapsed().as_secs_f64();

    let row = |system, total_pivot, secs| RunResult {
        run_id,
        kappa,
        system,
        distribution: cfg.distribution,
        total_pivot,
        seconds: cfg.timing.then_some(secs),
    };
    Ok([row(System::Irv, irv, irv_secs), row(System::Smdp, smdp, smdp_secs)])
}

/// Runs every (run, κ) job. Returns the rows completed before the first
/// failing job in output order, together with that failure.
pub fn run_experiment_partial(cfg: &ExperimentConfig) -> (Vec<RunResult>, Result<()>) {
    if let Err(e) = cfg.validate() {
        return (Vec::new(), Err(e));
    }
    let mut keys: Vec<(u64, usize)> = (0..cfg.runs)
        .flat_map(|run| cfg.kappas.iter().map(move |&k| (run, k)))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let outcomes: Vec<Result<[RunResult; 2]>> = keys.par_iter().map(|&(run, k)| job(cfg, run, k)).collect();
    let mut rows = Vec::with_capacity(outcomes.len() * 2);
    for outcome in outcomes {
        match outcome {
            Ok(pair) => rows.extend(pair),
            Err(e) => return (rows, Err(e)),
        }
    }
    (rows, Ok(()))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    let (rows, status) = run_experiment_partial(cfg);
    status.map(|_| rows)
}

pub fn write_csv<W: Write>(rows: &[RunResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Whitespace-separated columns for gnuplot: one line per (run, κ) with the
/// IRV and SMDP totals side by side.
pub fn write_dat<W: Write>(rows: &[RunResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# run_id kappa irv_total smdp_total")?;
    for pair in rows.chunks(2) {
        if let [irv, smdp] = pair {
            writeln!(out, "{} {} {:e} {:e}", irv.run_id, irv.kappa, irv.total_pivot, smdp.total_pivot)?;
        }
    }
    Ok(())
}
