//! Monte-Carlo estimates of pivotal frequencies from simulated counts.
//!
//! Each draw samples a Poisson count for every ranking in the profile, counts
//! the election with a random tie-break priority, adds the ballot and counts
//! again with the same priority. Nothing here relies on the independence
//! assumptions of the analytic engine, so it serves as ground truth.
//!
//! Draws are grouped into fixed-size chunks and chunk `k` takes stream `k` of
//! the seeded generators, so results do not depend on how many threads run.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::election::{count_irv, BallotProfile, Candidate, CandidateSet, Ranking};
use crate::error::{Error, Result};
use crate::pivot::UtilityVector;

const CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub draws: u64,
    pub seed: u64,
    pub tie_coin_seed: u64,
}

impl OracleConfig {
    pub fn new(draws: u64, seed: u64) -> Result<Self> {
        let cfg = OracleConfig { draws, seed, tie_coin_seed: seed ^ 0x9e37_79b9_7f4a_7c15 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::Config("oracle needs at least one draw".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub p_direct_hat: f64,
    pub p_indirect_hat: f64,
    pub p_total_hat: f64,
    pub stderr_total: f64,
    pub draws_used: u64,
    pub direct_count: u64,
    pub indirect_count: u64,
    /// Mean of `u(w1) - u(w0)`, when a utility vector was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_utility_hat: Option<f64>,
}

impl OracleEstimate {
    /// Standard error of the direct or indirect frequency.
    pub fn stderr_of(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.draws_used as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    None,
    Direct,
    Indirect,
}

#[derive(Clone, Default)]
struct Tally {
    direct: u64,
    indirect: u64,
    utility: f64,
}

/// Effect of adding `ballot` to one realized count.
///
/// `drops` holds the with-ballot elimination order. The draw is direct when
/// the new winner is the ballot's top candidate among those still standing
/// in the final round.
fn classify(kappa: usize, ballot: &[Candidate], w0: Candidate, w1: Candidate, drops: &[Candidate]) -> Pivot {
    if w0 == w1 {
        return Pivot::None;
    }
    let early: CandidateSet = drops[..kappa - 2].iter().copied().collect();
    let top = ballot.iter().copied().find(|c| !early.contains(*c));
    if top == Some(w1) {
        Pivot::Direct
    } else {
        Pivot::Indirect
    }
}

fn check_ballots(profile: &BallotProfile, ballots: &[Ranking]) -> Result<()> {
    for b in ballots {
        profile.check_ranking(b)?;
    }
    Ok(())
}

fn chunk_rngs(cfg: &OracleConfig, chunk: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut counts = ChaCha8Rng::seed_from_u64(cfg.seed);
    counts.set_stream(chunk);
    let mut coins = ChaCha8Rng::seed_from_u64(cfg.tie_coin_seed);
    coins.set_stream(chunk);
    (counts, coins)
}

fn run(
    profile: &BallotProfile,
    ballots: &[Ranking],
    utility: Option<&UtilityVector>,
    cfg: &OracleConfig,
) -> Result<Vec<Tally>> {
    cfg.validate()?;
    check_ballots(profile, ballots)?;
    if let Some(u) = utility {
        if u.values().len() != profile.kappa() {
            return Err(Error::UtilityLength { len: u.values().len(), kappa: profile.kappa() });
        }
    }
    let kappa = profile.kappa();
    let rankings: Vec<&[Candidate]> = profile.entries().iter().map(|(r, _)| r.candidates()).collect();
    let dists: Vec<Option<Poisson<f64>>> = profile
        .entries()
        .iter()
        .map(|(_, rate)| (*rate > 0.0).then(|| Poisson::new(*rate).expect("rates are finite and positive")))
        .collect();
    let n_chunks = cfg.draws.div_ceil(CHUNK);

    let per_chunk: Vec<Vec<Tally>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let (mut rng, mut coin) = chunk_rngs(cfg, chunk);
            let n = CHUNK.min(cfg.draws - chunk * CHUNK);
            let mut tallies = vec![Tally::default(); ballots.len()];
            let mut counts = vec![0u64; rankings.len()];
            let mut priority: Vec<u8> = (0..kappa as u8).collect();
            let mut rank = vec![0u8; kappa];
            let mut drops0 = Vec::with_capacity(kappa);
            let mut drops1 = Vec::with_capacity(kappa);
            for _ in 0..n {
                for (k, d) in counts.iter_mut().zip(&dists) {
                    *k = d.as_ref().map_or(0, |d| d.sample(&mut rng) as u64);
                }
                priority.shuffle(&mut coin);
                for (pos, &c) in priority.iter().enumerate() {
                    rank[c as usize] = pos as u8;
                }
                let base = rankings.iter().copied().zip(counts.iter().copied());
                let w0 = count_irv(kappa, base.clone(), &rank, &mut drops0);
                for (b, tally) in ballots.iter().zip(tallies.iter_mut()) {
                    let with = base.clone().chain(std::iter::once((b.candidates(), 1)));
                    let w1 = count_irv(kappa, with, &rank, &mut drops1);
                    match classify(kappa, b.candidates(), w0, w1, &drops1) {
                        Pivot::None => {}
                        Pivot::Direct => tally.direct += 1,
                        Pivot::Indirect => tally.indirect += 1,
                    }
                    if let Some(u) = utility {
                        tally.utility += u.get(w1) - u.get(w0);
                    }
                }
            }
            tallies
        })
        .collect();

    let mut total = vec![Tally::default(); ballots.len()];
    for chunk in per_chunk {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.direct += c.direct;
            t.indirect += c.indirect;
            t.utility += c.utility;
        }
    }
    Ok(total)
}

fn estimate(t: &Tally, draws: u64, with_utility: bool) -> OracleEstimate {
    let n = draws as f64;
    let pd = t.direct as f64 / n;
    let pi = t.indirect as f64 / n;
    let pt = pd + pi;
    OracleEstimate {
        p_direct_hat: pd,
        p_indirect_hat: pi,
        p_total_hat: pt,
        stderr_total: (pt * (1.0 - pt) / n).sqrt(),
        draws_used: draws,
        direct_count: t.direct,
        indirect_count: t.indirect,
        expected_utility_hat: with_utility.then(|| t.utility / n),
    }
}

pub fn mc_pivot_estimate(profile: &BallotProfile, ballot: &Ranking, cfg: &OracleConfig) -> Result<OracleEstimate> {
    Ok(mc_pivot_batch(profile, std::slice::from_ref(ballot), None, cfg)?.remove(0))
}

/// Estimates for several ballots from the same simulated counts.
pub fn mc_pivot_batch(
    profile: &BallotProfile,
    ballots: &[Ranking],
    utility: Option<&UtilityVector>,
    cfg: &OracleConfig,
) -> Result<Vec<OracleEstimate>> {
    let tallies = run(profile, ballots, utility, cfg)?;
    Ok(tallies.iter().map(|t| estimate(t, cfg.draws, utility.is_some())).collect())
}

pub fn mc_expected_utility(
    profile: &BallotProfile,
    ballot: &Ranking,
    utility: &UtilityVector,
    cfg: &OracleConfig,
) -> Result<f64> {
    let est = mc_pivot_batch(profile, std::slice::from_ref(ballot), Some(utility), cfg)?.remove(0);
    Ok(est.expected_utility_hat.unwrap_or(0.0))
}
