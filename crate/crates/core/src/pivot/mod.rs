//! Direct and indirect pivotal probabilities of IRV ballots.
//!
//! A ballot is *directly* pivotal when the candidate it currently supports
//! reaches the final pair and is tied with, or one vote behind, the other
//! finalist. It is *indirectly* pivotal when the supported candidate would
//! have been eliminated in some earlier round by a tie or near-tie with `t`,
//! the extra vote drops `t` instead, and the changed elimination order ends
//! with a different winner who is not the supported candidate.
//!
//! Vote totals are Poisson, and pairwise comparisons are treated as
//! independent both within a round and across rounds, so every event
//! probability is a product of Skellam terms. Ties inside an elimination
//! sequence are ignored unless [`PivotConfig::sequence_ties`] is set, in which
//! case each comparison also collects half of its tie mass.

mod engine;
mod enumerate;

use serde::Serialize;

use crate::election::{admissible_rankings, BallotProfile, Candidate, EliminationSequence, Ranking};
use crate::error::{Error, Result};
use crate::skellam::Tolerance;

pub use engine::PivotEngine;
pub use enumerate::{drop_lists, enumerate_alternates};

/// Largest candidate count the enumeration accepts (the sums visit every
/// elimination order, so cost grows like κ!·κ!).
pub const MAX_PIVOT_CANDIDATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PivotConfig {
    pub tol: Tolerance,
    /// Count half of the tie mass of every within-sequence comparison.
    pub sequence_ties: bool,
}

/// Utility the voter assigns to each candidate winning.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(values: Vec<f64>, kappa: usize) -> Result<Self> {
        if values.len() != kappa {
            return Err(Error::UtilityLength { len: values.len(), kappa });
        }
        if let Some(&bad) = values.iter().find(|u| !u.is_finite()) {
            return Err(Error::InvalidUtility(bad));
        }
        Ok(UtilityVector(values))
    }

    pub fn get(&self, c: Candidate) -> f64 {
        self.0[c.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// The ballot's candidate at `position` wins a final-round tie it would
/// otherwise have lost, or forces one and wins the coin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectEvent {
    /// 1-based position on the ballot.
    pub position: usize,
    pub candidate: Candidate,
    /// The other κ-1 candidates in elimination order; the last is the
    /// runner-up.
    pub drops: EliminationSequence,
    pub runner_up: Candidate,
    pub probability: f64,
    /// `u(candidate) - u(runner_up)`.
    pub utility_swing: Option<f64>,
}

/// Saving the ballot's candidate in round `round` changes the elimination
/// order from `base` to `alternate` and the winner to someone else.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndirectEvent {
    pub position: usize,
    pub candidate: Candidate,
    pub base: EliminationSequence,
    /// 1-based round in which `candidate` leaves `base`.
    pub round: usize,
    pub alternate: EliminationSequence,
    /// Dropped instead of `candidate`.
    pub replaced: Candidate,
    pub probability: f64,
    /// `u(alternate winner) - u(base winner)`.
    pub utility_swing: Option<f64>,
}

impl IndirectEvent {
    /// The part of `alternate` after the changed round.
    pub fn suffix(&self) -> &[Candidate] {
        &self.alternate.as_slice()[self.round..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PivotEvent {
    Direct(DirectEvent),
    Indirect(IndirectEvent),
}

impl PivotEvent {
    pub fn probability(&self) -> f64 {
        match self {
            PivotEvent::Direct(e) => e.probability,
            PivotEvent::Indirect(e) => e.probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotReport {
    pub ballot: Ranking,
    pub p_direct: f64,
    pub p_indirect: f64,
    pub p_total: f64,
    pub expected_utility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<PivotEvent>>,
}

/// Probability that the candidates are eliminated in exactly the order of
/// the full sequence `seq`, the last one winning.
pub fn drop_sequence_prob(profile: &BallotProfile, seq: &EliminationSequence, cfg: PivotConfig) -> Result<f64> {
    PivotEngine::new(profile, cfg)?.drop_sequence_prob(seq)
}

pub fn direct_pivot_prob(
    profile: &BallotProfile,
    ballot: &Ranking,
    cfg: PivotConfig,
) -> Result<(f64, Vec<DirectEvent>)> {
    let engine = PivotEngine::new(profile, cfg)?;
    engine.check_ballot(ballot)?;
    let mut events = Vec::new();
    let p = engine.direct(ballot, None, Some(&mut events)).0;
    Ok((p, events))
}

pub fn indirect_pivot_prob(
    profile: &BallotProfile,
    ballot: &Ranking,
    cfg: PivotConfig,
) -> Result<(f64, Vec<IndirectEvent>)> {
    let engine = PivotEngine::new(profile, cfg)?;
    engine.check_ballot(ballot)?;
    let mut events = Vec::new();
    let p = engine.indirect(ballot, None, Some(&mut events)).0;
    Ok((p, events))
}

pub fn total_pivot_prob(profile: &BallotProfile, ballot: &Ranking, cfg: PivotConfig) -> Result<PivotReport> {
    PivotEngine::new(profile, cfg)?.report(ballot, None, false)
}

pub fn expected_utility(
    profile: &BallotProfile,
    ballot: &Ranking,
    utility: &UtilityVector,
    cfg: PivotConfig,
) -> Result<f64> {
    let engine = PivotEngine::new(profile, cfg)?;
    Ok(engine.report(ballot, Some(utility), false)?.expected_utility.unwrap_or(0.0))
}

/// The admissible ballot with the highest expected utility.
///
/// Ballots are all duplicate-free rankings of length `1..=L`, or only those
/// of length `L` with `full_length`. Exact ties go to the lexicographically
/// smallest candidate-id sequence, a prefix sorting before its extensions.
pub fn best_ballot(
    profile: &BallotProfile,
    utility: &UtilityVector,
    cfg: PivotConfig,
    full_length: bool,
) -> Result<(Ranking, PivotReport)> {
    let engine = PivotEngine::new(profile, cfg)?;
    let ballots = admissible_rankings(profile.kappa(), profile.max_len(), full_length)?;
    let reports = engine.sweep(&ballots, Some(utility))?;
    let mut best: Option<PivotReport> = None;
    for report in reports {
        let better = match &best {
            None => true,
            Some(b) => report.expected_utility > b.expected_utility,
        };
        if better {
            best = Some(report);
        }
    }
    let best = best.ok_or(Error::NoBallots)?;
    Ok((best.ballot.clone(), best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skellam::{pmf, strictly_greater};

    fn profile(kappa: usize, rates: &[(&[usize], f64)]) -> BallotProfile {
        let rates = rates
            .iter()
            .map(|(r, x)| (Ranking::from_indices(r, kappa).unwrap(), *x))
            .collect();
        BallotProfile::new(kappa, kappa, rates).unwrap()
    }

    fn ballot(ids: &[usize], kappa: usize) -> Ranking {
        Ranking::from_indices(ids, kappa).unwrap()
    }

    fn seq(ids: &[usize]) -> EliminationSequence {
        EliminationSequence::from_indices(ids, ids.len()).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn drop_sequence_two_candidates() {
        let lambda = 4.0;
        let p = profile(2, &[(&[0], lambda), (&[1], lambda)]);
        let got = drop_sequence_prob(&p, &seq(&[1, 0]), PivotConfig::default()).unwrap();
        let want = (1.0 - pmf(0, lambda, lambda, tol())) / 2.0;
        assert!((got - want).abs() < 1e-14);

        let p = profile(2, &[(&[0], 5.0), (&[1], 0.0)]);
        let got = drop_sequence_prob(&p, &seq(&[1, 0]), PivotConfig::default()).unwrap();
        assert!((got - 0.993_262_053_000_914_7).abs() < 1e-15);
    }

    #[test]
    fn drop_sequence_rejects_partial_orders() {
        let p = profile(3, &[(&[0], 1.0)]);
        let partial = EliminationSequence::from_indices(&[0, 1], 3).unwrap();
        assert!(drop_sequence_prob(&p, &partial, PivotConfig::default()).is_err());
    }

    #[test]
    fn uniform_three_candidate_sequences_sum_below_one() {
        // Singleton ballots: the first drop exhausts its ballots, so the final
        // pair still stands at the uniform rate.
        let lambda = 10.0;
        let p = profile(3, &[(&[0], lambda), (&[1], lambda), (&[2], lambda)]);
        let q = strictly_greater(lambda, lambda, tol());
        let total: f64 = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
            .iter()
            .map(|s| drop_sequence_prob(&p, &seq(s), PivotConfig::default()).unwrap())
            .sum();
        // three first drops, each q^2, then the final pair splits with mass 2q
        let closed = 3.0 * q * q * 2.0 * q;
        assert!((total - closed).abs() < 1e-14, "{total} vs {closed}");
        assert!(total < 1.0);
    }

    #[test]
    fn two_candidate_direct_reduction() {
        let p = profile(2, &[(&[0], 3.0), (&[1], 4.5)]);
        let report = total_pivot_prob(&p, &ballot(&[0], 2), PivotConfig::default()).unwrap();
        let want = 0.5 * pmf(0, 3.0, 4.5, tol()) + 0.5 * pmf(-1, 3.0, 4.5, tol());
        assert_eq!(report.p_direct, want);
        assert_eq!(report.p_indirect, 0.0);
        assert_eq!(report.p_total, report.p_direct);
    }

    #[test]
    fn three_candidate_direct_closed_form() {
        let p = profile(3, &[(&[0], 10.0), (&[1], 10.0), (&[2], 10.0)]);
        let (pd, events) = direct_pivot_prob(&p, &ballot(&[0], 3), PivotConfig::default()).unwrap();
        // S = [B, C] or [C, B]: the first drop beats neither A nor the other
        // finalist, then A ties or trails the finalist by one.
        let q = strictly_greater(10.0, 10.0, tol());
        let tie = 0.5 * pmf(0, 10.0, 10.0, tol()) + 0.5 * pmf(-1, 10.0, 10.0, tol());
        assert_eq!(events.len(), 2);
        assert!((pd - 2.0 * q * q * tie).abs() < 1e-15);
        // frozen from scipy's Skellam sf/pmf
        assert!((pd - 0.036_720_468_078_295).abs() < 1e-13, "{pd}");
    }

    #[test]
    fn lower_positions_need_higher_candidates_dropped_early() {
        let p = profile(3, &[(&[0], 5.0), (&[1], 6.0), (&[2], 7.0)]);
        let (_, events) = direct_pivot_prob(&p, &ballot(&[0, 1, 2], 3), PivotConfig::default()).unwrap();
        for e in &events {
            let higher = &[Candidate(0), Candidate(1), Candidate(2)][..e.position - 1];
            let early = &e.drops.as_slice()[..1];
            assert!(higher.iter().all(|h| early.contains(h)), "{e:?}");
        }
        // position 1: 2 drop lists; position 2: A must go first; position 3
        // would need both A and B gone before the final round.
        assert_eq!(events.iter().filter(|e| e.position == 1).count(), 2);
        assert_eq!(events.iter().filter(|e| e.position == 2).count(), 1);
        assert_eq!(events.iter().filter(|e| e.position == 3).count(), 0);
    }

    #[test]
    fn indirect_vanishes_for_two_candidates() {
        let p = profile(2, &[(&[0], 3.0), (&[1], 3.0)]);
        let (pi, events) = indirect_pivot_prob(&p, &ballot(&[1, 0], 2), PivotConfig::default()).unwrap();
        assert_eq!(pi, 0.0);
        assert!(events.is_empty());
    }

    #[test]
    fn indirect_events_respect_constraints() {
        let p = profile(4, &[(&[0, 2], 6.0), (&[1], 5.0), (&[2, 1], 5.0), (&[3, 0], 4.0)]);
        let (pi, events) = indirect_pivot_prob(&p, &ballot(&[0, 3], 4), PivotConfig::default()).unwrap();
        assert!(pi > 0.0);
        for e in &events {
            let y = e.round;
            assert!(y <= 2);
            assert_eq!(e.base.as_slice()[y - 1], e.candidate);
            assert_eq!(&e.base.as_slice()[..y - 1], &e.alternate.as_slice()[..y - 1]);
            assert_eq!(e.alternate.as_slice()[y - 1], e.replaced);
            assert_ne!(e.replaced, e.candidate);
            assert_ne!(e.base.last(), e.alternate.last());
            assert_ne!(e.alternate.last(), Some(e.candidate));
            if e.position == 2 {
                assert!(e.base.as_slice()[..y - 1].contains(&Candidate(0)));
            }
        }
    }

    #[test]
    fn all_zero_rates() {
        let p = profile(2, &[(&[0], 0.0), (&[1], 0.0)]);
        let r = total_pivot_prob(&p, &ballot(&[0], 2), PivotConfig::default()).unwrap();
        assert_eq!(r.p_total, 0.5);

        // Nobody strictly beats anybody, so no drop order has mass...
        let p = profile(3, &[(&[0], 0.0)]);
        let r = total_pivot_prob(&p, &ballot(&[0], 3), PivotConfig::default()).unwrap();
        assert_eq!(r.p_total, 0.0);
        // ...unless within-sequence ties are counted.
        let cfg = PivotConfig { sequence_ties: true, ..Default::default() };
        let r = total_pivot_prob(&p, &ballot(&[0], 3), cfg).unwrap();
        // two drop lists, each (1/2)^2 for the first round, then 1/2 tie term
        assert_eq!(r.p_direct, 2.0 * 0.25 * 0.5);
    }

    #[test]
    fn utility_examples() {
        let p = profile(3, &[(&[0, 1], 6.0), (&[1], 5.0), (&[2, 1], 5.0)]);
        let flat = UtilityVector::new(vec![2.0; 3], 3).unwrap();
        for b in admissible_rankings(3, 3, false).unwrap() {
            assert_eq!(expected_utility(&p, &b, &flat, PivotConfig::default()).unwrap(), 0.0);
        }
        let (best, _) = best_ballot(&p, &flat, PivotConfig::default(), false).unwrap();
        assert_eq!(best, ballot(&[0], 3));

        let p2 = profile(2, &[(&[0], 4.0), (&[1], 5.0)]);
        let u = UtilityVector::new(vec![1.0, 0.0], 2).unwrap();
        let eu = expected_utility(&p2, &ballot(&[0], 2), &u, PivotConfig::default()).unwrap();
        let pd = direct_pivot_prob(&p2, &ballot(&[0], 2), PivotConfig::default()).unwrap().0;
        assert_eq!(eu, pd);
        let (best, report) = best_ballot(&p2, &u, PivotConfig::default(), false).unwrap();
        assert_eq!(best, ballot(&[0], 2));
        assert_eq!(report.expected_utility, Some(pd));
    }

    #[test]
    fn utility_validation() {
        assert!(matches!(UtilityVector::new(vec![1.0], 2), Err(Error::UtilityLength { .. })));
        assert!(matches!(UtilityVector::new(vec![1.0, f64::NAN], 2), Err(Error::InvalidUtility(_))));
    }

    #[test]
    fn ballots_must_fit_the_profile() {
        let p = BallotProfile::new(3, 1, vec![(ballot(&[0], 3), 1.0)]).unwrap();
        assert!(total_pivot_prob(&p, &ballot(&[0, 1], 3), PivotConfig::default()).is_err());
        let big = Ranking::from_indices(&[0], 10).unwrap();
        let p10 = BallotProfile::new(10, 1, vec![(big.clone(), 1.0)]).unwrap();
        assert!(matches!(total_pivot_prob(&p10, &big, PivotConfig::default()), Err(Error::Config(_))));
    }
}
