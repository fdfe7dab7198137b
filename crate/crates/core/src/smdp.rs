//! Pivotal probabilities under single-member district plurality.
//!
//! Only first choices count. A vote for `c` changes the winner when `c` is
//! level with, or one vote behind, some opponent `j` and every other
//! candidate is strictly below that level; the fair coin gives the factor ½.

use serde::Serialize;

use crate::election::{BallotProfile, Candidate, CandidateSet, Ranking};
use crate::error::{Error, Result};
use crate::pivot::PivotReport;
use crate::skellam::{ln_poisson, ln_poisson_cdf, ln_sum_log_concave, strictly_greater, ties, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmdpMethod {
    /// Condition on the tie level and sum over it.
    #[default]
    Exact,
    /// Treat "c ties j" and "k trails j" as independent events.
    PairwiseApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmdpReport {
    pub candidate: Candidate,
    pub p_pivotal: f64,
}

impl SmdpReport {
    /// The same record in the shape of an IRV report for the one-name ballot.
    pub fn to_pivot_report(self, kappa: usize) -> PivotReport {
        PivotReport {
            ballot: Ranking::new(vec![self.candidate], kappa).expect("candidate index checked on construction"),
            p_direct: self.p_pivotal,
            p_indirect: 0.0,
            p_total: self.p_pivotal,
            expected_utility: None,
            events: None,
        }
    }
}

pub fn first_choice_rates(profile: &BallotProfile) -> Vec<f64> {
    profile.candidates().map(|c| profile.total_in(c, CandidateSet::EMPTY)).collect()
}

pub fn smdp_pivot_prob(profile: &BallotProfile, c: Candidate, tol: Tolerance, method: SmdpMethod) -> Result<f64> {
    let kappa = profile.kappa();
    if c.index() >= kappa {
        return Err(Error::UnknownCandidate { candidate: c.index(), kappa });
    }
    let rates = first_choice_rates(profile);
    Ok(match method {
        SmdpMethod::Exact => exact(&rates, c.index(), tol),
        SmdpMethod::PairwiseApprox => pairwise(&rates, c.index(), tol),
    })
}

/// Reports for every candidate, in id order.
pub fn smdp_sweep(profile: &BallotProfile, tol: Tolerance, method: SmdpMethod) -> Vec<SmdpReport> {
    let rates = first_choice_rates(profile);
    (0..rates.len())
        .map(|c| SmdpReport {
            candidate: Candidate(c as u8),
            p_pivotal: match method {
                SmdpMethod::Exact => exact(&rates, c, tol),
                SmdpMethod::PairwiseApprox => pairwise(&rates, c, tol),
            },
        })
        .collect()
}

fn exact(rates: &[f64], c: usize, tol: Tolerance) -> f64 {
    let mut total = 0.0;
    for j in (0..rates.len()).filter(|&j| j != c) {
        let others: Vec<f64> = (0..rates.len()).filter(|&k| k != c && k != j).map(|k| rates[k]).collect();
        let (lc, lj) = (rates[c], rates[j]);
        if others.is_empty() {
            total += ties(lc, lj, tol).pivotal();
            continue;
        }
        // The level m is j's count; c has m or m-1 and everyone else < m,
        // so m >= 1. The summand is log-concave in m.
        if lj == 0.0 {
            continue;
        }
        let ln_c = |m: i64| {
            let (x, y) = (ln_poisson(m, lc), ln_poisson(m - 1, lc));
            let hi = x.max(y);
            if hi == f64::NEG_INFINITY {
                hi
            } else {
                hi + ((x - hi).exp() + (y - hi).exp()).ln() + 0.5f64.ln()
            }
        };
        let term = |m: i64| {
            let mut s = ln_c(m) + ln_poisson(m, lj);
            for &lk in &others {
                if s == f64::NEG_INFINITY {
                    break;
                }
                s += ln_poisson_cdf(m - 1, lk, tol);
            }
            s
        };
        let start = if lc == 0.0 { 1 } else { lc.max(lj).round().max(1.0) as i64 };
        total += ln_sum_log_concave(term, 1, i64::MAX, start, tol.inner_eps()).exp();
    }
    total.min(1.0)
}

fn pairwise(rates: &[f64], c: usize, tol: Tolerance) -> f64 {
    let mut total = 0.0;
    for j in (0..rates.len()).filter(|&j| j != c) {
        let mut p = ties(rates[c], rates[j], tol).pivotal();
        for k in (0..rates.len()).filter(|&k| k != c && k != j) {
            p *= strictly_greater(rates[j], rates[k], tol);
        }
        total += p;
    }
    total.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skellam::pmf;

    fn profile(kappa: usize, firsts: &[f64]) -> BallotProfile {
        let rates = firsts
            .iter()
            .enumerate()
            .map(|(c, &x)| (Ranking::from_indices(&[c], kappa).unwrap(), x))
            .collect();
        BallotProfile::new(kappa, 1, rates).unwrap()
    }

    fn poisson(k: i64, l: f64) -> f64 {
        ln_poisson(k, l).exp()
    }

    // Plain triple sum over bounded counts.
    fn brute_three(l: [f64; 3], cap: i64) -> f64 {
        let mut p = 0.0;
        for j in [1usize, 2] {
            let k = 3 - j;
            for m in 1..cap {
                let tie = 0.5 * poisson(m, l[0]) + 0.5 * poisson(m - 1, l[0]);
                let below: f64 = (0..m).map(|x| poisson(x, l[k])).sum();
                p += tie * poisson(m, l[j]) * below;
            }
        }
        p
    }

    #[test]
    fn two_candidates_reduce_to_tie_terms() {
        let p = profile(2, &[3.0, 4.5]);
        let got = smdp_pivot_prob(&p, Candidate(0), Tolerance::default(), SmdpMethod::Exact).unwrap();
        let tol = Tolerance::default();
        assert_eq!(got, 0.5 * pmf(0, 3.0, 4.5, tol) + 0.5 * pmf(-1, 3.0, 4.5, tol));
        let approx = smdp_pivot_prob(&p, Candidate(0), tol, SmdpMethod::PairwiseApprox).unwrap();
        assert_eq!(got, approx);
    }

    #[test]
    fn exact_matches_brute_force() {
        for l in [[10.0, 10.0, 10.0], [4.0, 7.0, 2.5], [0.0, 3.0, 3.0], [20.0, 5.0, 1.0]] {
            let got = exact(&l, 0, Tolerance::default());
            let want = brute_three(l, 200);
            assert!((got - want).abs() < 1e-13, "{l:?}: {got} vs {want}");
        }
    }

    #[test]
    fn symmetric_profiles_are_symmetric() {
        let p = profile(3, &[10.0, 10.0, 10.0]);
        let r = smdp_sweep(&p, Tolerance::default(), SmdpMethod::Exact);
        assert_eq!(r[0].p_pivotal, r[1].p_pivotal);
        assert_eq!(r[1].p_pivotal, r[2].p_pivotal);
        // frozen from the bounded triple sum above
        assert!((r[0].p_pivotal - brute_three([10.0; 3], 200)).abs() < 1e-13);
    }

    #[test]
    fn zero_opponents_level() {
        // Nobody can be strictly below a level-0 tie, and c cannot reach a
        // positive level with no votes unless j has exactly one.
        let got = exact(&[0.0, 0.0, 0.0], 0, Tolerance::default());
        assert_eq!(got, 0.0);
        let got = exact(&[0.0, 2.0, 0.0], 0, Tolerance::default());
        assert!((got - 0.5 * 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn decreases_away_from_leader() {
        let tol = Tolerance::default();
        let mut last = f64::INFINITY;
        for lc in [30.0, 25.0, 20.0, 15.0, 10.0, 5.0] {
            let p = exact(&[lc, 30.0, 10.0], 0, tol);
            assert!(p < last, "{lc}: {p} >= {last}");
            last = p;
        }
    }

    #[test]
    fn unknown_candidate() {
        let p = profile(2, &[1.0, 1.0]);
        assert!(smdp_pivot_prob(&p, Candidate(5), Tolerance::default(), SmdpMethod::Exact).is_err());
    }

    #[test]
    fn report_shape() {
        let r = SmdpReport { candidate: Candidate(1), p_pivotal: 0.25 }.to_pivot_report(3);
        assert_eq!(r.p_indirect, 0.0);
        assert_eq!(r.p_total, 0.25);
        assert_eq!(r.ballot.indices(), vec![1]);
    }
}
