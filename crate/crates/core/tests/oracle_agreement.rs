//! Analytic values against simulated counts.
//!
//! Beyond two candidates the analytic engine multiplies pairwise
//! comparisons as if they were independent, so only order-of-magnitude
//! agreement is expected there. The plurality sum conditions on the tie
//! level exactly and must agree within sampling error.

use irv_pivot::election::{admissible_rankings, BallotProfile, Ranking};
use irv_pivot::oracle::{mc_pivot_batch, mc_pivot_estimate, OracleConfig};
use irv_pivot::pivot::{best_ballot, expected_utility, total_pivot_prob, PivotConfig, UtilityVector};
use irv_pivot::skellam::Tolerance;
use irv_pivot::smdp::{smdp_pivot_prob, SmdpMethod};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const DRAWS: u64 = 10_000_000;

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

fn within_factor(a: f64, b: f64, factor: f64) -> bool {
    a > 0.0 && b > 0.0 && a / b <= factor && b / a <= factor
}

#[test]
fn three_singleton_blocs_direct() {
    let p = profile(3, &[(&[0], 10.0), (&[1], 10.0), (&[2], 10.0)]);
    let r = total_pivot_prob(&p, &ballot(&[0], 3), PivotConfig::default()).unwrap();
    assert!((r.p_direct - 0.036_720_468_078_295).abs() < 1e-13);
    let est = mc_pivot_estimate(&p, &ballot(&[0], 3), &OracleConfig::new(DRAWS, 1).unwrap()).unwrap();
    // simulated direct frequency, seed 1: 0.0903408
    assert!((est.p_direct_hat - 0.090_340_8).abs() < 1e-12);
    assert!(within_factor(r.p_direct, est.p_direct_hat, 10.0), "{r:?} {est:?}");
    // singleton ballots exhaust, so saving A can only hand A the win
    assert_eq!(est.indirect_count, 0);
}

#[test]
fn saved_favourite_changes_winner() {
    let p = profile(3, &[(&[0, 2], 6.0), (&[1], 5.0), (&[2, 1], 5.0)]);
    let r = total_pivot_prob(&p, &ballot(&[0], 3), PivotConfig::default()).unwrap();
    let est = mc_pivot_estimate(&p, &ballot(&[0], 3), &OracleConfig::new(DRAWS, 1).unwrap()).unwrap();
    assert!(r.p_indirect > 0.0);
    assert!(est.p_indirect_hat > 10.0 * est.stderr_of(est.p_indirect_hat));
    assert!(within_factor(r.p_indirect, est.p_indirect_hat, 10.0), "{r:?} {est:?}");
    assert!(within_factor(r.p_total, est.p_total_hat, 10.0), "{r:?} {est:?}");
}

#[test]
fn utility_ordering_agrees_with_simulation() {
    let p = profile(3, &[(&[0, 2], 6.0), (&[1], 5.0), (&[2, 1], 5.0)]);
    let u = UtilityVector::new(vec![1.0, 0.6, 0.0], 3).unwrap();
    let ab = ballot(&[0, 1], 3);
    let ac = ballot(&[0, 2], 3);
    let cfg = PivotConfig::default();
    let analytic = expected_utility(&p, &ab, &u, cfg).unwrap() - expected_utility(&p, &ac, &u, cfg).unwrap();
    let est = mc_pivot_batch(&p, &[ab, ac], Some(&u), &OracleConfig::new(DRAWS, 2).unwrap()).unwrap();
    let simulated = est[0].expected_utility_hat.unwrap() - est[1].expected_utility_hat.unwrap();
    assert!(analytic > 0.0, "{analytic}");
    assert!(simulated > 0.0, "{simulated}");
}

#[test]
fn best_ballot_with_a_weak_favourite() {
    let p = profile(3, &[(&[0], 3.0), (&[1, 0], 9.0), (&[2], 10.0)]);
    let u = UtilityVector::new(vec![1.0, 0.6, 0.0], 3).unwrap();
    let cfg = PivotConfig::default();
    let all = admissible_rankings(3, 3, false).unwrap();
    assert_eq!(all.len(), 15);
    let mut best = (f64::NEG_INFINITY, None);
    for b in &all {
        let eu = expected_utility(&p, b, &u, cfg).unwrap();
        if eu > best.0 {
            best = (eu, Some(b.clone()));
        }
    }
    let (chosen, report) = best_ballot(&p, &u, cfg, false).unwrap();
    assert_eq!(Some(chosen.clone()), best.1);
    assert_eq!(report.expected_utility, Some(best.0));
    // Ranking the compromise second beats bullet-voting the favourite, and
    // the full ranking ties it, so the shorter one is kept.
    assert_eq!(chosen, ballot(&[0, 1], 3));
    let bullet = expected_utility(&p, &ballot(&[0], 3), &u, cfg).unwrap();
    assert!(bullet < best.0);
}

/// Weight ½ when c is level with, or one behind, a unique leader among the
/// others.
fn simulate_plurality(rates: &[f64], c: usize, draws: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<Poisson<f64>> = rates.iter().map(|&l| Poisson::new(l).unwrap()).collect();
    let mut hits = 0u64;
    let mut counts = vec![0u64; rates.len()];
    for _ in 0..draws {
        for (x, d) in counts.iter_mut().zip(&dists) {
            *x = d.sample(&mut rng) as u64;
        }
        let lead = (0..rates.len()).filter(|&k| k != c).map(|k| counts[k]).max().unwrap();
        let leaders = (0..rates.len()).filter(|&k| k != c && counts[k] == lead).count();
        if leaders == 1 && lead >= 1 && (counts[c] == lead || counts[c] + 1 == lead) {
            hits += 1;
        }
    }
    let q = hits as f64 / draws as f64;
    (0.5 * q, 0.5 * (q * (1.0 - q) / draws as f64).sqrt())
}

#[test]
fn plurality_three_even_blocs() {
    let p = profile(3, &[(&[0], 10.0), (&[1], 10.0), (&[2], 10.0)]);
    let exact = smdp_pivot_prob(&p, irv_pivot::election::Candidate(0), Tolerance::default(), SmdpMethod::Exact).unwrap();
    let (mc, se) = simulate_plurality(&[10.0, 10.0, 10.0], 0, DRAWS, 4);
    assert!((exact - mc).abs() < 4.0 * se, "{exact} vs {mc} ± {se}");
    let approx =
        smdp_pivot_prob(&p, irv_pivot::election::Candidate(0), Tolerance::default(), SmdpMethod::PairwiseApprox).unwrap();
    assert!(within_factor(approx, exact, 3.0));
}
