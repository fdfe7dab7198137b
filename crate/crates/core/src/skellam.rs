//! Poisson and Skellam probabilities.
//!
//! Everything is evaluated in log space so that vanishingly small tie
//! probabilities keep their relative accuracy instead of collapsing to zero.
//! Poisson log-masses use Loader's saddle-point form; Skellam masses are the
//! Poisson convolution summed outward from its largest term, and the tail
//! `P(X > Y)` is accumulated with the backward Bessel recurrence.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Truncation bound for the infinite sums.
///
/// Sums stop once the remaining tail is below `tail_eps` times the partial
/// sum; since every sum here is at most one, that also bounds the absolute
/// error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    tail_eps: f64,
}

impl Tolerance {
    pub fn new(tail_eps: f64) -> Result<Self> {
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::Tolerance(tail_eps));
        }
        Ok(Tolerance { tail_eps })
    }

    pub fn tail_eps(self) -> f64 {
        self.tail_eps
    }

    // Individual masses are summed well past the caller's bound; the extra
    // terms cost little because the tails decay at least geometrically.
    pub(crate) fn inner_eps(self) -> f64 {
        self.tail_eps * 1e-4
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { tail_eps: DEFAULT_TAIL_EPS }
    }
}

fn check_rate(rate: f64) -> Result<f64> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(rate)
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Rates of the two independent Poisson counts whose difference is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams {
    lambda1: f64,
    lambda2: f64,
}

impl SkellamParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        Ok(SkellamParams { lambda1: check_rate(lambda1)?, lambda2: check_rate(lambda2)? })
    }

    pub fn lambda1(self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(self) -> f64 {
        self.lambda2
    }
}

/// `P(X - Y = w)` for `X ~ Poisson(lambda1)`, `Y ~ Poisson(lambda2)`.
pub fn skellam_pmf(w: i64, params: SkellamParams, tol: Tolerance) -> f64 {
    pmf(w, params.lambda1, params.lambda2, tol)
}

/// `P(X > Y)` for independent `X ~ Poisson(a)`, `Y ~ Poisson(b)`, i.e. the
/// Skellam mass on `w >= 1`.
pub fn prob_strictly_greater(a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    Ok(strictly_greater(check_rate(a)?, check_rate(b)?, tol))
}

/// Probabilities that a candidate with total `c` is level with (`break_tie`)
/// or exactly one vote behind (`make_tie`) an opponent with total `opp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieTerms {
    pub break_tie: f64,
    pub make_tie: f64,
}

impl TieTerms {
    /// Chance that one extra vote changes the outcome under a fair coin.
    pub fn pivotal(self) -> f64 {
        0.5 * self.break_tie + 0.5 * self.make_tie
    }
}

pub fn tie_terms(c: f64, opp: f64, tol: Tolerance) -> Result<TieTerms> {
    Ok(ties(check_rate(c)?, check_rate(opp)?, tol))
}

pub(crate) fn pmf(w: i64, a: f64, b: f64, tol: Tolerance) -> f64 {
    ln_pmf(w, a, b, tol).exp()
}

pub(crate) fn ties(c: f64, opp: f64, tol: Tolerance) -> TieTerms {
    TieTerms { break_tie: pmf(0, c, opp, tol), make_tie: pmf(-1, c, opp, tol) }
}

pub(crate) fn strictly_greater(a: f64, b: f64, tol: Tolerance) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b == 0.0 {
        return -(-a).exp_m1();
    }
    if a <= b {
        upper_tail(a, b, tol)
    } else {
        (1.0 - pmf(0, a, b, tol) - upper_tail(b, a, tol)).clamp(0.0, 1.0)
    }
}

/// Log of the Skellam mass at `w`.
pub(crate) fn ln_pmf(w: i64, a: f64, b: f64, tol: Tolerance) -> f64 {
    if w < 0 {
        return ln_pmf(-w, b, a, tol);
    }
    if b == 0.0 {
        return ln_poisson(w, a);
    }
    if a == 0.0 {
        return if w == 0 { -b } else { f64::NEG_INFINITY };
    }
    // Terms Pois(k+w; a) Pois(k; b) peak where (k+w+1)(k+1) first reaches ab.
    let wf = w as f64;
    let peak = ((-(wf + 2.0) + (wf * wf + 4.0 * a * b).sqrt()) / 2.0).ceil().max(0.0);
    ln_sum_log_concave(
        |k| ln_poisson(k + w, a) + ln_poisson(k, b),
        0,
        i64::MAX,
        peak as i64,
        tol.inner_eps(),
    )
}

/// `sum_{w >= 1} P(X - Y = w)` for `0 < a <= b`.
///
/// The masses decrease in `w` here, so they are generated from a cutoff `top`
/// downward with `p(w-1) = (b/a) p(w+1) + (w/a) p(w)`, the stable direction
/// of the Bessel recurrence. Log-concavity bounds everything past `top` by
/// a geometric series.
fn upper_tail(a: f64, b: f64, tol: Tolerance) -> f64 {
    const RESCALE: f64 = 1e200;
    let ln_rescale = RESCALE.ln();
    let mut top = (8.0 * (a + b).sqrt()).ceil() as i64 + 2;
    loop {
        let ln_top = ln_pmf(top, a, b, tol);
        let ln_next = ln_pmf(top + 1, a, b, tol);
        if ln_top == f64::NEG_INFINITY {
            return 0.0;
        }
        let ratio = (ln_next - ln_top).exp();
        // q(w) = p(w) / p(top) * exp(-offset)
        let (mut q_hi, mut q_mid) = (ratio, 1.0);
        let mut sum = 1.0;
        let mut offset = 0.0;
        for w in (1..top).rev() {
            let q = (b / a) * q_hi + ((w + 1) as f64 / a) * q_mid;
            q_hi = q_mid;
            q_mid = q;
            sum += q;
            if q > RESCALE {
                q_hi /= RESCALE;
                q_mid /= RESCALE;
                sum /= RESCALE;
                offset += ln_rescale;
            }
        }
        let ln_total = ln_top + offset + sum.ln();
        let ln_tail = ln_top + (ratio / (1.0 - ratio)).ln();
        if ratio < 1.0 && ln_tail <= tol.inner_eps().ln() + ln_total {
            return ln_total.exp().min(1.0);
        }
        top *= 2;
    }
}

/// Log of the Poisson mass at `k`.
pub(crate) fn ln_poisson(k: i64, lambda: f64) -> f64 {
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -lambda;
    }
    let x = k as f64;
    -stirling_error(k) - deviance(x, lambda) - 0.5 * (2.0 * PI * x).ln()
}

/// Log of `P(X <= m)` for `X ~ Poisson(lambda)`.
pub(crate) fn ln_poisson_cdf(m: i64, lambda: f64, tol: Tolerance) -> f64 {
    if m < 0 {
        return f64::NEG_INFINITY;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if (m as f64) < lambda {
        ln_sum_log_concave(|i| ln_poisson(i, lambda), 0, m, m, tol.inner_eps())
    } else {
        let ln_upper = ln_sum_log_concave(|i| ln_poisson(i, lambda), m + 1, i64::MAX, m + 1, tol.inner_eps());
        (-ln_upper.exp()).ln_1p()
    }
}

/// `ln(n!) - (n + 1/2) ln n + n - ln sqrt(2 pi)`.
fn stirling_error(n: i64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        let x = n as f64;
        let ln_fact = (1..=n).map(|i| i as f64).product::<f64>().ln();
        return ln_fact - (x + 0.5) * x.ln() + x - 0.5 * (2.0 * PI).ln();
    }
    let x = n as f64;
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// `x ln(x / m) + m - x`, with a series when `x` is close to `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// Log of `sum exp(f(k))` over `lo <= k <= hi` for a log-concave `f`.
///
/// The walk starts at `start`, climbs to the largest term and then expands
/// in both directions. Past the peak every ratio of neighbouring terms is at
/// most the last one observed, so the remaining tail is bounded by a
/// geometric series and the walk stops once that bound drops below
/// `rel_eps` times the running sum.
pub(crate) fn ln_sum_log_concave(f: impl Fn(i64) -> f64, lo: i64, hi: i64, start: i64, rel_eps: f64) -> f64 {
    let mut peak = start.clamp(lo, hi);
    let mut f_peak = f(peak);
    while peak < hi {
        let next = f(peak + 1);
        if next > f_peak {
            peak += 1;
            f_peak = next;
        } else {
            break;
        }
    }
    while peak > lo {
        let prev = f(peak - 1);
        if prev > f_peak {
            peak -= 1;
            f_peak = prev;
        } else {
            break;
        }
    }
    if f_peak == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }

    let mut sum = 1.0;
    for dir in [1i64, -1] {
        let mut k = peak;
        let mut f_prev = f_peak;
        loop {
            if (dir > 0 && k >= hi) || (dir < 0 && k <= lo) {
                break;
            }
            k += dir;
            let fk = f(k);
            if fk == f64::NEG_INFINITY {
                break;
            }
            let term = (fk - f_peak).exp();
            sum += term;
            let ratio = (fk - f_prev).exp();
            if ratio < 1.0 && term * ratio / (1.0 - ratio) <= rel_eps * sum {
                break;
            }
            f_prev = fk;
        }
    }
    f_peak + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    // Poisson pmf by the textbook recurrence p(k) = p(k-1) lambda / k.
    fn poisson_naive(k: usize, lambda: f64) -> f64 {
        (1..=k).fold((-lambda).exp(), |p, i| p * lambda / i as f64)
    }

    #[test]
    fn poisson_log_mass_matches_recurrence() {
        for &lambda in &[0.3, 1.0, 7.5, 40.0, 300.0] {
            for k in 0..(3.0 * lambda + 20.0) as usize {
                let direct = poisson_naive(k, lambda);
                let loader = ln_poisson(k as i64, lambda).exp();
                assert!(
                    (direct - loader).abs() <= 1e-12 * direct.max(1e-300),
                    "lambda={lambda} k={k}: {direct} vs {loader}"
                );
            }
        }
    }

    #[test]
    fn poisson_cdf_matches_partial_sums() {
        for &lambda in &[0.5, 4.0, 60.0] {
            let mut acc = 0.0;
            for m in 0..(2.0 * lambda + 15.0) as i64 {
                acc += poisson_naive(m as usize, lambda);
                let ours = ln_poisson_cdf(m, lambda, tol()).exp();
                assert!(close(acc, ours, 1e-14), "lambda={lambda} m={m}: {acc} vs {ours}");
            }
        }
        assert_eq!(ln_poisson_cdf(-1, 3.0, tol()), f64::NEG_INFINITY);
        assert_eq!(ln_poisson_cdf(0, 0.0, tol()), 0.0);
    }

    #[test]
    fn degenerate_rates() {
        let p = |w, a, b| skellam_pmf(w, SkellamParams::new(a, b).unwrap(), tol());
        assert_eq!(p(0, 0.0, 0.0), 1.0);
        assert_eq!(p(1, 0.0, 0.0), 0.0);
        assert!(close(p(1, 1.0, 0.0), (-1.0f64).exp(), 1e-15));
        assert_eq!(p(-1, 1.0, 0.0), 0.0);
        assert!(close(p(-2, 0.0, 2.0), 2.0 * (-2.0f64).exp(), 1e-15));
    }

    #[test]
    fn frozen_values() {
        // Bessel form e^-(a+b) (a/b)^(w/2) I_|w|(2 sqrt(ab)) at 40 digits.
        let p = |w, a, b| skellam_pmf(w, SkellamParams::new(a, b).unwrap(), tol());
        assert!(close(p(0, 1.0, 1.0), 0.30850832255367104, 1e-15));
        assert!(close(p(0, 3.0, 3.0), 0.16665743263981658, 1e-15));
        assert!(close(p(-1, 3.0, 3.0), 0.15205145930850588, 1e-15));
        let gt = prob_strictly_greater(2.0, 1.0, tol()).unwrap();
        assert!(close(gt, 0.6057031411076684, 1e-14), "{gt}");
    }

    #[test]
    fn strictly_greater_examples() {
        let gt = prob_strictly_greater(1.0, 0.0, tol()).unwrap();
        assert!(close(gt, 1.0 - (-1.0f64).exp(), 1e-15));
        assert_eq!(prob_strictly_greater(0.0, 4.0, tol()).unwrap(), 0.0);
        for &lambda in &[0.2, 1.0, 9.0, 250.0] {
            let gt = prob_strictly_greater(lambda, lambda, tol()).unwrap();
            let tie = skellam_pmf(0, SkellamParams::new(lambda, lambda).unwrap(), tol());
            assert!(close(gt, (1.0 - tie) / 2.0, 1e-14), "lambda={lambda} {gt} {}", (1.0 - tie) / 2.0);
        }
    }

    #[test]
    fn tie_term_examples() {
        let t = tie_terms(0.0, 0.0, tol()).unwrap();
        assert_eq!((t.break_tie, t.make_tie), (1.0, 0.0));
        let t = tie_terms(0.0, 1.0, tol()).unwrap();
        assert!(close(t.break_tie, (-1.0f64).exp(), 1e-15));
        assert!(close(t.make_tie, (-1.0f64).exp(), 1e-15));
        assert!(close(t.pivotal(), (-1.0f64).exp(), 1e-15));
    }

    #[test]
    fn negative_rates_rejected() {
        assert_eq!(SkellamParams::new(-1.0, 1.0), Err(Error::InvalidRate(-1.0)));
        assert!(prob_strictly_greater(1.0, -0.5, tol()).is_err());
        assert!(tie_terms(f64::INFINITY, 1.0, tol()).is_err());
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(1.0).is_err());
    }

    #[test]
    fn tiny_probabilities_keep_relative_accuracy() {
        // Far from a tie the mass is ~1e-60 but must not round to zero.
        let far = pmf(0, 667.0, 167.0, tol());
        assert!(far > 0.0 && far < 1e-50, "{far}");
        let gt = strictly_greater(167.0, 667.0, tol());
        assert!(gt > 0.0 && gt < 1e-50, "{gt}");
        // P(X > Y) is dominated by its first term when it is tiny.
        assert!(gt > pmf(1, 167.0, 667.0, tol()));
        assert!(gt < 2.0 * pmf(1, 167.0, 667.0, tol()));
    }

    #[test]
    fn huge_rates_stay_in_range() {
        for &(a, b) in &[(1e6, 1e6), (1e6, 9.99e5), (1e6, 1.0), (3.0, 1e6)] {
            let p = pmf(0, a, b, tol());
            let gt = strictly_greater(a, b, tol());
            let lt = strictly_greater(b, a, tol());
            assert!((0.0..=1.0).contains(&p));
            assert!((0.0..=1.0).contains(&gt));
            assert!(close(p + gt + lt, 1.0, 1e-9), "a={a} b={b}");
        }
    }
}
