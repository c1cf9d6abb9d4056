//! Scalar kernels shared by every statistic in the crate.
//!
//! All logarithms are natural. The rate function
//! `h(x) = (x + 1) ln(x + 1) - x` is the Poisson/Bennett exponent; it is
//! defined for `x > -1`, vanishes at zero and is strictly increasing on
//! `[0, inf)`.

use crate::error::{Error, Result};

/// Convergence control for [`entropy_h_inverse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTolerance {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for KernelTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl KernelTolerance {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || max_iter == 0 {
            return Err(Error::validation(format!(
                "tolerance needs abs_tol > 0 and max_iter >= 1, got ({abs_tol}, {max_iter})"
            )));
        }
        Ok(Self { abs_tol, max_iter })
    }
}

// Below this magnitude the alternating series is used; 20 terms leave a
// truncation error far under one ulp of x^2/2.
const SERIES_CUTOFF: f64 = 0.1;
const SERIES_TERMS: i32 = 20;

/// `h(x) = (x + 1) ln(x + 1) - x`.
///
/// Accepts any `x > -1`. Near zero the value is summed from its Taylor series
/// `sum_{k>=2} (-1)^k x^k / (k (k - 1))`, so there is no cancellation in the
/// regime the scan statistics live in.
pub fn entropy_h(x: f64) -> Result<f64> {
    if x.is_nan() || x <= -1.0 {
        return Err(Error::domain(format!("h(x) requires x > -1, got {x}")));
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(h_unchecked(x))
}

pub(crate) fn h_unchecked(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        h_series(x)
    } else {
        (x + 1.0) * x.ln_1p() - x
    }
}

fn h_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = x * x;
    for k in 2..(2 + SERIES_TERMS) {
        let kf = k as f64;
        let term = power / (kf * (kf - 1.0));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power *= x;
    }
    sum
}

/// Derivative `h'(x) = ln(1 + x)`.
fn h_prime(x: f64) -> f64 {
    x.ln_1p()
}

/// Inverse of `h` on `[0, inf)`.
///
/// Brackets the root by doubling from 1, then runs Newton steps that fall back
/// to bisection whenever an iterate leaves the bracket.
pub fn entropy_h_inverse(y: f64, tol: KernelTolerance) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::domain(format!("h^-1(y) requires y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let target_tol = tol.abs_tol * y.max(1.0);

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while h_unchecked(hi) < y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric {
                message: format!("could not bracket h^-1({y})"),
                lo,
                hi,
            });
        }
    }

    // Small-y start from h(x) ~ x^2 / 2, large-y start from the bracket midpoint.
    let mut x = if y < 0.5 {
        (2.0 * y).sqrt().clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..tol.max_iter {
        let fx = h_unchecked(x) - y;
        if fx.abs() <= target_tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = h_prime(x);
        let newton = if slope > 0.0 {
            x - fx / slope
        } else {
            f64::NAN
        };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // Bracket collapsed to neighbouring floats: nothing finer is representable.
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(x);
        }
    }
    Err(Error::Numeric {
        message: format!("h^-1({y}) did not converge in {} iterations", tol.max_iter),
        lo,
        hi,
    })
}

/// Kullback-Leibler divergence between `Bern(q)` and `Bern(p)`:
/// `q ln(q/p) + (1 - q) ln((1 - q)/(1 - p))`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    let open_unit = |v: f64| v > 0.0 && v < 1.0;
    if !open_unit(p) || !open_unit(q) {
        return Err(Error::domain(format!(
            "kl_bernoulli needs p, q in (0, 1), got ({p}, {q})"
        )));
    }
    let value = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
    Ok(value.max(0.0))
}

/// Bennett upper-tail bound `exp(-mean * h(t / mean))` for
/// `P(S - E[S] >= t)` where `S` is a sum of independent Bernoulli variables
/// with expectation `mean`.
pub fn bennett_upper_tail_bound(mean: f64, t: f64) -> Result<f64> {
    if !(mean > 0.0) || !(t > 0.0) {
        return Err(Error::domain(format!(
            "Bennett bound needs mean > 0 and t > 0, got ({mean}, {t})"
        )));
    }
    Ok((-mean * h_unchecked(t / mean)).exp())
}

/// `E * h([e / E - 1]_+)`, the common numerator of both scan statistics.
///
/// Returns 0 when `expected == 0`; under the null such a set carries no edges
/// almost surely, and the convention avoids `0 * h(inf)`.
pub(crate) fn surplus(observed: f64, expected: f64) -> f64 {
    if expected <= 0.0 || observed <= expected {
        return 0.0;
    }
    expected * h_unchecked(observed / expected - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn h_point_values() {
        assert_eq!(entropy_h(0.0).unwrap(), 0.0);
        assert!((entropy_h(E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        // 2 ln 2 - 1
        assert!((entropy_h(1.0).unwrap() - 0.386_294_361_119_890_6).abs() < 1e-15);
    }

    #[test]
    fn h_rejects_outside_domain() {
        assert!(matches!(entropy_h(-1.0), Err(Error::Domain(_))));
        assert!(matches!(entropy_h(-3.5), Err(Error::Domain(_))));
        assert!(entropy_h(-0.5).unwrap() > 0.0);
    }

    #[test]
    fn series_and_closed_form_agree_at_cutoff() {
        for x in [SERIES_CUTOFF, -SERIES_CUTOFF] {
            let closed = (x + 1.0) * x.ln_1p() - x;
            assert!((closed - h_series(x)).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn inverse_point_values() {
        let tol = KernelTolerance::default();
        assert_eq!(entropy_h_inverse(0.0, tol).unwrap(), 0.0);
        let x = entropy_h_inverse(2.0 / 1.21, tol).unwrap();
        assert!((x - 2.311).abs() < 1e-3, "{x}");
        assert!((x + 1.0 - 3.311).abs() < 1e-3);
        let five = entropy_h_inverse(entropy_h(5.0).unwrap(), tol).unwrap();
        assert!((five - 5.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_rejects_negative() {
        assert!(entropy_h_inverse(-1e-3, KernelTolerance::default()).is_err());
    }

    #[test]
    fn inverse_reports_non_convergence() {
        let tol = KernelTolerance::new(1e-300, 1).unwrap();
        match entropy_h_inverse(3.7, tol) {
            Err(Error::Numeric { lo, hi, .. }) => assert!(lo < hi),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn tolerance_validation() {
        assert!(KernelTolerance::new(0.0, 10).is_err());
        assert!(KernelTolerance::new(1e-9, 0).is_err());
    }

    #[test]
    fn kl_point_values() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        assert!((kl_bernoulli(0.1, 0.2).unwrap() - 0.044_403).abs() < 1e-6);
        assert!(kl_bernoulli(0.0, 0.2).is_err());
        assert!(kl_bernoulli(0.2, 1.0).is_err());
    }

    #[test]
    fn bennett_point_values() {
        let b = bennett_upper_tail_bound(1.0, E - 1.0).unwrap();
        assert!((b - (-1.0f64).exp()).abs() < 1e-15);
        let b = bennett_upper_tail_bound(0.6, 2.4).unwrap();
        assert!((b - 0.088_185_411).abs() < 1e-8, "{b}");
        assert!(bennett_upper_tail_bound(0.0, 1.0).is_err());
        assert!(bennett_upper_tail_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn surplus_clamps() {
        assert_eq!(surplus(0.0, 1.0), 0.0);
        assert_eq!(surplus(1.0, 1.0), 0.0);
        assert_eq!(surplus(5.0, 0.0), 0.0);
        assert!((surplus(3.0, 0.6) - 0.6 * h_unchecked(4.0)).abs() < 1e-15);
    }
}
