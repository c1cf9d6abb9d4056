//! Boundary for a community whose weights follow a distribution.
//!
//! Weights are `W = V / ln(n)^e` with `V = s + X` (default `e = 3/2`). For
//! `alpha` the fraction of the community kept, the objective is
//! `G(alpha) = (int_{1-alpha}^1 Q_V(y) dy)^2 / (2 alpha)` and the boundary is
//! `h(rho - 1) = kappa / max G` with `kappa = ln(n)^(2e) L / r`.

use serde::{Deserialize, Serialize};

use super::{best_prefix, rho_for_ratio, BoundaryResult, Denominator, ExactPrefix};
use crate::entropy::h_unchecked;
use crate::error::{Error, Result};

/// Distribution of the unnormalized weight `V = s + X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightDistribution {
    /// `X = delta` almost surely.
    Degenerate { delta: f64, s: f64 },
    /// `V = s + t X` with `X ~ Bern(q)`.
    ShiftedBernoulli { q: f64, t: f64, s: f64 },
    /// `X ~ Unif(a, b)`.
    ShiftedUniform { a: f64, b: f64, s: f64 },
    /// `X ~ Exp(lambda)`.
    ShiftedExponential { lambda: f64, s: f64 },
    /// Observed values of `V`, sorted in descending order.
    Empirical { values: Vec<f64> },
}

impl WeightDistribution {
    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        let d = Self::Empirical { values };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Degenerate { delta, s } => *delta >= 0.0 && *s >= 0.0 && delta + s > 0.0,
            Self::ShiftedBernoulli { q, t, s } => *q > 0.0 && *q <= 1.0 && *t > 0.0 && *s >= 0.0,
            Self::ShiftedUniform { a, b, s } => *a >= 0.0 && b > a && *s >= 0.0,
            Self::ShiftedExponential { lambda, s } => *lambda > 0.0 && *s >= 0.0,
            Self::Empirical { values } => {
                !values.is_empty()
                    && values.iter().all(|v| v.is_finite() && *v >= 0.0)
                    && values.windows(2).all(|w| w[0] >= w[1])
                    && values[0] > 0.0
            }
        };
        let finite = match self {
            Self::Degenerate { delta, s } => delta.is_finite() && s.is_finite(),
            Self::ShiftedBernoulli { q, t, s } => q.is_finite() && t.is_finite() && s.is_finite(),
            Self::ShiftedUniform { a, b, s } => a.is_finite() && b.is_finite() && s.is_finite(),
            Self::ShiftedExponential { lambda, s } => lambda.is_finite() && s.is_finite(),
            Self::Empirical { .. } => true,
        };
        if ok && finite {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "invalid weight distribution {self:?}"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Degenerate { .. } => "degenerate",
            Self::ShiftedBernoulli { .. } => "shifted_bernoulli",
            Self::ShiftedUniform { .. } => "shifted_uniform",
            Self::ShiftedExponential { .. } => "shifted_exponential",
            Self::Empirical { .. } => "empirical",
        }
    }
}

/// `int_{1 - alpha}^1 Q_V(y) dy` for `alpha` in `[0, 1]`.
pub fn tail_integral(dist: &WeightDistribution, alpha: f64) -> f64 {
    let alpha = alpha.clamp(0.0, 1.0);
    match *dist {
        WeightDistribution::Degenerate { delta, s } => (s + delta) * alpha,
        WeightDistribution::ShiftedBernoulli { q, t, s } => s * alpha + t * alpha.min(q),
        WeightDistribution::ShiftedUniform { a, b, s } => {
            alpha * (s + b) - (b - a) * alpha * alpha / 2.0
        }
        WeightDistribution::ShiftedExponential { lambda, s } => {
            let entropy_part = if alpha > 0.0 {
                alpha - alpha * alpha.ln()
            } else {
                0.0
            };
            s * alpha + entropy_part / lambda
        }
        WeightDistribution::Empirical { ref values } => {
            let m = values.len() as f64;
            let mass = alpha * m;
            let whole = (mass.floor() as usize).min(values.len());
            let mut total: f64 = values[..whole].iter().sum();
            if whole < values.len() {
                total += (mass - whole as f64) * values[whole];
            }
            total / m
        }
    }
}

/// Where the community size and log factor come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySetting {
    /// `r = ln(n)^4`: `kappa = 1`, independent of `n`.
    Polylog,
    /// `r = n^(1/4) ln(n)^4`: `kappa = n^(-1/4)`.
    Polynomial { n: f64 },
    /// Concrete `n` and `r`.
    Explicit {
        n: f64,
        r: usize,
        #[serde(default)]
        denominator: Denominator,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMode {
    /// Closed forms; not available for empirical weights.
    #[default]
    Analytic,
    /// Grid search plus golden-section refinement.
    Numeric,
}

const GRID_POINTS: usize = 512;
const GOLDEN_TOL: f64 = 1e-6;
const GOLDEN_MAX_ITER: usize = 200;
const ASYMPTOTIC_ALPHA_MIN: f64 = 1e-6;

/// Threshold scaling for a weight distribution.
pub fn quantile_boundary(
    dist: &WeightDistribution,
    setting: BoundarySetting,
    mode: QuantileMode,
    normalization_exponent: f64,
) -> Result<BoundaryResult> {
    dist.validate()?;
    if !normalization_exponent.is_finite() {
        return Err(Error::validation("normalization exponent must be finite"));
    }
    let r = match setting {
        BoundarySetting::Explicit { n, r, .. } => {
            if r < 1 || !(n > r as f64) {
                return Err(Error::validation(format!(
                    "need 1 <= r < n, got r = {r}, n = {n}"
                )));
            }
            Some(r)
        }
        BoundarySetting::Polynomial { n } => {
            if !(n > 1.0) {
                return Err(Error::validation(format!("need n > 1, got {n}")));
            }
            None
        }
        BoundarySetting::Polylog => None,
    };
    let (alpha, g_max, kappa) = match mode {
        QuantileMode::Analytic => {
            let (alpha, g) = analytic(dist)?;
            (alpha, g, kappa(setting, normalization_exponent, alpha))
        }
        QuantileMode::Numeric => numeric(dist, setting, normalization_exponent)?,
    };
    // ratio = G* / kappa, so that h(rho - 1) = 1 / ratio.
    let ratio = g_max / kappa;
    let rho_star = rho_for_ratio(ratio, 1.0)?;
    let exact_prefix = match (dist, setting) {
        (
            WeightDistribution::Empirical { values },
            BoundarySetting::Explicit { n, denominator, .. },
        ) => {
            let scale = n.ln().powf(normalization_exponent);
            let w: Vec<f64> = values.iter().map(|v| v / scale).collect();
            let (k, value) = best_prefix(&w, n, denominator);
            Some(ExactPrefix {
                rho_star: rho_for_ratio(value, 1.0)?,
                optimal_size: k,
            })
        }
        _ => None,
    };
    Ok(BoundaryResult {
        rho_star,
        optimal_size: r.map(|r| alpha * r as f64),
        size_fraction: alpha,
        optimal_subset: None,
        max_ratio: ratio,
        objective_value: ratio * h_unchecked(rho_star - 1.0),
        feasible: None,
        exact_prefix,
    })
}

/// `kappa` for the `ln n` denominator; `alpha` only matters for the per-size
/// denominator of an explicit setting.
fn kappa(setting: BoundarySetting, exponent: f64, alpha: f64) -> f64 {
    match setting {
        BoundarySetting::Polylog => 1.0,
        BoundarySetting::Polynomial { n } => n.powf(-0.25),
        BoundarySetting::Explicit { n, r, denominator } => {
            let log_factor = denominator.log_factor(n, alpha * r as f64);
            n.ln().powf(2.0 * exponent) * log_factor / r as f64
        }
    }
}

fn objective(dist: &WeightDistribution, alpha: f64) -> f64 {
    let tail = tail_integral(dist, alpha);
    tail * tail / (2.0 * alpha)
}

/// Closed-form `(alpha*, G*)`.
fn analytic(dist: &WeightDistribution) -> Result<(f64, f64)> {
    Ok(match *dist {
        WeightDistribution::Degenerate { delta, s } => (1.0, (s + delta).powi(2) / 2.0),
        WeightDistribution::ShiftedBernoulli { q, t, s } => {
            let only_large = q * (s + t).powi(2) / 2.0;
            let whole = (s + q * t).powi(2) / 2.0;
            if only_large > whole {
                (q, only_large)
            } else {
                (1.0, whole)
            }
        }
        WeightDistribution::ShiftedUniform { a, b, s } => {
            let alpha = 2.0 / 3.0 * (b + s) / (b - a);
            if alpha < 1.0 {
                (alpha, 4.0 * (b + s).powi(3) / (27.0 * (b - a)))
            } else {
                (1.0, (s + (a + b) / 2.0).powi(2) / 2.0)
            }
        }
        WeightDistribution::ShiftedExponential { lambda, s } => {
            let alpha = (s * lambda - 1.0).exp();
            if alpha < 1.0 {
                (alpha, 2.0 * alpha / (lambda * lambda))
            } else {
                (1.0, (s + 1.0 / lambda).powi(2) / 2.0)
            }
        }
        WeightDistribution::Empirical { .. } => {
            return Err(Error::validation(
                "analytic mode covers the four parametric families; use numeric mode for empirical weights",
            ))
        }
    })
}

/// Maximizes `G(alpha) / kappa(alpha)` over `alpha`; returns
/// `(alpha*, G*, kappa(alpha*))`.
fn numeric(
    dist: &WeightDistribution,
    setting: BoundarySetting,
    exponent: f64,
) -> Result<(f64, f64, f64)> {
    let alpha_min = match setting {
        BoundarySetting::Explicit { r, .. } => 1.0 / r as f64,
        _ => ASYMPTOTIC_ALPHA_MIN,
    };
    let score = |alpha: f64| objective(dist, alpha) / kappa(setting, exponent, alpha);
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| alpha_min.powf(1.0 - (i + 1) as f64 / GRID_POINTS as f64))
        .collect();
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &a) in grid.iter().enumerate() {
        let v = score(a);
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let lo = if best_idx == 0 {
        alpha_min
    } else {
        grid[best_idx - 1]
    };
    let hi = grid[(best_idx + 1).min(GRID_POINTS - 1)];
    let (alpha, value) = golden_max(score, lo, hi)?;
    let (alpha, value) = if value >= best {
        (alpha, value)
    } else {
        (grid[best_idx], best)
    };
    let k = kappa(setting, exponent, alpha);
    Ok((alpha, value * k, k))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_MAX_ITER {
        if b - a <= GOLDEN_TOL * b.abs().max(GOLDEN_TOL) {
            // Endpoints are candidates too: the maximum may sit at alpha = 1.
            let mut best = ((a + b) / 2.0, f((a + b) / 2.0));
            for x in [a, b] {
                let v = f(x);
                if v > best.1 {
                    best = (x, v);
                }
            }
            return Ok(best);
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::Numeric {
        message: "golden-section refinement did not converge".into(),
        lo: a,
        hi: b,
    })
}
