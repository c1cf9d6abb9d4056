//! Threshold-scaling curves over community compositions with two or three
//! weight classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_prefix, rho_for_ratio, two_weight_regime, Denominator};
use crate::error::{Error, Result};
use crate::harness::schema_csv;

/// Lowest weight class that `D*` reaches into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `D*` uses small-weight vertices (and so every class present).
    All,
    LargeMedium,
    LargeOnly,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::LargeMedium => "large_medium",
            Self::LargeOnly => "large_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWeightSweep {
    pub r: usize,
    pub w_max: f64,
    pub w_min: f64,
    pub n: f64,
    #[serde(default)]
    pub denominator: Denominator,
    #[serde(default = "one")]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeWeightSweep {
    pub r: usize,
    pub w_max: f64,
    pub w_med: f64,
    pub w_min: f64,
    pub n: f64,
    #[serde(default)]
    pub denominator: Denominator,
    #[serde(default = "one")]
    pub target: f64,
}

fn one() -> f64 {
    1.0
}

impl TwoWeightSweep {
    /// Weights `1 / ln n` and `1 / (ratio ln n)` with `r = floor(ln(n)^3)`.
    pub fn log_scaled(n: f64, ratio: f64) -> Self {
        let ln = n.ln();
        Self {
            r: ln.powi(3).floor() as usize,
            w_max: 1.0 / ln,
            w_min: 1.0 / (ratio * ln),
            n,
            denominator: Denominator::PerSize,
            target: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub large: usize,
    pub medium: usize,
    pub small: usize,
    pub rho_star: f64,
    pub optimal_size: usize,
    pub regime: Regime,
    /// Scaling needed when the whole community is used.
    pub whole_c_rho: f64,
}

/// Regime change between consecutive rows along the large-count axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub medium: usize,
    /// First large count of the new regime.
    pub large: usize,
    pub from: Regime,
    pub to: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub rows: Vec<SurfaceRow>,
    pub kinks: Vec<Kink>,
    /// Closed-form crossover for two-weight sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_threshold: Option<f64>,
}

impl Surface {
    pub fn to_csv(&self) -> String {
        let rows = self.rows.iter().map(|row| {
            [
                row.large.to_string(),
                row.medium.to_string(),
                row.small.to_string(),
                row.rho_star.to_string(),
                row.optimal_size.to_string(),
                row.regime.as_str().to_string(),
                row.whole_c_rho.to_string(),
            ]
        });
        schema_csv(
            &[
                "large",
                "medium",
                "small",
                "rho_star",
                "optimal_size",
                "regime",
                "whole_c_rho",
            ],
            rows,
        )
    }
}

fn check(r: usize, n: f64, target: f64, weights: &[f64]) -> Result<()> {
    if r < 1 || !(n > r as f64) || !n.is_finite() {
        return Err(Error::validation(format!(
            "need 1 <= r < n, got r = {r}, n = {n}"
        )));
    }
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::validation(format!(
            "target must be positive, got {target}"
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::validation(format!(
            "weights must be positive, got {weights:?}"
        )));
    }
    if weights.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::validation("weights must be given largest first"));
    }
    Ok(())
}

pub(crate) fn composition_row(
    counts: [usize; 3],
    weights: [f64; 3],
    n: f64,
    denominator: Denominator,
    target: f64,
) -> Result<SurfaceRow> {
    let sorted: Vec<f64> = counts
        .iter()
        .zip(weights)
        .flat_map(|(&c, w)| std::iter::repeat_n(w, c))
        .collect();
    let (k, value) = best_prefix(&sorted, n, denominator);
    let (_, whole) = whole_prefix(&sorted, n, denominator);
    // Classify by the smallest weight value inside D*; equal weights share a class.
    let smallest = sorted[k - 1];
    let regime = if smallest >= weights[0] {
        Regime::LargeOnly
    } else if smallest >= weights[1] {
        Regime::LargeMedium
    } else {
        Regime::All
    };
    Ok(SurfaceRow {
        large: counts[0],
        medium: counts[1],
        small: counts[2],
        rho_star: rho_for_ratio(value, target)?,
        optimal_size: k,
        regime,
        whole_c_rho: rho_for_ratio(whole, target)?,
    })
}

/// Objective of the full prefix.
fn whole_prefix(sorted: &[f64], n: f64, denominator: Denominator) -> (usize, f64) {
    let sum: f64 = sorted.iter().sum();
    let sum_sq: f64 = sorted.iter().map(|w| w * w).sum();
    let k = sorted.len() as f64;
    (
        sorted.len(),
        0.5 * (sum * sum - sum_sq) / (k * denominator.log_factor(n, k)),
    )
}

fn kinks(rows: &[SurfaceRow]) -> Vec<Kink> {
    rows.windows(2)
        .filter(|w| w[0].medium == w[1].medium && w[0].regime != w[1].regime)
        .map(|w| Kink {
            medium: w[1].medium,
            large: w[1].large,
            from: w[0].regime,
            to: w[1].regime,
        })
        .collect()
}

pub(crate) fn check_two_weight(sweep: &TwoWeightSweep) -> Result<()> {
    check(sweep.r, sweep.n, sweep.target, &[sweep.w_max, sweep.w_min])
}

pub(crate) fn check_three_weight(sweep: &ThreeWeightSweep) -> Result<()> {
    check(
        sweep.r,
        sweep.n,
        sweep.target,
        &[sweep.w_max, sweep.w_med, sweep.w_min],
    )
}

/// Rows for `|C_max| = 0..=r`.
pub fn two_weight_surface(sweep: &TwoWeightSweep) -> Result<Surface> {
    check_two_weight(sweep)?;
    let weights = [sweep.w_max, sweep.w_max, sweep.w_min];
    let rows = (0..=sweep.r)
        .into_par_iter()
        .map(|large| {
            composition_row(
                [large, 0, sweep.r - large],
                weights,
                sweep.n,
                sweep.denominator,
                sweep.target,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, threshold) = two_weight_regime(sweep.r, 0, sweep.w_max, sweep.w_min)?;
    Ok(Surface {
        kinks: kinks(&rows),
        rows,
        predicted_threshold: threshold.is_finite().then_some(threshold),
    })
}

/// Rows for every `(large, medium)` with `large + medium <= r`, grouped by
/// medium count.
pub fn three_weight_surface(sweep: &ThreeWeightSweep) -> Result<Surface> {
    check_three_weight(sweep)?;
    let weights = [sweep.w_max, sweep.w_med, sweep.w_min];
    let r = sweep.r;
    let grid: Vec<(usize, usize)> = (0..=r)
        .flat_map(|medium| (0..=r - medium).map(move |large| (large, medium)))
        .collect();
    let rows = grid
        .into_par_iter()
        .map(|(large, medium)| {
            composition_row(
                [large, medium, r - large - medium],
                weights,
                sweep.n,
                sweep.denominator,
                sweep.target,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Surface {
        kinks: kinks(&rows),
        rows,
        predicted_threshold: None,
    })
}
