//! Detection boundary: most informative subgraph, threshold scaling and the
//! weight-distribution approximations.

mod quantile;
pub(crate) mod surface;

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_h_inverse, h_unchecked, KernelTolerance};
use crate::error::{Error, Result};
use crate::graph::{check_set, EdgeProbabilityModel};

pub use quantile::{
    quantile_boundary, tail_integral, BoundarySetting, QuantileMode, WeightDistribution,
};
pub use surface::{
    three_weight_surface, two_weight_surface, Kink, Regime, Surface, SurfaceRow, ThreeWeightSweep,
    TwoWeightSweep,
};

/// Default limit on `2^|C|` for brute-force search over general models.
pub const DEFAULT_SUBSET_BUDGET: u64 = 5_000_000;

/// Log factor in the normalization `|D| ln(n / |D|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// `ln(n / |D|)` for each candidate size.
    #[default]
    PerSize,
    /// `ln(n)` for every size.
    Global,
}

impl Denominator {
    pub(crate) fn log_factor(self, n: f64, k: f64) -> f64 {
        match self {
            Self::PerSize => (n / k).ln(),
            Self::Global => n.ln(),
        }
    }
}

/// Result of a boundary computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResult {
    /// Scaling at which the boundary objective equals the target.
    pub rho_star: f64,
    /// `|D*|`, or `alpha* r` in distribution mode; `None` when `r` is symbolic.
    pub optimal_size: Option<f64>,
    /// `|D*| / r`, or `alpha*`.
    pub size_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_subset: Option<Vec<usize>>,
    /// Maximum of the rho-free part of the objective.
    pub max_ratio: f64,
    /// Objective evaluated at `rho_star`; equals the target up to solver error.
    pub objective_value: f64,
    /// Whether `rho_star * max p_ij <= 1` inside the community.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible: Option<bool>,
    /// Exact prefix-search values for empirical weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_prefix: Option<ExactPrefix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPrefix {
    pub rho_star: f64,
    pub optimal_size: usize,
}

/// `rho = 1 + h^-1(target / ratio)`.
pub(crate) fn rho_for_ratio(ratio: f64, target: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::Degenerate(
            "boundary objective is zero; no finite scaling reaches the target".into(),
        ));
    }
    Ok(1.0 + entropy_h_inverse(target / ratio, KernelTolerance::default())?)
}

/// Best prefix length of `sorted_desc` under `E(D_k) / (k L(k))` with
/// `E(D_k) = ((sum w)^2 - sum w^2) / 2`. Ties go to the shorter prefix.
pub(crate) fn best_prefix(sorted_desc: &[f64], n: f64, denominator: Denominator) -> (usize, f64) {
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut best = (1, 0.0);
    for (idx, &w) in sorted_desc.iter().enumerate() {
        sum += w;
        sum_sq += w * w;
        let k = (idx + 1) as f64;
        let value = 0.5 * (sum * sum - sum_sq) / (k * denominator.log_factor(n, k));
        if value > best.1 {
            best = (idx + 1, value);
        }
    }
    best
}

/// Argmax over `D ⊆ C` of `E_0[e(D)] / (|D| ln(n/|D|))` and its value.
///
/// Rank-1 and homogeneous models only need the weight-sorted prefixes of `C`;
/// general models are searched exhaustively when `2^|C|` fits the budget.
pub fn optimal_subgraph(
    model: &EdgeProbabilityModel,
    community: &[usize],
    budget: u64,
) -> Result<(Vec<usize>, f64)> {
    let n = model.n();
    check_set(n, community)?;
    if community.is_empty() || community.len() >= n {
        return Err(Error::validation(format!(
            "community size {} must satisfy 1 <= |C| < n = {n}",
            community.len()
        )));
    }
    let objective = |set: &[usize]| {
        let k = set.len() as f64;
        model.expected_edges_unchecked(set) / (k * (n as f64 / k).ln())
    };
    match model {
        EdgeProbabilityModel::Homogeneous { .. } | EdgeProbabilityModel::RankOne { .. } => {
            let mut ordered = community.to_vec();
            if let Some(w) = model.weights() {
                ordered.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
            }
            let mut best: (Vec<usize>, f64) = (vec![ordered[0]], 0.0);
            for k in 2..=ordered.len() {
                let mut set = ordered[..k].to_vec();
                set.sort_unstable();
                let value = objective(&set);
                if value > best.1 {
                    best = (set, value);
                }
            }
            Ok(best)
        }
        EdgeProbabilityModel::GeneralMatrix { .. } => {
            let c = community.len();
            let count = 2f64.powi(c as i32);
            if c >= 63 || count > budget as f64 {
                return Err(Error::budget("optimal subgraph brute force", count, budget));
            }
            let mut best: (Vec<usize>, f64) = (vec![community[0]], 0.0);
            let mut set = Vec::with_capacity(c);
            for mask in 1u64..(1u64 << c) {
                set.clear();
                set.extend((0..c).filter(|b| mask >> b & 1 == 1).map(|b| community[b]));
                let value = objective(&set);
                let better = value > best.1
                    || (value == best.1
                        && (set.len(), set.as_slice()) < (best.0.len(), best.0.as_slice()));
                if better {
                    best = (set.clone(), value);
                }
            }
            Ok(best)
        }
    }
}

/// Threshold scaling `rho*` for community `C`: the scaling at which
/// `max_D E_0[e(D)] h(rho - 1) / (|D| ln(n/|D|))` equals `target`.
pub fn threshold_scaling(
    model: &EdgeProbabilityModel,
    community: &[usize],
    target: f64,
    budget: u64,
) -> Result<BoundaryResult> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::validation(format!(
            "target must be finite and >= 0, got {target}"
        )));
    }
    let (subset, ratio) = optimal_subgraph(model, community, budget)?;
    if !(ratio > 0.0) {
        return Err(Error::Degenerate("E_0[e(D*)] = 0".into()));
    }
    let rho_star = if target == 0.0 {
        1.0
    } else {
        rho_for_ratio(ratio, target)?
    };
    let p_max = model.max_probability_within(community);
    let size = subset.len();
    Ok(BoundaryResult {
        rho_star,
        optimal_size: Some(size as f64),
        size_fraction: size as f64 / community.len() as f64,
        optimal_subset: Some(subset),
        max_ratio: ratio,
        objective_value: ratio * h_unchecked(rho_star - 1.0),
        feasible: Some(rho_star * p_max <= 1.0),
        exact_prefix: None,
    })
}

/// Which part of a two-weight community carries the evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoWeightRegime {
    WholeC,
    LargeWeightOnly,
}

/// Threshold `(|C| - 1 + R^2) / (R - 1)^2` with `R = w_max / w_min`, and the
/// regime it predicts for `|C_max|` large-weight vertices. The `1 + o(1)`
/// factor is taken to be 1.
pub fn two_weight_regime(
    community_size: usize,
    large_count: usize,
    w_max: f64,
    w_min: f64,
) -> Result<(TwoWeightRegime, f64)> {
    if !(w_min > 0.0) || !(w_max >= w_min) || !w_max.is_finite() {
        return Err(Error::validation(format!(
            "two-weight regime needs w_max >= w_min > 0, got ({w_max}, {w_min})"
        )));
    }
    if large_count > community_size {
        return Err(Error::validation("|C_max| cannot exceed |C|"));
    }
    if w_max == w_min {
        return Ok((TwoWeightRegime::WholeC, f64::INFINITY));
    }
    let ratio = w_max / w_min;
    let threshold = (community_size as f64 - 1.0 + ratio * ratio) / ((ratio - 1.0) * (ratio - 1.0));
    let regime = if large_count as f64 > threshold {
        TwoWeightRegime::LargeWeightOnly
    } else {
        TwoWeightRegime::WholeC
    };
    Ok((regime, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_optimal_subgraph_is_whole_community() {
        let m = EdgeProbabilityModel::homogeneous(200, 0.05).unwrap();
        let c: Vec<usize> = (10..30).collect();
        let (d, _) = optimal_subgraph(&m, &c, DEFAULT_SUBSET_BUDGET).unwrap();
        assert_eq!(d, c);
    }

    #[test]
    fn homogeneous_threshold_formula() {
        let (n, r, p) = (512usize, 8usize, 0.05);
        let m = EdgeProbabilityModel::homogeneous(n, p).unwrap();
        let c: Vec<usize> = (0..r).collect();
        let res = threshold_scaling(&m, &c, 1.0, DEFAULT_SUBSET_BUDGET).unwrap();
        let y = 2.0 * (n as f64 / r as f64).ln() / ((r - 1) as f64 * p);
        let rho = 1.0 + entropy_h_inverse(y, KernelTolerance::default()).unwrap();
        assert!((res.rho_star - rho).abs() < 1e-12);
        assert!((res.objective_value - 1.0).abs() < 1e-10);
        assert_eq!(res.feasible, Some(true));
        let zero = threshold_scaling(&m, &c, 0.0, DEFAULT_SUBSET_BUDGET).unwrap();
        assert_eq!(zero.rho_star, 1.0);
    }

    #[test]
    fn degenerate_and_infeasible() {
        let m = EdgeProbabilityModel::homogeneous(20, 0.0).unwrap();
        assert!(matches!(
            threshold_scaling(&m, &[0, 1, 2], 1.0, DEFAULT_SUBSET_BUDGET),
            Err(Error::Degenerate(_))
        ));
        let m = EdgeProbabilityModel::homogeneous(1000, 0.01).unwrap();
        let res = threshold_scaling(&m, &[0, 1, 2], 1.0, DEFAULT_SUBSET_BUDGET).unwrap();
        assert_eq!(res.feasible, Some(false));
    }

    #[test]
    fn general_model_budget() {
        let m = EdgeProbabilityModel::homogeneous(40, 0.1)
            .unwrap()
            .to_general();
        let c: Vec<usize> = (0..30).collect();
        assert!(matches!(
            optimal_subgraph(&m, &c, DEFAULT_SUBSET_BUDGET),
            Err(Error::Budget { .. })
        ));
        let (d, _) = optimal_subgraph(&m, &c[..10], DEFAULT_SUBSET_BUDGET).unwrap();
        assert_eq!(d, c[..10].to_vec());
    }

    #[test]
    fn two_weight_examples() {
        let (regime, threshold) = two_weight_regime(10, 10, 2.0, 1.0).unwrap();
        assert_eq!(regime, TwoWeightRegime::WholeC);
        assert!((threshold - 13.0).abs() < 1e-12);
        let (regime, threshold) = two_weight_regime(100, 20, 6.5, 1.0).unwrap();
        assert_eq!(regime, TwoWeightRegime::LargeWeightOnly);
        assert!((threshold - 141.25 / 30.25).abs() < 1e-12);
        assert_eq!(
            two_weight_regime(10, 3, 0.2, 0.2).unwrap().0,
            TwoWeightRegime::WholeC
        );
        assert!(two_weight_regime(10, 3, 0.1, 0.2).is_err());
    }

    #[test]
    fn two_weight_prefix_search_matches_formula() {
        // |C| = 10, ratio 2: the whole community wins for every composition.
        for large in 0..=10 {
            let mut w = vec![0.2; large];
            w.extend(vec![0.1; 10 - large]);
            let m = EdgeProbabilityModel::rank_one(w).unwrap();
            let c: Vec<usize> = (0..10).collect();
            // n enters only through ln(n/k); embed C in a larger vertex set.
            let mut weights = m.weights().unwrap().to_vec();
            weights.extend(vec![0.01; 190]);
            let big = EdgeProbabilityModel::rank_one(weights).unwrap();
            let (d, _) = optimal_subgraph(&big, &c, DEFAULT_SUBSET_BUDGET).unwrap();
            assert_eq!(d.len(), 10, "large = {large}");
        }
    }
}
