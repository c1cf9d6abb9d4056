//! Scan statistics for known and unknown (rank-1) edge probabilities.
//!
//! Both statistics have the form `E h([e(D)/E - 1]_+) / (|D| ln(n/|D|))`.
//! The known-probability scan uses `E = E_0[e(D)]`; the unknown scan
//! replaces it with an estimate built from `e(V)` and `e(D, -D)`, floored at
//! `(|D|^2/n) ln^4(n/|D|)`.

mod family;
mod search;

use serde::{Deserialize, Serialize};

use crate::entropy::surplus;
use crate::error::{Error, Result};
use crate::graph::{
    check_set, edges_across_unchecked, edges_within_unchecked, EdgeProbabilityModel, GraphSample,
};

pub use family::SubsetFamily;

/// Default cap on the number of subsets (or search nodes) one scan may visit.
pub const DEFAULT_BUDGET: u64 = 5_000_000;

/// How an exhaustive family is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanSearch {
    /// Visit every subset. The family size is checked against the budget
    /// before any work is done.
    #[default]
    Enumerate,
    /// Visit only subsets that could reach the rejection threshold. The
    /// decision is always exact; the reported statistic is exact whenever it
    /// reaches the threshold and a lower bound otherwise.
    Certified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub r: usize,
    pub epsilon: f64,
    pub family: SubsetFamily,
    #[serde(default)]
    pub search: ScanSearch,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

impl ScanConfig {
    /// Exhaustive scan over sizes `2..=r` with `epsilon = 0.2`.
    pub fn new(r: usize) -> Self {
        Self {
            r,
            epsilon: 0.2,
            family: SubsetFamily::exhaustive(2.min(r), r),
            search: ScanSearch::Enumerate,
            budget: DEFAULT_BUDGET,
        }
    }

    /// Exhaustive scan over the sizes the unknown-probability test allows.
    pub fn unknown(r: usize) -> Self {
        Self {
            family: SubsetFamily::exhaustive(min_unknown_size(r), r),
            ..Self::new(r)
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_family(mut self, family: SubsetFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_search(mut self, search: ScanSearch) -> Self {
        self.search = search;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.r == 0 || self.r >= n {
            return Err(Error::validation(format!(
                "community size r = {} must satisfy 1 <= r < n = {n}",
                self.r
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::validation(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn known_threshold(&self) -> f64 {
        1.0 + self.epsilon / 2.0
    }

    pub fn unknown_threshold(&self) -> f64 {
        1.0 + self.epsilon / 3.0
    }
}

/// `ceil(r^(1/3))`, the smallest size the unknown-probability scan visits.
///
/// The cube root is nudged down by 1e-9 before rounding up so that perfect
/// cubes are not pushed to the next integer by representation error.
pub fn min_unknown_size(r: usize) -> usize {
    ((r as f64).cbrt() - 1e-9).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeTrace {
    pub size: usize,
    pub statistic: f64,
    /// False when the value is only a lower bound (certified search).
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub statistic: f64,
    pub subset: Vec<usize>,
    pub threshold: f64,
    pub reject: bool,
    pub family: String,
    pub epsilon: f64,
    pub r: usize,
    pub trace: Vec<SizeTrace>,
    /// Whether `statistic` is the exact maximum over the family.
    pub certified_exact: bool,
    /// Subsets (or search nodes) visited.
    pub evaluated: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ScanOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan outcome serializes")
    }
}

fn normalizer(n: usize, k: usize) -> f64 {
    k as f64 * (n as f64 / k as f64).ln()
}

fn check_stat_set(n: usize, set: &[usize]) -> Result<()> {
    check_set(n, set)?;
    if set.is_empty() || set.len() >= n {
        return Err(Error::domain(format!(
            "statistic needs 1 <= |D| < n, got |D| = {} with n = {n}",
            set.len()
        )));
    }
    Ok(())
}

/// Known-probability statistic of one subset.
pub fn stat_known(model: &EdgeProbabilityModel, set: &[usize], g: &GraphSample) -> Result<f64> {
    if model.n() != g.n() {
        return Err(Error::validation(
            "model and sample have different vertex counts",
        ));
    }
    check_stat_set(g.n(), set)?;
    let e = edges_within_unchecked(&g.adjacency, set);
    Ok(stat_known_from_counts(
        model.expected_edges_unchecked(set),
        e,
        g.n(),
        set.len(),
    ))
}

pub(crate) fn stat_known_from_counts(expected: f64, within: u64, n: usize, k: usize) -> f64 {
    surplus(within as f64, expected) / normalizer(n, k)
}

/// `(sqrt(total) - sqrt(total - 2 across))^2 / 4`, radicand clamped at 0.
pub fn expected_edges_estimator(total: f64, across: f64) -> f64 {
    let root = total.sqrt() - (total - 2.0 * across).max(0.0).sqrt();
    root * root / 4.0
}

/// `(k^2 / n) ln^4(n / k)`.
pub fn estimator_floor(k: usize, n: usize) -> f64 {
    let k = k as f64;
    let n = n as f64;
    // Plain products: `powi` may fold differently across call sites.
    let l = (n / k).ln();
    let l2 = l * l;
    k * k / n * (l2 * l2)
}

/// Rank-1 estimate of `E_0[e(D)]` from the observed graph.
pub fn estimate_expected_edges(g: &GraphSample, set: &[usize]) -> Result<f64> {
    check_stat_set(g.n(), set)?;
    let across = edges_across_unchecked(&g.adjacency, set);
    Ok(expected_edges_estimator(
        g.total_edges() as f64,
        across as f64,
    ))
}

/// The rank-1 estimate floored at `(|D|^2/n) ln^4(n/|D|)`.
pub fn estimate_expected_edges_thresholded(g: &GraphSample, set: &[usize]) -> Result<f64> {
    let raw = estimate_expected_edges(g, set)?;
    Ok(raw.max(estimator_floor(set.len(), g.n())))
}

/// Unknown-probability statistic of one subset.
pub fn stat_unknown(g: &GraphSample, set: &[usize]) -> Result<f64> {
    check_stat_set(g.n(), set)?;
    let within = edges_within_unchecked(&g.adjacency, set);
    let degree_sum: u64 = set.iter().map(|&v| g.adjacency.degree(v) as u64).sum();
    Ok(stat_unknown_from_counts(
        g.total_edges(),
        degree_sum,
        within,
        g.n(),
        set.len(),
    ))
}

pub(crate) fn stat_unknown_from_counts(
    total: u64,
    degree_sum: u64,
    within: u64,
    n: usize,
    k: usize,
) -> f64 {
    let across = degree_sum - 2 * within;
    let estimate = expected_edges_estimator(total as f64, across as f64).max(estimator_floor(k, n));
    surplus(within as f64, estimate) / normalizer(n, k)
}

/// Known-probability scan: rejects iff the maximum reaches `1 + epsilon/2`.
pub fn scan_known(
    model: &EdgeProbabilityModel,
    g: &GraphSample,
    cfg: &ScanConfig,
) -> Result<ScanOutcome> {
    if model.n() != g.n() {
        return Err(Error::validation(
            "model and sample have different vertex counts",
        ));
    }
    cfg.validate(g.n())?;
    cfg.family.validate(g.n(), 1, cfg.r)?;
    let eval = search::Evaluator::known(model, g);
    search::run(&eval, cfg, cfg.known_threshold())
}

/// Unknown-probability scan over sizes in `[ceil(r^(1/3)), r]`; rejects iff
/// the maximum reaches `1 + epsilon/3`.
pub fn scan_unknown(g: &GraphSample, cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate(g.n())?;
    cfg.family.validate(g.n(), min_unknown_size(cfg.r), cfg.r)?;
    let eval = search::Evaluator::unknown(g);
    search::run(&eval, cfg, cfg.unknown_threshold())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy_h;
    use crate::graph::{sample_null, PlantedAlternative};

    fn graph_with_clique(n: usize, clique: &[usize]) -> GraphSample {
        let mut edges = Vec::new();
        for (a, &i) in clique.iter().enumerate() {
            for &j in &clique[a + 1..] {
                edges.push((i, j));
            }
        }
        GraphSample::from_edges(n, edges).unwrap()
    }

    #[test]
    fn known_statistic_example() {
        let model = EdgeProbabilityModel::homogeneous(100, 0.1).unwrap();
        // Three of the six pairs in {0, 1, 2, 3}.
        let g = GraphSample::from_edges(100, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let t = stat_known(&model, &[0, 1, 2, 3], &g).unwrap();
        let expected = 0.6 * entropy_h(4.0).unwrap() / (4.0 * 25f64.ln());
        assert!((t - expected).abs() < 1e-15);
        assert!((t - 0.188_600).abs() < 1e-6, "{t}");
        assert_eq!(stat_known(&model, &[0, 5], &g).unwrap(), 0.0);
    }

    #[test]
    fn known_statistic_errors_and_zero_probability() {
        let model = EdgeProbabilityModel::homogeneous(4, 0.1).unwrap();
        let g = graph_with_clique(4, &[0, 1, 2]);
        assert!(matches!(
            stat_known(&model, &[0, 1, 2, 3], &g),
            Err(Error::Domain(_))
        ));
        assert!(matches!(stat_known(&model, &[], &g), Err(Error::Domain(_))));
        let zero = EdgeProbabilityModel::homogeneous(4, 0.0).unwrap();
        assert_eq!(stat_known(&zero, &[0, 1, 2], &g).unwrap(), 0.0);
    }

    #[test]
    fn planted_clique_statistic() {
        let model = EdgeProbabilityModel::homogeneous(50, 0.05).unwrap();
        let community: Vec<usize> = (10..16).collect();
        let alt = PlantedAlternative::new(&model, community.clone(), 20.0).unwrap();
        let g = crate::graph::sample_alternative(&model, &alt, 3).unwrap();
        assert_eq!(crate::graph::edges_within(&g, &community).unwrap(), 15);
        let t = stat_known(&model, &community, &g).unwrap();
        let expected = 0.75 * entropy_h(19.0).unwrap() / (6.0 * (50.0f64 / 6.0).ln());
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 2.412_12).abs() < 1e-5, "{t}");
        assert!(t >= 1.1);
    }

    #[test]
    fn estimator_examples() {
        assert!((expected_edges_estimator(100.0, 18.0) - 1.0).abs() < 1e-15);
        assert_eq!(expected_edges_estimator(100.0, 0.0), 0.0);
        assert_eq!(expected_edges_estimator(0.0, 0.0), 0.0);
        // Radicand clamp: 2 * across > total gives the largest admissible value.
        assert!((expected_edges_estimator(10.0, 7.0) - 2.5).abs() < 1e-15);
        let floor = estimator_floor(4, 1024);
        assert!((floor - 14.773_446_309).abs() < 1e-8, "{floor}");
    }

    #[test]
    fn thresholded_estimate_and_unknown_statistic() {
        // n = 1024 with a K_8 on {0..8}: |D| = 4 inside it has e(D) = 6.
        let g = graph_with_clique(1024, &(0..8).collect::<Vec<_>>());
        let set = [0, 1, 2, 3];
        let raw = estimate_expected_edges(&g, &set).unwrap();
        let tr = estimate_expected_edges_thresholded(&g, &set).unwrap();
        assert!(raw < tr);
        assert_eq!(tr, estimator_floor(4, 1024));
        assert_eq!(stat_unknown(&g, &set).unwrap(), 0.0);

        let value = stat_unknown_from_counts(10_000, 60, 30, 1024, 4);
        let floor = estimator_floor(4, 1024);
        let expected = floor * entropy_h(30.0 / floor - 1.0).unwrap() / (4.0 * 256f64.ln());
        assert!((value - expected).abs() < 1e-14);
        assert!((value - 0.271_607).abs() < 1e-6, "{value}");
    }

    #[test]
    fn empty_graph_scans_do_not_reject() {
        let model = EdgeProbabilityModel::homogeneous(9, 0.3).unwrap();
        let g = GraphSample::from_edges(9, []).unwrap();
        let k = scan_known(&model, &g, &ScanConfig::new(4)).unwrap();
        assert_eq!(k.statistic, 0.0);
        assert!(!k.reject);
        assert_eq!(k.subset, vec![0, 1]);
        let u = scan_unknown(&g, &ScanConfig::unknown(8)).unwrap();
        assert_eq!(u.statistic, 0.0);
        assert!(!u.reject);
    }

    #[test]
    fn config_validation() {
        let model = EdgeProbabilityModel::homogeneous(9, 0.3).unwrap();
        let g = sample_null(&model, 1);
        assert!(scan_known(&model, &g, &ScanConfig::new(9)).is_err());
        assert!(scan_known(&model, &g, &ScanConfig::new(3).with_epsilon(0.0)).is_err());
        let too_big = ScanConfig::new(3).with_family(SubsetFamily::exhaustive(2, 4));
        assert!(scan_known(&model, &g, &too_big).is_err());
        let too_small = ScanConfig::new(8).with_family(SubsetFamily::exhaustive(1, 8));
        assert!(matches!(
            scan_unknown(&g, &too_small),
            Err(Error::Validation(_))
        ));
        assert!(scan_unknown(&g, &ScanConfig::unknown(8)).is_ok());
    }

    #[test]
    fn budget_is_checked_before_work() {
        let model = EdgeProbabilityModel::homogeneous(512, 0.05).unwrap();
        let g = sample_null(&model, 0);
        let err = scan_known(&model, &g, &ScanConfig::new(8)).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }), "{err}");
    }

    #[test]
    fn min_sizes() {
        assert_eq!(min_unknown_size(1), 1);
        assert_eq!(min_unknown_size(8), 2);
        assert_eq!(min_unknown_size(9), 3);
        assert_eq!(min_unknown_size(27), 3);
        assert_eq!(min_unknown_size(28), 4);
        assert_eq!(min_unknown_size(1000), 10);
    }

    #[test]
    fn outcome_json_fields() {
        let model = EdgeProbabilityModel::homogeneous(8, 0.3).unwrap();
        let g = sample_null(&model, 4);
        let out = scan_known(&model, &g, &ScanConfig::new(3)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.to_json()).unwrap();
        for key in [
            "statistic",
            "subset",
            "threshold",
            "reject",
            "family",
            "epsilon",
            "r",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["family"], "exhaustive(2..3)");
    }

    #[test]
    fn large_r_is_flagged() {
        let model = EdgeProbabilityModel::homogeneous(8, 0.3).unwrap();
        let g = sample_null(&model, 4);
        let out = scan_known(&model, &g, &ScanConfig::new(5)).unwrap();
        assert_eq!(out.warnings.len(), 1);
        let out = scan_known(&model, &g, &ScanConfig::new(3)).unwrap();
        assert!(out.warnings.is_empty());
    }
}
