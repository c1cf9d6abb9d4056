use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count of a homogeneous or rank-1 model.
pub const MAX_VERTICES: usize = 1 << 24;
/// Largest vertex count of a general matrix model.
pub const MAX_MATRIX_VERTICES: usize = 1 << 14;
/// Largest vertex count of a sampled or imported graph.
pub const MAX_GRAPH_VERTICES: usize = 1 << 16;

/// Null-hypothesis edge probabilities `p_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EdgeProbabilityModel {
    /// Erdős–Rényi: every pair has probability `p`.
    Homogeneous { n: usize, p: f64 },
    /// `p_ij = theta_i * theta_j`.
    RankOne { weights: Vec<f64> },
    /// Arbitrary symmetric matrix with zero diagonal, stored row-major.
    GeneralMatrix { n: usize, probs: Vec<f64> },
}

impl EdgeProbabilityModel {
    pub fn homogeneous(n: usize, p: f64) -> Result<Self> {
        check_vertex_count(n)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
        Ok(Self::Homogeneous { n, p })
    }

    pub fn rank_one(weights: Vec<f64>) -> Result<Self> {
        check_vertex_count(weights.len())?;
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && **w < 1.0))
        {
            return Err(Error::validation(format!(
                "rank-1 weight theta_{i} = {w} outside (0, 1)"
            )));
        }
        Ok(Self::RankOne { weights })
    }

    pub fn general(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        check_vertex_count(n)?;
        let mut probs = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            probs.extend_from_slice(row);
        }
        Self::general_flat(n, probs)
    }

    pub fn general_flat(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_vertex_count(n)?;
        if n > MAX_MATRIX_VERTICES {
            return Err(Error::validation(format!(
                "matrix models are limited to {MAX_MATRIX_VERTICES} vertices, got {n}"
            )));
        }
        if probs.len() != n * n {
            return Err(Error::validation(format!(
                "matrix has {} entries, expected {}",
                probs.len(),
                n * n
            )));
        }
        for i in 0..n {
            if probs[i * n + i] != 0.0 {
                return Err(Error::validation(format!(
                    "diagonal entry ({i}, {i}) is nonzero"
                )));
            }
            for j in (i + 1)..n {
                let a = probs[i * n + j];
                let b = probs[j * n + i];
                if a != b {
                    return Err(Error::validation(format!(
                        "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::validation(format!(
                        "probability at ({i}, {j}) = {a} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self::GeneralMatrix { n, probs })
    }

    /// Re-checks the invariants; used after deserialization.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Homogeneous { n, p } => Self::homogeneous(n, p),
            Self::RankOne { weights } => Self::rank_one(weights),
            Self::GeneralMatrix { n, probs } => Self::general_flat(n, probs),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Homogeneous { n, .. } | Self::GeneralMatrix { n, .. } => *n,
            Self::RankOne { weights } => weights.len(),
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Self::RankOne { weights } => Some(weights),
            _ => None,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Self::Homogeneous { .. })
    }

    /// Probability of edge `{i, j}`; zero on the diagonal.
    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self {
            Self::Homogeneous { p, .. } => *p,
            Self::RankOne { weights } => weights[i] * weights[j],
            Self::GeneralMatrix { n, probs } => probs[i * n + j],
        }
    }

    pub fn max_probability(&self) -> f64 {
        match self {
            Self::Homogeneous { n, p } => {
                if *n >= 2 {
                    *p
                } else {
                    0.0
                }
            }
            Self::RankOne { weights } => {
                let mut top = [0.0_f64; 2];
                for &w in weights {
                    if w > top[0] {
                        top[1] = top[0];
                        top[0] = w;
                    } else if w > top[1] {
                        top[1] = w;
                    }
                }
                top[0] * top[1]
            }
            Self::GeneralMatrix { probs, .. } => probs.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Largest `p_ij` over pairs inside `set`.
    pub fn max_probability_within(&self, set: &[usize]) -> f64 {
        let mut best = 0.0_f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                best = best.max(self.p(i, j));
            }
        }
        best
    }

    /// `E_0[e(D)] = sum_{i<j in D} p_ij`.
    pub fn expected_edges(&self, set: &[usize]) -> Result<f64> {
        check_set(self.n(), set)?;
        Ok(self.expected_edges_unchecked(set))
    }

    pub(crate) fn expected_edges_unchecked(&self, set: &[usize]) -> f64 {
        let k = set.len();
        if k < 2 {
            return 0.0;
        }
        match self {
            Self::Homogeneous { p, .. } => p * (k * (k - 1) / 2) as f64,
            Self::RankOne { weights } => {
                let (sum, sum_sq) = set.iter().fold((0.0, 0.0), |(s, q), &i| {
                    let w = weights[i];
                    (s + w, q + w * w)
                });
                0.5 * (sum * sum - sum_sq)
            }
            Self::GeneralMatrix { n, probs } => {
                let mut total = 0.0;
                for (a, &i) in set.iter().enumerate() {
                    let row = &probs[i * n..(i + 1) * n];
                    for &j in &set[a + 1..] {
                        total += row[j];
                    }
                }
                total
            }
        }
    }

    /// `E_0[e(D, -D)]`, expected edges with exactly one endpoint in `D`.
    pub fn expected_edges_across(&self, set: &[usize]) -> Result<f64> {
        check_set(self.n(), set)?;
        let n = self.n();
        let k = set.len();
        Ok(match self {
            Self::Homogeneous { p, .. } => p * (k * (n - k)) as f64,
            Self::RankOne { weights } => {
                let total: f64 = weights.iter().sum();
                let inside: f64 = set.iter().map(|&i| weights[i]).sum();
                inside * (total - inside)
            }
            Self::GeneralMatrix { probs, .. } => {
                let mask = membership(n, set);
                let mut total = 0.0;
                for &i in set {
                    let row = &probs[i * n..(i + 1) * n];
                    total += row
                        .iter()
                        .zip(&mask)
                        .filter(|(_, inside)| !**inside)
                        .map(|(p, _)| *p)
                        .sum::<f64>();
                }
                total
            }
        })
    }

    /// `E_0[e(V)]`.
    pub fn expected_total(&self) -> f64 {
        let n = self.n();
        match self {
            Self::Homogeneous { p, .. } => p * (n * n.saturating_sub(1) / 2) as f64,
            Self::RankOne { weights } => {
                let (s, q) = weights
                    .iter()
                    .fold((0.0, 0.0), |(s, q), w| (s + w, q + w * w));
                0.5 * (s * s - q)
            }
            Self::GeneralMatrix { probs, .. } => {
                let mut total = 0.0;
                for i in 0..n {
                    total += probs[i * n + i + 1..(i + 1) * n].iter().sum::<f64>();
                }
                total
            }
        }
    }

    /// Dense copy of the model as a general matrix.
    pub fn to_general(&self) -> Self {
        let n = self.n();
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                probs[i * n + j] = self.p(i, j);
            }
        }
        Self::GeneralMatrix { n, probs }
    }

    /// Sum of the `k(k-1)/2` smallest pair probabilities any `k`-set can have;
    /// a lower bound on `E_0[e(D)]` over `|D| = k`.
    pub(crate) fn expected_edges_lower_bound(&self, k: usize) -> f64 {
        if k < 2 {
            return 0.0;
        }
        match self {
            Self::Homogeneous { p, .. } => p * (k * (k - 1) / 2) as f64,
            Self::RankOne { weights } => {
                // For positive weights the k lightest vertices minimise every
                // elementary symmetric sum, so this bound is attained.
                let mut w = weights.clone();
                w.sort_by(|a, b| a.total_cmp(b));
                let (s, q) = w[..k]
                    .iter()
                    .fold((0.0, 0.0), |(s, q), x| (s + x, q + x * x));
                0.5 * (s * s - q)
            }
            Self::GeneralMatrix { n, probs } => {
                let mut upper: Vec<f64> = (0..*n)
                    .flat_map(|i| probs[i * n + i + 1..(i + 1) * n].iter().copied())
                    .collect();
                let m = k * (k - 1) / 2;
                upper.sort_by(|a, b| a.total_cmp(b));
                upper[..m.min(upper.len())].iter().sum()
            }
        }
    }
}

/// Community `C` and multiplicative scaling `rho_C` defining one alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedAlternative {
    community: Vec<usize>,
    rho: f64,
}

impl PlantedAlternative {
    /// Validates `rho >= 1` and `rho * p_ij <= 1` for every pair inside the
    /// community.
    pub fn new(model: &EdgeProbabilityModel, community: Vec<usize>, rho: f64) -> Result<Self> {
        if community.is_empty() {
            return Err(Error::validation("planted community must be non-empty"));
        }
        check_set(model.n(), &community)?;
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::validation(format!(
                "scaling rho = {rho} must be a finite value >= 1"
            )));
        }
        for (a, &i) in community.iter().enumerate() {
            for &j in &community[a + 1..] {
                let scaled = rho * model.p(i, j);
                if scaled > 1.0 {
                    return Err(Error::validation(format!(
                        "rho * p_ij = {scaled} > 1 for pair ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { community, rho })
    }

    pub fn community(&self) -> &[usize] {
        &self.community
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn size(&self) -> usize {
        self.community.len()
    }
}

pub(crate) fn check_vertex_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VERTICES {
        return Err(Error::validation(format!(
            "vertex count {n} outside [1, {MAX_VERTICES}]"
        )));
    }
    Ok(())
}

pub(crate) fn check_graph_vertex_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GRAPH_VERTICES {
        return Err(Error::validation(format!(
            "graph vertex count {n} outside [1, {MAX_GRAPH_VERTICES}]"
        )));
    }
    Ok(())
}

/// Vertex sets are strictly increasing lists of indices below `n`.
pub fn check_set(n: usize, set: &[usize]) -> Result<()> {
    for (pos, &v) in set.iter().enumerate() {
        if v >= n {
            return Err(Error::domain(format!(
                "vertex {v} out of range for n = {n}"
            )));
        }
        if pos > 0 && set[pos - 1] >= v {
            return Err(Error::domain(format!(
                "vertex set must be strictly increasing, found {} before {v}",
                set[pos - 1]
            )));
        }
    }
    Ok(())
}

/// Sorts and deduplicates an arbitrary index list into a vertex set.
pub fn vertex_set(indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = indices.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub(crate) fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in set {
        mask[i] = true;
    }
    mask
}
