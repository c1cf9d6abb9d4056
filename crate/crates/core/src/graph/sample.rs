use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{check_set, membership, EdgeProbabilityModel, PlantedAlternative};
use crate::error::{Error, Result};

/// Symmetric adjacency stored as one bit row per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitAdjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    degrees: Vec<u32>,
    edges: u64,
}

impl BitAdjacency {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self {
            n,
            words,
            bits: vec![0; n * words],
            degrees: vec![0; n],
            edges: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inserts `{i, j}`; self-loops and repeats are ignored. Returns whether
    /// the edge was new.
    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        if i == j || self.has_edge(i, j) {
            return false;
        }
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
        self.degrees[i] += 1;
        self.degrees[j] += 1;
        self.edges += 1;
        true
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i] as usize
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| self.has_edge(i, j).then_some((i, j)))
        })
    }

    /// `|N(v) ∩ mask|` for a bit mask with the same row layout.
    #[inline]
    pub fn degree_into(&self, v: usize, mask: &[u64]) -> u32 {
        self.row(v)
            .iter()
            .zip(mask)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

/// Which hypothesis produced a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Planted {
        community: Vec<usize>,
        rho: f64,
    },
    /// Read from a file; provenance unknown.
    Imported,
}

/// Sampler variant recorded in the provenance of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// One uniform draw per unordered pair in lexicographic `(i < j)` order.
    #[default]
    Pairwise,
    /// Geometric gap skipping along the pair order; homogeneous models only.
    /// Not bit-compatible with `Pairwise` for the same seed.
    GeometricSkip,
}

/// One observed simple undirected graph with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub adjacency: BitAdjacency,
    pub seed: u64,
    pub hypothesis: Hypothesis,
    pub sampler: SamplerKind,
}

impl GraphSample {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        super::model::check_graph_vertex_count(n)?;
        let mut adjacency = BitAdjacency::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::domain(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::validation(format!("self-loop at vertex {i}")));
            }
            adjacency.insert(i, j);
        }
        Ok(Self {
            adjacency,
            seed: 0,
            hypothesis: Hypothesis::Imported,
            sampler: SamplerKind::Pairwise,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn total_edges(&self) -> u64 {
        self.adjacency.edge_count()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.has_edge(i, j)
    }

    /// Copy with one extra edge; used by monotonicity checks.
    pub fn with_edge(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.adjacency.insert(i, j);
        out
    }
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples `G` under the null: each pair independently `Bern(p_ij)`.
///
/// Panics if the model has more than [`MAX_GRAPH_VERTICES`] vertices.
///
/// [`MAX_GRAPH_VERTICES`]: super::MAX_GRAPH_VERTICES
pub fn sample_null(model: &EdgeProbabilityModel, seed: u64) -> GraphSample {
    let adjacency = sample_pairs(model, None, seed);
    GraphSample {
        adjacency,
        seed,
        hypothesis: Hypothesis::Null,
        sampler: SamplerKind::Pairwise,
    }
}

/// Samples `G` under the planted alternative: pairs inside the community use
/// `rho * p_ij`. With `rho = 1` the output is bit-identical to
/// [`sample_null`] for the same seed.
pub fn sample_alternative(
    model: &EdgeProbabilityModel,
    alt: &PlantedAlternative,
    seed: u64,
) -> Result<GraphSample> {
    if alt.community().iter().any(|&v| v >= model.n()) {
        return Err(Error::validation("community does not fit the model"));
    }
    let adjacency = sample_pairs(model, Some(alt), seed);
    Ok(GraphSample {
        adjacency,
        seed,
        hypothesis: Hypothesis::Planted {
            community: alt.community().to_vec(),
            rho: alt.rho(),
        },
        sampler: SamplerKind::Pairwise,
    })
}

fn sample_pairs(
    model: &EdgeProbabilityModel,
    alt: Option<&PlantedAlternative>,
    seed: u64,
) -> BitAdjacency {
    let n = model.n();
    assert!(
        n <= super::MAX_GRAPH_VERTICES,
        "cannot sample a graph on {n} vertices"
    );
    let mut rng = rng_from_seed(seed);
    let mut adjacency = BitAdjacency::empty(n);
    let inside = alt.map(|a| membership(n, a.community()));
    let rho = alt.map_or(1.0, |a| a.rho());
    for i in 0..n {
        for j in (i + 1)..n {
            let mut p = model.p(i, j);
            if let Some(mask) = &inside {
                if mask[i] && mask[j] {
                    p *= rho;
                }
            }
            let u: f64 = rng.gen();
            if u < p {
                adjacency.insert(i, j);
            }
        }
    }
    adjacency
}

/// Homogeneous null sampler that jumps between edges with geometric gaps.
/// Distributionally equal to [`sample_null`] but draws a different stream.
pub fn sample_null_sparse(model: &EdgeProbabilityModel, seed: u64) -> Result<GraphSample> {
    let EdgeProbabilityModel::Homogeneous { n, p } = *model else {
        return Err(Error::validation(
            "geometric-skip sampling needs a homogeneous model",
        ));
    };
    super::model::check_graph_vertex_count(n)?;
    let mut adjacency = BitAdjacency::empty(n);
    let total = (n as u64) * (n as u64 - 1) / 2;
    if p >= 1.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                adjacency.insert(i, j);
            }
        }
    } else if p > 0.0 {
        let mut rng = rng_from_seed(seed);
        let log_q = (-p).ln_1p();
        let mut pos: u64 = 0;
        let (mut row, mut row_start) = (0usize, 0u64);
        loop {
            let u: f64 = rng.gen();
            // Gap ~ Geometric(p) on {0, 1, ...}.
            let gap = ((1.0 - u).ln() / log_q).floor();
            if !gap.is_finite() || gap >= (total - pos) as f64 {
                break;
            }
            pos += gap as u64;
            // Advance the row cursor until `pos` falls inside row `row`.
            while pos >= row_start + (n - 1 - row) as u64 {
                row_start += (n - 1 - row) as u64;
                row += 1;
            }
            let col = row + 1 + (pos - row_start) as usize;
            adjacency.insert(row, col);
            pos += 1;
            if pos >= total {
                break;
            }
        }
    }
    Ok(GraphSample {
        adjacency,
        seed,
        hypothesis: Hypothesis::Null,
        sampler: SamplerKind::GeometricSkip,
    })
}

/// `e(D)`: number of edges with both endpoints in `D`.
pub fn edges_within(g: &GraphSample, set: &[usize]) -> Result<u64> {
    check_set(g.n(), set)?;
    Ok(edges_within_unchecked(&g.adjacency, set))
}

pub(crate) fn edges_within_unchecked(adj: &BitAdjacency, set: &[usize]) -> u64 {
    let mut count = 0u64;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            count += adj.has_edge(i, j) as u64;
        }
    }
    count
}

/// `e(D, -D)`: number of edges with exactly one endpoint in `D`.
pub fn edges_across(g: &GraphSample, set: &[usize]) -> Result<u64> {
    check_set(g.n(), set)?;
    Ok(edges_across_unchecked(&g.adjacency, set))
}

pub(crate) fn edges_across_unchecked(adj: &BitAdjacency, set: &[usize]) -> u64 {
    let degree_sum: u64 = set.iter().map(|&i| adj.degree(i) as u64).sum();
    degree_sum - 2 * edges_within_unchecked(adj, set)
}

/// `E_0[e(D)]`; thin wrapper kept next to the counting functions.
pub fn expected_edges_null(model: &EdgeProbabilityModel, set: &[usize]) -> Result<f64> {
    model.expected_edges(set)
}

pub fn expected_edges_across_null(model: &EdgeProbabilityModel, set: &[usize]) -> Result<f64> {
    model.expected_edges_across(set)
}

pub fn expected_total_null(model: &EdgeProbabilityModel) -> f64 {
    model.expected_total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_within(g: &GraphSample, set: &[usize]) -> u64 {
        let mut c = 0;
        for &i in set {
            for &j in set {
                if i < j && g.has_edge(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    fn naive_across(g: &GraphSample, set: &[usize]) -> u64 {
        let mut c = 0;
        for &i in set {
            for j in 0..g.n() {
                if !set.contains(&j) && g.has_edge(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn degenerate_probabilities() {
        let empty = EdgeProbabilityModel::homogeneous(30, 0.0).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_null(&empty, seed).total_edges(), 0);
        }
        let full = EdgeProbabilityModel::homogeneous(5, 1.0).unwrap();
        let k5 = sample_null(&full, 99);
        assert_eq!(k5.total_edges(), 10);
        assert_eq!(edges_within(&k5, &[0, 1, 2, 3, 4]).unwrap(), 10);
        assert_eq!(edges_across(&k5, &[0, 1]).unwrap(), 6);
        assert_eq!(edges_across(&k5, &[0, 1, 2, 3, 4]).unwrap(), 0);
        assert_eq!(edges_within(&k5, &[]).unwrap(), 0);
        assert_eq!(edges_within(&k5, &[3]).unwrap(), 0);
    }

    #[test]
    fn counts_match_naive_loops() {
        let model = EdgeProbabilityModel::homogeneous(40, 0.3).unwrap();
        let g = sample_null(&model, 7);
        for set in [
            vec![0, 3, 5, 9, 20, 39],
            vec![1],
            (0..40).step_by(3).collect(),
        ] {
            assert_eq!(edges_within(&g, &set).unwrap(), naive_within(&g, &set));
            assert_eq!(edges_across(&g, &set).unwrap(), naive_across(&g, &set));
        }
        assert!(edges_within(&g, &[0, 40]).is_err());
    }

    #[test]
    fn seeds_determine_samples() {
        let model = EdgeProbabilityModel::rank_one(vec![0.3; 25]).unwrap();
        assert_eq!(
            sample_null(&model, 11).adjacency,
            sample_null(&model, 11).adjacency
        );
        assert_ne!(
            sample_null(&model, 11).adjacency,
            sample_null(&model, 12).adjacency
        );
    }

    #[test]
    fn unit_scaling_is_bit_identical_to_null() {
        let model = EdgeProbabilityModel::homogeneous(30, 0.2).unwrap();
        let alt = PlantedAlternative::new(&model, vec![1, 4, 8, 20], 1.0).unwrap();
        for seed in 0..4 {
            let a = sample_alternative(&model, &alt, seed).unwrap();
            let b = sample_null(&model, seed);
            assert_eq!(a.adjacency, b.adjacency);
        }
    }

    #[test]
    fn imported_graph_rejects_bad_edges() {
        assert!(GraphSample::from_edges(3, [(0, 3)]).is_err());
        assert!(GraphSample::from_edges(3, [(1, 1)]).is_err());
        let g = GraphSample::from_edges(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.total_edges(), 2);
        assert_eq!(
            g.adjacency.edges().collect::<Vec<_>>(),
            vec![(0, 1), (1, 2)]
        );
    }

    #[test]
    fn sparse_sampler_extremes_and_provenance() {
        let m = EdgeProbabilityModel::homogeneous(6, 1.0).unwrap();
        let g = sample_null_sparse(&m, 1).unwrap();
        assert_eq!(g.total_edges(), 15);
        assert_eq!(g.sampler, SamplerKind::GeometricSkip);
        let m = EdgeProbabilityModel::homogeneous(50, 0.0).unwrap();
        assert_eq!(sample_null_sparse(&m, 1).unwrap().total_edges(), 0);
        let r1 = EdgeProbabilityModel::rank_one(vec![0.5; 4]).unwrap();
        assert!(sample_null_sparse(&r1, 0).is_err());
    }

    #[test]
    fn sparse_sampler_mean() {
        let m = EdgeProbabilityModel::homogeneous(60, 0.1).unwrap();
        let reps = 2000;
        let total: u64 = (0..reps)
            .map(|s| sample_null_sparse(&m, s).unwrap().total_edges())
            .sum();
        let mean = total as f64 / reps as f64;
        let expected = 1770.0 * 0.1;
        let sd = (1770.0_f64 * 0.1 * 0.9 / reps as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * sd, "{mean}");
    }
}
