//! Edge-list text format and JSON model descriptors.
//!
//! Edge lists start with a header line `n m`, followed by `m` lines `i j`
//! with 0-based indices and `i < j`. Blank lines and lines starting with `#`
//! are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::EdgeProbabilityModel;
use super::sample::GraphSample;
use crate::error::{Error, Result};

pub fn write_edge_list(g: &GraphSample) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.total_edges());
    for (i, j) in g.adjacency.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn read_edge_list(text: &str) -> Result<GraphSample> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("edge list is empty".into()))?;
    let (n, m) = parse_pair(header, 1)?;
    let mut edges = Vec::with_capacity(m);
    for (no, line) in lines {
        let (i, j) = parse_pair(line, no)?;
        if i >= j {
            return Err(Error::Parse(format!(
                "line {no}: expected i < j, got {i} {j}"
            )));
        }
        edges.push((i, j));
    }
    if edges.len() != m {
        return Err(Error::Parse(format!(
            "header announces {m} edges, found {}",
            edges.len()
        )));
    }
    let g = GraphSample::from_edges(n, edges)?;
    if g.total_edges() as usize != m {
        return Err(Error::Parse("edge list contains duplicate edges".into()));
    }
    Ok(g)
}

fn parse_pair(line: &str, no: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse(format!(
            "line {no}: expected two integers, got {line:?}"
        ))),
    }
}

pub fn load_edge_list(path: &Path) -> Result<GraphSample> {
    read_edge_list(&std::fs::read_to_string(path)?)
}

pub fn save_edge_list(g: &GraphSample, path: &Path) -> Result<()> {
    std::fs::write(path, write_edge_list(g))?;
    Ok(())
}

/// On-disk description of a model, e.g.
/// `{"variant": "homogeneous", "n": 100, "p": 0.1}`,
/// `{"variant": "rank_one", "weights": [...]}` or
/// `{"variant": "general_matrix", "matrix_path": "p.json"}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// JSON file holding the matrix as an array of rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl ModelDescriptor {
    /// Builds the model; relative `matrix_path`s resolve against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<EdgeProbabilityModel> {
        match self.variant.as_str() {
            "homogeneous" => {
                let n = self.n.ok_or_else(|| missing("n"))?;
                let p = self.p.ok_or_else(|| missing("p"))?;
                EdgeProbabilityModel::homogeneous(n, p)
            }
            "rank_one" => {
                let w = self.weights.clone().ok_or_else(|| missing("weights"))?;
                if let Some(n) = self.n {
                    if n != w.len() {
                        return Err(Error::validation(format!(
                            "n = {n} but {} weights given",
                            w.len()
                        )));
                    }
                }
                EdgeProbabilityModel::rank_one(w)
            }
            "general_matrix" => {
                let rows = match (&self.matrix, &self.matrix_path) {
                    (Some(m), None) => m.clone(),
                    (None, Some(path)) => {
                        let path = match base_dir {
                            Some(dir) if path.is_relative() => dir.join(path),
                            _ => path.clone(),
                        };
                        serde_json::from_str(&std::fs::read_to_string(path)?)?
                    }
                    _ => {
                        return Err(Error::validation(
                            "general_matrix needs exactly one of matrix, matrix_path",
                        ))
                    }
                };
                EdgeProbabilityModel::general(rows)
            }
            other => Err(Error::validation(format!(
                "unknown model variant {other:?}"
            ))),
        }
    }

    pub fn from_model(model: &EdgeProbabilityModel) -> Self {
        match model {
            EdgeProbabilityModel::Homogeneous { n, p } => Self {
                variant: "homogeneous".into(),
                n: Some(*n),
                p: Some(*p),
                ..Self::default()
            },
            EdgeProbabilityModel::RankOne { weights } => Self {
                variant: "rank_one".into(),
                weights: Some(weights.clone()),
                ..Self::default()
            },
            EdgeProbabilityModel::GeneralMatrix { n, probs } => Self {
                variant: "general_matrix".into(),
                matrix: Some(probs.chunks(*n).map(<[f64]>::to_vec).collect()),
                ..Self::default()
            },
        }
    }
}

fn missing(field: &str) -> Error {
    Error::validation(format!("model descriptor is missing {field:?}"))
}

pub fn load_model(path: &Path) -> Result<EdgeProbabilityModel> {
    let desc: ModelDescriptor = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    desc.build(path.parent())
}
