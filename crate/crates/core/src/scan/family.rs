use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combinations::binomial;
use crate::error::{Error, Result};
use crate::graph::{check_set, EdgeProbabilityModel};

/// Candidate subsets a scan maximizes over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetFamily {
    /// Every subset of `V` with size in `[min_size, max_size]`.
    Exhaustive {
        min_size: usize,
        max_size: usize,
    },
    /// Prefixes of `ordered` (already sorted by descending weight) whose
    /// length lies in `[min_size, max_size]`.
    WeightPrefix {
        ordered: Vec<usize>,
        min_size: usize,
        max_size: usize,
    },
    Explicit {
        sets: Vec<Vec<usize>>,
    },
}

impl SubsetFamily {
    pub fn exhaustive(min_size: usize, max_size: usize) -> Self {
        Self::Exhaustive { min_size, max_size }
    }

    /// Orders `candidates` by descending weight, ties by index.
    pub fn weight_prefix(
        model: &EdgeProbabilityModel,
        candidates: &[usize],
        min_size: usize,
        max_size: usize,
    ) -> Result<Self> {
        let weights = model
            .weights()
            .ok_or_else(|| Error::validation("weight-prefix family needs a rank-1 model"))?;
        let mut ordered = crate::graph::vertex_set(candidates.iter().copied());
        check_set(model.n(), &ordered)?;
        ordered.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        Ok(Self::WeightPrefix {
            ordered,
            min_size,
            max_size,
        })
    }

    pub fn explicit(sets: Vec<Vec<usize>>) -> Self {
        Self::Explicit { sets }
    }

    /// Smallest and largest subset size in the family.
    pub fn size_range(&self) -> Option<(usize, usize)> {
        match self {
            Self::Exhaustive { min_size, max_size }
            | Self::WeightPrefix {
                min_size, max_size, ..
            } => (min_size <= max_size).then_some((*min_size, *max_size)),
            Self::Explicit { sets } => {
                let lo = sets.iter().map(Vec::len).min()?;
                let hi = sets.iter().map(Vec::len).max()?;
                Some((lo, hi))
            }
        }
    }

    /// Number of subsets the family contains for a graph on `n` vertices.
    pub fn count(&self, n: usize) -> f64 {
        match self {
            Self::Exhaustive { min_size, max_size } => {
                (*min_size..=*max_size).map(|k| binomial(n, k)).sum()
            }
            Self::WeightPrefix {
                ordered,
                min_size,
                max_size,
            } => (*min_size..=(*max_size).min(ordered.len())).count() as f64,
            Self::Explicit { sets } => sets.len() as f64,
        }
    }

    pub(crate) fn validate(&self, n: usize, lo: usize, hi: usize) -> Result<()> {
        let (min, max) = self
            .size_range()
            .ok_or_else(|| Error::validation(format!("subset family {self} is empty")))?;
        if min < lo.max(1) || max > hi || max >= n {
            return Err(Error::validation(format!(
                "subset family {self} has sizes outside [{}, {}] (n = {n})",
                lo.max(1),
                hi.min(n - 1)
            )));
        }
        match self {
            Self::WeightPrefix {
                ordered, max_size, ..
            } => {
                check_set(n, &crate::graph::vertex_set(ordered.iter().copied()))?;
                if *max_size > ordered.len() {
                    return Err(Error::validation(format!(
                        "prefix size {max_size} exceeds the {} candidates",
                        ordered.len()
                    )));
                }
            }
            Self::Explicit { sets } => {
                for set in sets {
                    check_set(n, set)?;
                }
            }
            Self::Exhaustive { .. } => {}
        }
        Ok(())
    }
}

impl fmt::Display for SubsetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exhaustive { min_size, max_size } => {
                write!(f, "exhaustive({min_size}..{max_size})")
            }
            Self::WeightPrefix {
                ordered,
                min_size,
                max_size,
            } => write!(
                f,
                "weight_prefix({min_size}..{max_size} of {})",
                ordered.len()
            ),
            Self::Explicit { sets } => write!(f, "explicit({} sets)", sets.len()),
        }
    }
}
