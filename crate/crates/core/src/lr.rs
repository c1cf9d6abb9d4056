//! Likelihood ratios between the planted and null models on small instances,
//! and the average risk of the likelihood-ratio test.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinations::{binomial, for_each_combination};
use crate::error::{Error, Result};
use crate::graph::{check_set, rng_from_seed, sample_null, EdgeProbabilityModel, GraphSample};
use crate::seed::{derive_seed, null_seed};

/// Default number of communities drawn in sampling mode.
pub const DEFAULT_COMMUNITY_SAMPLES: usize = 4096;
/// Default limit on `C(n, r)` for exact enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

const FEASIBILITY_SLACK: f64 = 1e-12;

/// Scaling applied to a community.
#[derive(Debug, Clone, PartialEq)]
pub enum Scaling {
    Uniform(f64),
    /// `rho_C` for listed communities (sorted vertex lists), `default` otherwise.
    PerCommunity {
        default: f64,
        overrides: BTreeMap<Vec<usize>, f64>,
    },
}

impl Scaling {
    pub fn rho(&self, community: &[usize]) -> f64 {
        match self {
            Self::Uniform(rho) => *rho,
            Self::PerCommunity { default, overrides } => {
                overrides.get(community).copied().unwrap_or(*default)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct LrProblem {
    model: EdgeProbabilityModel,
    r: usize,
    scaling: Scaling,
    budget: u64,
    communities: Option<Vec<Vec<usize>>>,
}

impl LrProblem {
    /// Exact problem; fails when `C(n, r)` exceeds `budget`.
    pub fn new(
        model: EdgeProbabilityModel,
        r: usize,
        scaling: Scaling,
        budget: u64,
    ) -> Result<Self> {
        let problem = Self::unchecked(model, r, scaling, budget)?;
        let count = binomial(problem.model.n(), r);
        if count > budget as f64 {
            return Err(Error::budget("likelihood ratio enumeration", count, budget));
        }
        Ok(problem)
    }

    /// Exact when `C(n, r)` fits the budget, otherwise averages over `m`
    /// communities drawn once from `seed`.
    pub fn with_sampling(
        model: EdgeProbabilityModel,
        r: usize,
        scaling: Scaling,
        budget: u64,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut problem = Self::unchecked(model, r, scaling, budget)?;
        if binomial(problem.model.n(), r) > budget as f64 {
            if m == 0 {
                return Err(Error::validation("community sample count must be positive"));
            }
            let mut rng = rng_from_seed(derive_seed(seed, "lr-communities", 0));
            let n = problem.model.n();
            let communities = (0..m)
                .map(|_| {
                    let mut c = sample_indices(&mut rng, n, r).into_vec();
                    c.sort_unstable();
                    c
                })
                .collect();
            problem.communities = Some(communities);
        }
        Ok(problem)
    }

    fn unchecked(
        model: EdgeProbabilityModel,
        r: usize,
        scaling: Scaling,
        budget: u64,
    ) -> Result<Self> {
        let n = model.n();
        if r < 1 || r > n {
            return Err(Error::validation(format!(
                "community size {r} must lie in 1..={n}"
            )));
        }
        let rhos: Vec<f64> = match &scaling {
            Scaling::Uniform(rho) => vec![*rho],
            Scaling::PerCommunity { default, overrides } => {
                for c in overrides.keys() {
                    check_set(n, c)?;
                    if c.len() != r {
                        return Err(Error::validation(format!(
                            "override community {c:?} has size != {r}"
                        )));
                    }
                }
                std::iter::once(*default)
                    .chain(overrides.values().copied())
                    .collect()
            }
        };
        let p_max = model.max_probability();
        for rho in rhos {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(Error::validation(format!(
                    "scaling must be finite and >= 0, got {rho}"
                )));
            }
            if rho * p_max > 1.0 + FEASIBILITY_SLACK {
                return Err(Error::validation(format!(
                    "rho * p_max = {} exceeds 1",
                    rho * p_max
                )));
            }
        }
        Ok(Self {
            model,
            r,
            scaling,
            budget,
            communities: None,
        })
    }

    pub fn model(&self) -> &EdgeProbabilityModel {
        &self.model
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn mode(&self) -> LrMode {
        if self.communities.is_some() {
            LrMode::Sampled
        } else {
            LrMode::Exact
        }
    }

    /// Community sample in sampling mode.
    pub fn communities(&self) -> Option<&[Vec<usize>]> {
        self.communities.as_deref()
    }
}

/// `ln L_C(g)`; `-inf` when a pair with `rho p = 1` has no edge.
pub fn log_likelihood_ratio_single(
    problem: &LrProblem,
    community: &[usize],
    g: &GraphSample,
) -> Result<f64> {
    check_set(problem.model.n(), community)?;
    if g.n() != problem.model.n() {
        return Err(Error::validation(format!(
            "graph has {} vertices, model has {}",
            g.n(),
            problem.model.n()
        )));
    }
    log_ratio(problem, community, g)
}

/// `L_C(g)`.
pub fn likelihood_ratio_single(
    problem: &LrProblem,
    community: &[usize],
    g: &GraphSample,
) -> Result<f64> {
    Ok(log_likelihood_ratio_single(problem, community, g)?.exp())
}

fn log_ratio(problem: &LrProblem, community: &[usize], g: &GraphSample) -> Result<f64> {
    let rho = problem.scaling.rho(community);
    if rho == 1.0 {
        return Ok(0.0);
    }
    let ln_rho = rho.ln();
    let mut total = 0.0;
    for (a, &i) in community.iter().enumerate() {
        for &j in &community[a + 1..] {
            let p = problem.model.p(i, j);
            if p == 0.0 {
                if rho > 1.0 {
                    return Err(Error::domain(format!(
                        "p({i},{j}) = 0 with rho = {rho}: likelihood ratio undefined"
                    )));
                }
                continue;
            }
            if g.has_edge(i, j) {
                total += ln_rho;
            } else {
                let rp = rho * p;
                if rp >= 1.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += (-rp).ln_1p() - (-p).ln_1p();
            }
        }
    }
    Ok(total)
}

/// Value of `L(g)`, the mean of `L_C(g)` over communities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrValue {
    pub value: f64,
    pub log_value: f64,
    /// Standard error of the community average; zero in exact mode.
    pub stderr: f64,
    pub mode: LrMode,
}

pub fn likelihood_ratio_average(problem: &LrProblem, g: &GraphSample) -> Result<LrValue> {
    if g.n() != problem.model.n() {
        return Err(Error::validation(format!(
            "graph has {} vertices, model has {}",
            g.n(),
            problem.model.n()
        )));
    }
    let logs = match &problem.communities {
        Some(cs) => cs
            .iter()
            .map(|c| log_ratio(problem, c, g))
            .collect::<Result<Vec<_>>>()?,
        None => {
            let mut logs = Vec::new();
            let mut err = None;
            for_each_combination(problem.model.n(), problem.r, |c| {
                if err.is_none() {
                    match log_ratio(problem, c, g) {
                        Ok(v) => logs.push(v),
                        Err(e) => err = Some(e),
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            logs
        }
    };
    let (log_value, stderr) = log_mean_exp(&logs, problem.communities.is_some());
    Ok(LrValue {
        value: log_value.exp(),
        log_value,
        stderr,
        mode: problem.mode(),
    })
}

/// Max-shifted `ln mean exp(x)`, plus the standard error of the mean when
/// requested.
fn log_mean_exp(logs: &[f64], with_stderr: bool) -> (f64, f64) {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 0.0);
    }
    let m = logs.len() as f64;
    let shifted: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let mean = shifted.iter().sum::<f64>() / m;
    let log_value = max + mean.ln();
    let stderr = if with_stderr && logs.len() > 1 {
        let var = shifted.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
        max.exp() * (var / m).sqrt()
    } else {
        0.0
    };
    (log_value, stderr)
}

/// Average risk of the likelihood-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRisk {
    pub risk: f64,
    pub stderr: f64,
    pub replications: usize,
    pub mode: LrMode,
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

impl BayesRisk {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("risk serializes")
    }
}

/// `1 - E_0|L - 1| / 2` from null samples.
pub fn bayes_risk(problem: &LrProblem, replications: usize, seed: u64) -> Result<BayesRisk> {
    let values = null_values(problem, replications, seed)?;
    let deviations: Vec<f64> = values.iter().map(|l| (l - 1.0).abs()).collect();
    let (mean, stderr) = mean_stderr(&deviations);
    Ok(BayesRisk {
        risk: (1.0 - mean / 2.0).clamp(0.0, 1.0),
        stderr: stderr / 2.0,
        replications,
        mode: problem.mode(),
        m: problem.communities.as_ref().map(Vec::len),
    })
}

/// Mean of `L` over null samples and its standard error.
pub fn null_mean(problem: &LrProblem, replications: usize, seed: u64) -> Result<(f64, f64)> {
    Ok(mean_stderr(&null_values(problem, replications, seed)?))
}

/// `L` for each null replication, in replication order.
pub fn null_values(problem: &LrProblem, replications: usize, seed: u64) -> Result<Vec<f64>> {
    if replications == 0 {
        return Err(Error::validation("replications must be >= 1"));
    }
    (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let g = sample_null(&problem.model, null_seed(seed, rep));
            likelihood_ratio_average(problem, &g).map(|v| v.value)
        })
        .collect()
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Likelihood-ratio test decision `L(g) > 1`.
pub fn lr_rejects(problem: &LrProblem, g: &GraphSample) -> Result<bool> {
    Ok(likelihood_ratio_average(problem, g)?.log_value > 0.0)
}
