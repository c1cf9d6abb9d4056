//! Monte Carlo risk estimation and parameter sweeps.

mod sweep;

use std::path::PathBuf;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{threshold_scaling, DEFAULT_SUBSET_BUDGET};
use crate::combinations::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::graph::io::ModelDescriptor;
use crate::graph::{
    check_set, rng_from_seed, sample_alternative, sample_null, EdgeProbabilityModel, GraphSample,
    PlantedAlternative, MAX_GRAPH_VERTICES,
};
use crate::lr::{
    lr_rejects, LrProblem, Scaling, DEFAULT_COMMUNITY_SAMPLES, DEFAULT_ENUMERATION_BUDGET,
};
use crate::scan::{scan_known, scan_unknown, ScanConfig, ScanSearch, SubsetFamily, DEFAULT_BUDGET};
use crate::seed::{alternative_seed, derive_seed, null_seed};

pub use sweep::{
    run_sweep, write_sweep, Axis, BoundaryPoint, SweepConfig, SweepKind, SweepOutput, SweepRow,
};

/// Serde helpers for floats that may be infinite; infinity is written as
/// the string `"inf"`.
pub mod inf_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ScanKnown,
    ScanUnknown,
    Lr,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ScanKnown => "scan_known",
            Self::ScanUnknown => "scan_unknown",
            Self::Lr => "lr",
        }
    }
}

/// Scaling of the planted alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Fixed(f64),
    /// Multiple of the threshold scaling of each community.
    BoundaryMultiple {
        boundary_multiple: f64,
    },
}

impl Default for RhoSpec {
    fn default() -> Self {
        Self::Fixed(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommunitySpec {
    Explicit {
        sets: Vec<Vec<usize>>,
    },
    /// `count` communities drawn uniformly from the master seed.
    UniformRandom {
        count: usize,
    },
    /// Every community of size `r`.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSpec {
    pub communities: CommunitySpec,
    #[serde(default)]
    pub rho: RhoSpec,
    /// Lower `rho` to `1 / max p_ij` inside `C` when it would exceed it.
    #[serde(default)]
    pub clamp_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub r: usize,
    #[serde(with = "inf_float", default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to the sizes each test allows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SubsetFamily>,
    #[serde(default)]
    pub search: ScanSearch,
    #[serde(default = "default_scan_budget")]
    pub budget: u64,
}

fn default_epsilon() -> f64 {
    0.2
}

fn default_scan_budget() -> u64 {
    DEFAULT_BUDGET
}

impl ScanSettings {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            epsilon: default_epsilon(),
            family: None,
            search: ScanSearch::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn config(&self, test: TestKind) -> ScanConfig {
        let base = match test {
            TestKind::ScanUnknown => ScanConfig::unknown(self.r),
            _ => ScanConfig::new(self.r),
        };
        let cfg = base
            .with_epsilon(self.epsilon)
            .with_search(self.search)
            .with_budget(self.budget);
        match &self.family {
            Some(f) => cfg.with_family(f.clone()),
            None => cfg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSettings {
    #[serde(default = "default_lr_budget")]
    pub budget: u64,
    /// Community samples used when `C(n, r)` exceeds the budget; exact
    /// enumeration is required when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn default_lr_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

impl Default for LrSettings {
    fn default() -> Self {
        Self {
            budget: DEFAULT_ENUMERATION_BUDGET,
            samples: None,
        }
    }
}

impl LrSettings {
    pub fn sampled() -> Self {
        Self {
            samples: Some(DEFAULT_COMMUNITY_SAMPLES),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelDescriptor,
    pub alternative: AlternativeSpec,
    pub scan: ScanSettings,
    #[serde(default)]
    pub lr: LrSettings,
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; the global pool when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
    /// Directory that relative model paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        model: &EdgeProbabilityModel,
        alternative: AlternativeSpec,
        scan: ScanSettings,
        replications: usize,
    ) -> Self {
        Self {
            model: ModelDescriptor::from_model(model),
            alternative,
            scan,
            lr: LrSettings::default(),
            replications,
            master_seed: 0,
            workers: None,
            output: OutputPaths::default(),
            base_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Empirical rejection or acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rate: f64,
    /// `sqrt(p (1 - p) / N)`.
    pub stderr: f64,
    pub trials: usize,
}

impl Rate {
    pub fn from_counts(hits: usize, trials: usize) -> Self {
        let rate = hits as f64 / trials as f64;
        Self {
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityRisk {
    pub community: Vec<usize>,
    pub rho: f64,
    /// Rate of `psi = 0` under this alternative.
    pub type2: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub test: TestKind,
    pub type1: Rate,
    pub type2_per_c: Vec<CommunityRisk>,
    /// `type1 + max type2`.
    pub worst_case_risk: f64,
    pub worst_case_stderr: f64,
    /// `type1 + mean type2`.
    pub average_risk: f64,
    pub average_stderr: f64,
}

impl RiskEstimate {
    fn assemble(test: TestKind, type1: Rate, type2_per_c: Vec<CommunityRisk>) -> Self {
        let k = type2_per_c.len() as f64;
        let worst = type2_per_c
            .iter()
            .map(|c| c.type2)
            .fold(None::<Rate>, |best, r| match best {
                Some(b) if b.rate >= r.rate => Some(b),
                _ => Some(r),
            })
            .expect("at least one community");
        let mean = type2_per_c.iter().map(|c| c.type2.rate).sum::<f64>() / k;
        let mean_var = type2_per_c
            .iter()
            .map(|c| c.type2.stderr.powi(2))
            .sum::<f64>()
            / (k * k);
        Self {
            test,
            type1,
            worst_case_risk: type1.rate + worst.rate,
            worst_case_stderr: (type1.stderr.powi(2) + worst.stderr.powi(2)).sqrt(),
            average_risk: type1.rate + mean,
            average_stderr: (type1.stderr.powi(2) + mean_var).sqrt(),
            type2_per_c,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// The resolved alternatives of a configuration.
pub fn resolve_alternatives(
    model: &EdgeProbabilityModel,
    cfg: &ExperimentConfig,
) -> Result<Vec<PlantedAlternative>> {
    let (n, r) = (model.n(), cfg.scan.r);
    if r == 0 || r >= n {
        return Err(Error::validation(format!(
            "community size r = {r} must satisfy 1 <= r < n = {n}"
        )));
    }
    let communities: Vec<Vec<usize>> = match &cfg.alternative.communities {
        CommunitySpec::Explicit { sets } => {
            for c in sets {
                check_set(n, c)?;
                if c.len() != r {
                    return Err(Error::validation(format!(
                        "community {c:?} has size {} != r = {r}",
                        c.len()
                    )));
                }
            }
            sets.clone()
        }
        CommunitySpec::UniformRandom { count } => {
            let mut rng = rng_from_seed(derive_seed(cfg.master_seed, "communities", 0));
            (0..*count)
                .map(|_| {
                    let mut c = sample_indices(&mut rng, n, r).into_vec();
                    c.sort_unstable();
                    c
                })
                .collect()
        }
        CommunitySpec::All => {
            let count = binomial(n, r);
            if count > DEFAULT_ENUMERATION_BUDGET as f64 {
                return Err(Error::budget(
                    "all communities",
                    count,
                    DEFAULT_ENUMERATION_BUDGET,
                ));
            }
            Combinations::new(n, r).collect()
        }
    };
    if communities.is_empty() {
        return Err(Error::validation(
            "at least one alternative community is required",
        ));
    }
    communities
        .into_iter()
        .map(|c| {
            let mut rho = match cfg.alternative.rho {
                RhoSpec::Fixed(rho) => rho,
                RhoSpec::BoundaryMultiple { boundary_multiple } => {
                    boundary_multiple
                        * threshold_scaling(model, &c, 1.0, DEFAULT_SUBSET_BUDGET)?.rho_star
                }
            };
            if cfg.alternative.clamp_feasible {
                let p_max = model.max_probability_within(&c);
                if p_max > 0.0 {
                    rho = rho.min(1.0 / p_max);
                }
            }
            PlantedAlternative::new(model, c, rho)
        })
        .collect()
}

struct Decider {
    test: TestKind,
    model: EdgeProbabilityModel,
    scan: ScanConfig,
    lr: Option<LrProblem>,
}

impl Decider {
    fn rejects(&self, g: &GraphSample) -> Result<bool> {
        match self.test {
            // A scan with an infinite threshold never rejects.
            TestKind::ScanKnown | TestKind::ScanUnknown if self.scan.epsilon == f64::INFINITY => {
                Ok(false)
            }
            TestKind::ScanKnown => Ok(scan_known(&self.model, g, &self.scan)?.reject),
            TestKind::ScanUnknown => Ok(scan_unknown(g, &self.scan)?.reject),
            TestKind::Lr => lr_rejects(self.lr.as_ref().expect("lr problem built"), g),
        }
    }
}

fn validate(cfg: &ExperimentConfig, model: &EdgeProbabilityModel) -> Result<()> {
    if cfg.replications == 0 {
        return Err(Error::validation("replications must be >= 1"));
    }
    if model.n() > MAX_GRAPH_VERTICES {
        return Err(Error::validation(format!(
            "risk estimation samples graphs; n = {} exceeds {MAX_GRAPH_VERTICES}",
            model.n()
        )));
    }
    if !(cfg.scan.epsilon > 0.0) {
        return Err(Error::validation(format!(
            "epsilon must be positive, got {}",
            cfg.scan.epsilon
        )));
    }
    if cfg.workers == Some(0) {
        return Err(Error::validation("workers must be >= 1"));
    }
    Ok(())
}

/// CSV text with the `#schema=1` comment line before the header.
pub fn schema_csv<I, R, S>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .flexible(false)
        .from_writer(b"#schema=1\n".to_vec());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Runs `f` on a pool of `workers` threads, or on the current pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::validation(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Estimates type-I, per-community type-II, worst-case and average risk.
pub fn estimate_risk(cfg: &ExperimentConfig, test: TestKind) -> Result<RiskEstimate> {
    let model = cfg
        .model
        .build(cfg.base_dir.as_deref())
        .map_err(|e| e.context("model"))?;
    validate(cfg, &model)?;
    let alternatives = resolve_alternatives(&model, cfg).map_err(|e| e.context("alternatives"))?;
    let scan = cfg.scan.config(test);
    let lr = match test {
        TestKind::Lr => {
            let rho = alternatives[0].rho();
            if alternatives.iter().any(|a| a.rho() != rho) {
                return Err(Error::validation(
                    "the likelihood-ratio test needs one scaling for every community",
                ));
            }
            let problem = match cfg.lr.samples {
                Some(m) => LrProblem::with_sampling(
                    model.clone(),
                    cfg.scan.r,
                    Scaling::Uniform(rho),
                    cfg.lr.budget,
                    m,
                    cfg.master_seed,
                ),
                None => LrProblem::new(
                    model.clone(),
                    cfg.scan.r,
                    Scaling::Uniform(rho),
                    cfg.lr.budget,
                ),
            };
            Some(problem.map_err(|e| e.context("likelihood ratio"))?)
        }
        _ => None,
    };
    let decider = Decider {
        test,
        model,
        scan,
        lr,
    };
    let reps = cfg.replications as u64;
    let seed = cfg.master_seed;

    with_workers(cfg.workers, || -> Result<RiskEstimate> {
        let null_hits = (0..reps)
            .into_par_iter()
            .map(|rep| decider.rejects(&sample_null(&decider.model, null_seed(seed, rep))))
            .collect::<Result<Vec<bool>>>()
            .map_err(|e| e.context("null replications"))?
            .into_iter()
            .filter(|&b| b)
            .count();
        let jobs: Vec<(usize, u64)> = (0..alternatives.len())
            .flat_map(|c| (0..reps).map(move |r| (c, r)))
            .collect();
        let accepts = jobs
            .into_par_iter()
            .map(|(c, rep)| {
                let g = sample_alternative(
                    &decider.model,
                    &alternatives[c],
                    alternative_seed(seed, c, rep),
                )?;
                decider.rejects(&g).map(|reject| !reject)
            })
            .collect::<Result<Vec<bool>>>()
            .map_err(|e| e.context("alternative replications"))?;
        let per_c = alternatives
            .iter()
            .zip(accepts.chunks(cfg.replications))
            .map(|(alt, chunk)| CommunityRisk {
                community: alt.community().to_vec(),
                rho: alt.rho(),
                type2: Rate::from_counts(chunk.iter().filter(|&&a| a).count(), cfg.replications),
            })
            .collect();
        Ok(RiskEstimate::assemble(
            test,
            Rate::from_counts(null_hits, cfg.replications),
            per_c,
        ))
    })?
}
