use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use scanstat::audit::{
    audit_assumption_1_1, audit_assumption_1_2, audit_assumption_2, audit_assumption_3,
    AuditReport, DEFAULT_MARGIN_THRESHOLD,
};
use scanstat::boundary::{
    quantile_boundary, three_weight_surface, threshold_scaling, two_weight_surface,
    BoundarySetting, QuantileMode, ThreeWeightSweep, TwoWeightSweep, WeightDistribution,
    DEFAULT_SUBSET_BUDGET,
};
use scanstat::graph::io::{load_edge_list, write_edge_list, ModelDescriptor};
use scanstat::graph::{sample_alternative, sample_null, sample_null_sparse, PlantedAlternative};
use scanstat::harness::{
    estimate_risk, run_sweep, schema_csv, with_workers, write_sweep, ExperimentConfig,
    RiskEstimate, ScanSettings, SweepConfig, TestKind,
};
use scanstat::lr::{bayes_risk, LrProblem, Scaling, DEFAULT_ENUMERATION_BUDGET};
use scanstat::scan::{scan_known, scan_unknown};
use scanstat::{Error, Result};

#[derive(Parser)]
#[command(
    name = "scanstat",
    version,
    about = "Planted community detection in inhomogeneous random graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// JSON configuration file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replications.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, env = "SCAN_WORKERS")]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    ScanKnown,
    ScanUnknown,
    Lr,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::ScanKnown => TestKind::ScanKnown,
            TestArg::ScanUnknown => TestKind::ScanUnknown,
            TestArg::Lr => TestKind::Lr,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph under the null or a planted alternative.
    Sample {
        /// Comma-separated community; null model when absent.
        #[arg(long)]
        community: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        /// Geometric-skip sampler (homogeneous models only).
        #[arg(long)]
        sparse: bool,
    },
    /// Run a scan test on an edge list.
    Scan {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum)]
        test: Option<TestArg>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Threshold scaling, quantile boundary or composition surface.
    Boundary,
    /// Monte Carlo risk of a test.
    Risk {
        #[arg(long, value_enum, default_value = "scan-known")]
        test: TestArg,
    },
    /// Average risk of the likelihood-ratio test.
    LrRisk,
    /// Finite-n assumption margins.
    Audit {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// The four weight-distribution rows from the closed forms.
    Table1,
    /// Cartesian parameter sweep.
    Sweep,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 3,
        Error::Numeric { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Value> {
    match path {
        None => Ok(json!({})),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(e).context(p.display()))?;
            let v: Value = serde_json::from_str(&text)?;
            if !v.is_object() {
                return Err(Error::Validation(
                    "configuration must be a JSON object".into(),
                ));
            }
            Ok(v)
        }
    }
}

fn set(cfg: &mut Value, path: &[&str], value: Option<Value>) {
    let Some(value) = value else { return };
    let mut cur = cfg;
    for key in &path[..path.len() - 1] {
        if !cur[*key].is_object() {
            cur[*key] = json!({});
        }
        cur = &mut cur[*key];
    }
    cur[path[path.len() - 1]] = value;
}

fn parse<T: for<'de> Deserialize<'de>>(cfg: Value) -> Result<T> {
    Ok(serde_json::from_value(cfg)?)
}

fn base_dir(global: &Global) -> Option<PathBuf> {
    global
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
}

fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text).map_err(Error::Io),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut cfg = load_config(g.config.as_deref())?;
    let base = base_dir(g);
    match cli.command {
        Command::Sample {
            community,
            rho,
            sparse,
        } => {
            let community = community.map(|c| parse_list(&c)).transpose()?;
            set(&mut cfg, &["seed"], g.seed.map(Value::from));
            set(
                &mut cfg,
                &["alternative", "community"],
                community.map(Value::from),
            );
            set(&mut cfg, &["alternative", "rho"], rho.map(Value::from));
            if sparse {
                cfg["sparse"] = json!(true);
            }
            sample(g, parse(cfg)?, base.as_deref())
        }
        Command::Scan {
            graph,
            test,
            r,
            epsilon,
        } => {
            set(&mut cfg, &["graph"], graph.map(|p| json!(p)));
            set(
                &mut cfg,
                &["test"],
                test.map(|t| json!(TestKind::from(t).as_str())),
            );
            set(&mut cfg, &["scan", "r"], r.map(Value::from));
            set(&mut cfg, &["scan", "epsilon"], epsilon.map(Value::from));
            scan(g, parse(cfg)?, base.as_deref())
        }
        Command::Boundary => boundary(g, parse(cfg)?, base.as_deref()),
        Command::Risk { test } => {
            set(&mut cfg, &["master_seed"], g.seed.map(Value::from));
            set(&mut cfg, &["replications"], g.reps.map(Value::from));
            set(&mut cfg, &["workers"], g.workers.map(Value::from));
            let mut exp: ExperimentConfig = parse(cfg)?;
            exp.base_dir = base;
            let est = estimate_risk(&exp, test.into())?;
            emit(
                g,
                &match g.format.unwrap_or(Format::Json) {
                    Format::Json => est.to_json(),
                    Format::Csv => risk_csv(&est),
                },
            )
        }
        Command::LrRisk => {
            set(&mut cfg, &["master_seed"], g.seed.map(Value::from));
            set(&mut cfg, &["replications"], g.reps.map(Value::from));
            lr_risk(g, parse(cfg)?, base.as_deref())
        }
        Command::Audit { threshold } => {
            set(&mut cfg, &["threshold"], threshold.map(Value::from));
            audit(g, parse(cfg)?, base.as_deref())
        }
        Command::Table1 => table1(g),
        Command::Sweep => {
            set(&mut cfg, &["workers"], g.workers.map(Value::from));
            let sweep: SweepConfig = parse(cfg)?;
            match &g.out {
                Some(path) => {
                    let out = write_sweep(&sweep, path)?;
                    eprintln!("{} points, {} errors", out.rows.len(), out.errors());
                    Ok(())
                }
                None => emit(g, &run_sweep(&sweep, None)?.to_csv()),
            }
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Validation(format!("bad vertex index {s:?}")))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRequest {
    model: ModelDescriptor,
    #[serde(default)]
    alternative: Option<PlantedRequest>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    sparse: bool,
}

#[derive(Deserialize)]
struct PlantedRequest {
    community: Vec<usize>,
    #[serde(default = "one")]
    rho: f64,
}

fn one() -> f64 {
    1.0
}

fn sample(g: &Global, req: SampleRequest, base: Option<&Path>) -> Result<()> {
    let model = req.model.build(base)?;
    let graph = match (&req.alternative, req.sparse) {
        (None, false) => sample_null(&model, req.seed),
        (None, true) => sample_null_sparse(&model, req.seed)?,
        (Some(alt), false) => {
            let alt = PlantedAlternative::new(&model, alt.community.clone(), alt.rho)?;
            sample_alternative(&model, &alt, req.seed)?
        }
        (Some(_), true) => {
            return Err(Error::Validation(
                "the sparse sampler only draws null graphs".into(),
            ));
        }
    };
    emit(g, &write_edge_list(&graph))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanRequest {
    #[serde(default)]
    model: Option<ModelDescriptor>,
    graph: PathBuf,
    #[serde(default = "default_test")]
    test: TestKind,
    scan: ScanSettings,
}

fn default_test() -> TestKind {
    TestKind::ScanKnown
}

fn scan(g: &Global, req: ScanRequest, base: Option<&Path>) -> Result<()> {
    let graph = load_edge_list(&resolve(base, &req.graph))?;
    let out = match req.test {
        TestKind::ScanKnown => {
            let model = req
                .model
                .ok_or_else(|| {
                    Error::Validation("the known-probability scan needs a model".into())
                })?
                .build(base)?;
            scan_known(&model, &graph, &req.scan.config(TestKind::ScanKnown))?
        }
        TestKind::ScanUnknown => scan_unknown(&graph, &req.scan.config(TestKind::ScanUnknown))?,
        TestKind::Lr => {
            return Err(Error::Validation(
                "use lr-risk for the likelihood-ratio test".into(),
            ))
        }
    };
    emit(
        g,
        &match g.format.unwrap_or(Format::Json) {
            Format::Json => out.to_json(),
            Format::Csv => schema_csv(
                &[
                    "statistic",
                    "threshold",
                    "reject",
                    "subset",
                    "certified_exact",
                    "evaluated",
                ],
                [[
                    out.statistic.to_string(),
                    out.threshold.to_string(),
                    out.reject.to_string(),
                    out.subset
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                    out.certified_exact.to_string(),
                    out.evaluated.to_string(),
                ]],
            ),
        },
    )
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BoundaryRequest {
    Community {
        model: ModelDescriptor,
        community: Vec<usize>,
        #[serde(default = "one")]
        target: f64,
    },
    Quantile {
        distribution: WeightDistribution,
        setting: BoundarySetting,
        #[serde(default)]
        mode: QuantileMode,
        #[serde(default = "default_exponent")]
        normalization_exponent: f64,
    },
    TwoWeightSurface(TwoWeightSweep),
    ThreeWeightSurface(ThreeWeightSweep),
}

fn default_exponent() -> f64 {
    1.5
}

fn boundary(g: &Global, req: BoundaryRequest, base: Option<&Path>) -> Result<()> {
    let result = match req {
        BoundaryRequest::Community {
            model,
            community,
            target,
        } => threshold_scaling(
            &model.build(base)?,
            &community,
            target,
            DEFAULT_SUBSET_BUDGET,
        )?,
        BoundaryRequest::Quantile {
            distribution,
            setting,
            mode,
            normalization_exponent,
        } => quantile_boundary(&distribution, setting, mode, normalization_exponent)?,
        BoundaryRequest::TwoWeightSurface(sweep) => {
            let s = two_weight_surface(&sweep)?;
            return emit(
                g,
                &match g.format.unwrap_or(Format::Csv) {
                    Format::Csv => s.to_csv(),
                    Format::Json => to_json(&s),
                },
            );
        }
        BoundaryRequest::ThreeWeightSurface(sweep) => {
            let s = three_weight_surface(&sweep)?;
            return emit(
                g,
                &match g.format.unwrap_or(Format::Csv) {
                    Format::Csv => s.to_csv(),
                    Format::Json => to_json(&s),
                },
            );
        }
    };
    emit(
        g,
        &match g.format.unwrap_or(Format::Json) {
            Format::Json => to_json(&result),
            Format::Csv => schema_csv(
                &[
                    "rho_star",
                    "optimal_size",
                    "size_fraction",
                    "max_ratio",
                    "feasible",
                ],
                [[
                    result.rho_star.to_string(),
                    result.optimal_size.map_or(String::new(), |v| v.to_string()),
                    result.size_fraction.to_string(),
                    result.max_ratio.to_string(),
                    result.feasible.map_or(String::new(), |v| v.to_string()),
                ]],
            ),
        },
    )
}

fn risk_csv(est: &RiskEstimate) -> String {
    let join = |c: &[usize]| {
        c.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut rows = vec![[
        "type1".to_string(),
        String::new(),
        String::new(),
        est.type1.rate.to_string(),
        est.type1.stderr.to_string(),
    ]];
    for c in &est.type2_per_c {
        rows.push([
            "type2".into(),
            join(&c.community),
            c.rho.to_string(),
            c.type2.rate.to_string(),
            c.type2.stderr.to_string(),
        ]);
    }
    rows.push([
        "worst_case_risk".into(),
        String::new(),
        String::new(),
        est.worst_case_risk.to_string(),
        est.worst_case_stderr.to_string(),
    ]);
    rows.push([
        "average_risk".into(),
        String::new(),
        String::new(),
        est.average_risk.to_string(),
        est.average_stderr.to_string(),
    ]);
    schema_csv(&["quantity", "community", "rho", "value", "stderr"], rows)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LrRiskRequest {
    model: ModelDescriptor,
    r: usize,
    rho: f64,
    replications: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_lr_budget")]
    budget: u64,
    /// Sampled communities when `C(n, r)` exceeds the budget.
    #[serde(default)]
    samples: Option<usize>,
}

fn default_lr_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

fn lr_risk(g: &Global, req: LrRiskRequest, base: Option<&Path>) -> Result<()> {
    let model = req.model.build(base)?;
    let scaling = Scaling::Uniform(req.rho);
    let problem = match req.samples {
        Some(m) => LrProblem::with_sampling(model, req.r, scaling, req.budget, m, req.master_seed)?,
        None => LrProblem::new(model, req.r, scaling, req.budget)?,
    };
    let risk = with_workers(g.workers, || {
        bayes_risk(&problem, req.replications, req.master_seed)
    })??;
    emit(
        g,
        &match g.format.unwrap_or(Format::Json) {
            Format::Json => risk.to_json(),
            Format::Csv => schema_csv(
                &["risk", "stderr", "replications", "mode", "M"],
                [[
                    risk.risk.to_string(),
                    risk.stderr.to_string(),
                    risk.replications.to_string(),
                    to_json(&risk.mode).trim_matches('"').to_string(),
                    risk.m.map_or(String::new(), |m| m.to_string()),
                ]],
            ),
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditRequest {
    #[serde(default)]
    model: Option<ModelDescriptor>,
    #[serde(default)]
    community: Option<Vec<usize>>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    alternatives: Option<Vec<PlantedRequest>>,
    /// Vertex weights for the inhomogeneity check; a rank-1 model's own
    /// weights otherwise.
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    r: Option<usize>,
    #[serde(default = "default_threshold")]
    threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_MARGIN_THRESHOLD
}

fn audit(g: &Global, req: AuditRequest, base: Option<&Path>) -> Result<()> {
    let t = req.threshold;
    let model = req.model.as_ref().map(|m| m.build(base)).transpose()?;
    let mut report = AuditReport::default();
    if let (Some(m), Some(c)) = (&model, &req.community) {
        if let (Some(delta), Some(gamma)) = (req.delta, req.gamma) {
            report.push(audit_assumption_1_1(m, c, delta, gamma, t)?);
        }
        report.push(audit_assumption_1_2(m, c, t)?);
    }
    if let (Some(m), Some(alts)) = (&model, &req.alternatives) {
        let alts = alts
            .iter()
            .map(|a| PlantedAlternative::new(m, a.community.clone(), a.rho))
            .collect::<Result<Vec<_>>>()?;
        report.push([audit_assumption_2(m, &alts, t)?]);
    }
    let weights = req.weights.clone().or_else(|| {
        model
            .as_ref()
            .and_then(|m| m.weights().map(<[f64]>::to_vec))
    });
    if let Some(w) = weights {
        let n = req.n.or(model.as_ref().map(|m| m.n())).unwrap_or(w.len());
        let r = req.r.or(req.community.as_ref().map(Vec::len));
        if let Some(r) = r {
            report.push([audit_assumption_3(&w, n, r, t)?]);
        }
    }
    if report.entries.is_empty() {
        return Err(Error::Validation(
            "nothing to audit: supply model and community, alternatives, or weights with r".into(),
        ));
    }
    emit(
        g,
        &match g.format {
            None => report.to_table(),
            Some(Format::Json) => report.to_json(),
            Some(Format::Csv) => schema_csv(
                &["name", "lhs", "rhs", "margin", "required", "pass", "notes"],
                report.entries.iter().map(|e| {
                    [
                        e.name.clone(),
                        e.lhs.to_string(),
                        e.rhs.to_string(),
                        e.margin.to_string(),
                        e.required.to_string(),
                        e.pass.to_string(),
                        e.notes.clone(),
                    ]
                }),
            ),
        },
    )
}

fn table1_rows() -> [(&'static str, WeightDistribution); 4] {
    [
        (
            "degenerate",
            WeightDistribution::Degenerate { delta: 1.0, s: 0.1 },
        ),
        (
            "shifted_bernoulli",
            WeightDistribution::ShiftedBernoulli {
                q: 0.5,
                t: 2.0,
                s: 0.1,
            },
        ),
        (
            "shifted_uniform",
            WeightDistribution::ShiftedUniform {
                a: 0.0,
                b: 2.0,
                s: 0.1,
            },
        ),
        (
            "shifted_exponential",
            WeightDistribution::ShiftedExponential {
                lambda: 1.0,
                s: 0.1,
            },
        ),
    ]
}

fn table1(g: &Global) -> Result<()> {
    let mut rows = Vec::new();
    for (name, dist) in table1_rows() {
        let res = quantile_boundary(&dist, BoundarySetting::Polylog, QuantileMode::Analytic, 1.5)?;
        rows.push((name, dist, res));
    }
    emit(
        g,
        &match g.format.unwrap_or(Format::Csv) {
            Format::Csv => schema_csv(
                &["family", "parameters", "rho_star", "size_fraction"],
                rows.iter().map(|(name, dist, res)| {
                    [
                        name.to_string(),
                        serde_json::to_string(dist).expect("serializable"),
                        format!("{:.3}", res.rho_star),
                        format!("{:.3}", res.size_fraction),
                    ]
                }),
            ),
            Format::Json => to_json(
                &rows
                    .iter()
                    .map(|(name, dist, res)| {
                        json!({"family": name, "distribution": dist, "rho_star": res.rho_star,
                           "size_fraction": res.size_fraction})
                    })
                    .collect::<Vec<_>>(),
            ),
        },
    )
}
