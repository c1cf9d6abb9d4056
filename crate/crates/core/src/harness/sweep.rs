//! Cartesian parameter sweeps with resumable per-point markers.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{estimate_risk, schema_csv, with_workers, ExperimentConfig, TestKind};
use crate::boundary::surface::composition_row;
use crate::boundary::{
    quantile_boundary, threshold_scaling, BoundarySetting, Denominator, QuantileMode,
    WeightDistribution, DEFAULT_SUBSET_BUDGET,
};
use crate::error::{Error, Result};
use crate::graph::io::ModelDescriptor;

/// One swept parameter: a dot path into the base configuration and the values
/// it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub key: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepKind {
    /// Points are [`ExperimentConfig`]s.
    Risk { test: TestKind, base: Value },
    /// Points are [`BoundaryPoint`]s.
    Boundary { base: Value },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub kind: SweepKind,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// A single boundary computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryPoint {
    /// `large` vertices of weight `w_max`, the rest `w_min`.
    TwoWeight {
        r: usize,
        n: f64,
        w_max: f64,
        w_min: f64,
        large: usize,
        #[serde(default)]
        denominator: Denominator,
        #[serde(default = "one")]
        target: f64,
    },
    ThreeWeight {
        r: usize,
        n: f64,
        w_max: f64,
        w_med: f64,
        w_min: f64,
        large: usize,
        medium: usize,
        #[serde(default)]
        denominator: Denominator,
        #[serde(default = "one")]
        target: f64,
    },
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
}

fn one() -> f64 {
    1.0
}

fn default_exponent() -> f64 {
    1.5
}

const RISK_COLUMNS: [&str; 7] = [
    "type1",
    "type1_stderr",
    "max_type2",
    "worst_case_risk",
    "worst_case_stderr",
    "average_risk",
    "average_stderr",
];
const BOUNDARY_COLUMNS: [&str; 4] = ["rho_star", "optimal_size", "size_fraction", "regime"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    /// Axis values, compact JSON.
    pub coords: Vec<String>,
    /// Result columns; empty on error.
    pub fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Serialized point configuration, used to validate resume markers.
    pub point: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub header: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepOutput {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        let width = header.len() - 3 - self.rows.first().map_or(0, |r| r.coords.len());
        let rows = self.rows.iter().map(|row| {
            let mut cells = vec![row.index.to_string()];
            cells.extend(row.coords.iter().cloned());
            match &row.error {
                None => {
                    cells.push("ok".into());
                    cells.extend(row.fields.iter().cloned());
                    cells.push(String::new());
                }
                Some(e) => {
                    cells.push("error".into());
                    cells.extend(std::iter::repeat_n(String::new(), width));
                    cells.push(e.clone());
                }
            }
            cells
        });
        schema_csv(&header, rows)
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| {
            Error::validation(format!("axis {key:?}: {part:?} is not inside an object"))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Grid points in row-major order, the last axis varying fastest.
fn grid(axes: &[Axis]) -> Vec<Vec<Value>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn evaluate_boundary(point: BoundaryPoint) -> Result<Vec<String>> {
    Ok(match point {
        BoundaryPoint::TwoWeight {
            r,
            n,
            w_max,
            w_min,
            large,
            denominator,
            target,
        } => {
            if large > r {
                return Err(Error::validation(format!(
                    "large = {large} exceeds r = {r}"
                )));
            }
            let sweep = crate::boundary::TwoWeightSweep {
                r,
                w_max,
                w_min,
                n,
                denominator,
                target,
            };
            crate::boundary::surface::check_two_weight(&sweep)?;
            let row = composition_row(
                [large, 0, r - large],
                [w_max, w_max, w_min],
                n,
                denominator,
                target,
            )?;
            vec![
                row.rho_star.to_string(),
                row.optimal_size.to_string(),
                (row.optimal_size as f64 / r as f64).to_string(),
                row.regime.as_str().into(),
            ]
        }
        BoundaryPoint::ThreeWeight {
            r,
            n,
            w_max,
            w_med,
            w_min,
            large,
            medium,
            denominator,
            target,
        } => {
            if large + medium > r {
                return Err(Error::validation(format!(
                    "large + medium = {} exceeds r = {r}",
                    large + medium
                )));
            }
            let sweep = crate::boundary::ThreeWeightSweep {
                r,
                w_max,
                w_med,
                w_min,
                n,
                denominator,
                target,
            };
            crate::boundary::surface::check_three_weight(&sweep)?;
            let row = composition_row(
                [large, medium, r - large - medium],
                [w_max, w_med, w_min],
                n,
                denominator,
                target,
            )?;
            vec![
                row.rho_star.to_string(),
                row.optimal_size.to_string(),
                (row.optimal_size as f64 / r as f64).to_string(),
                row.regime.as_str().into(),
            ]
        }
        BoundaryPoint::Community {
            model,
            community,
            target,
        } => {
            let model = model.build(None)?;
            let res = threshold_scaling(&model, &community, target, DEFAULT_SUBSET_BUDGET)?;
            vec![
                res.rho_star.to_string(),
                fmt_opt(res.optimal_size),
                res.size_fraction.to_string(),
                String::new(),
            ]
        }
        BoundaryPoint::Quantile {
            distribution,
            setting,
            mode,
            normalization_exponent,
        } => {
            let res = quantile_boundary(&distribution, setting, mode, normalization_exponent)?;
            vec![
                res.rho_star.to_string(),
                fmt_opt(res.optimal_size),
                res.size_fraction.to_string(),
                String::new(),
            ]
        }
    })
}

fn evaluate(kind: &SweepKind, point: &Value) -> Result<Vec<String>> {
    match kind {
        SweepKind::Risk { test, .. } => {
            let mut cfg: ExperimentConfig = serde_json::from_value(point.clone())?;
            // Points already run in parallel; each estimate uses the current pool.
            cfg.workers = None;
            let est = estimate_risk(&cfg, *test)?;
            let max_type2 = est
                .type2_per_c
                .iter()
                .map(|c| c.type2.rate)
                .fold(0.0, f64::max);
            Ok(vec![
                est.type1.rate.to_string(),
                est.type1.stderr.to_string(),
                max_type2.to_string(),
                est.worst_case_risk.to_string(),
                est.worst_case_stderr.to_string(),
                est.average_risk.to_string(),
                est.average_stderr.to_string(),
            ])
        }
        SweepKind::Boundary { .. } => evaluate_boundary(serde_json::from_value(point.clone())?),
    }
}

/// Evaluates every grid point. Failed points become error rows. With
/// `markers`, finished points are stored there and reused on the next run.
pub fn run_sweep(cfg: &SweepConfig, markers: Option<&Path>) -> Result<SweepOutput> {
    let base = match &cfg.kind {
        SweepKind::Risk { base, .. } | SweepKind::Boundary { base } => base,
    };
    if !base.is_object() {
        return Err(Error::validation("sweep base must be a JSON object"));
    }
    let columns: &[&str] = match cfg.kind {
        SweepKind::Risk { .. } => &RISK_COLUMNS,
        SweepKind::Boundary { .. } => &BOUNDARY_COLUMNS,
    };
    let mut header = vec!["point".to_string()];
    header.extend(cfg.axes.iter().map(|a| a.key.clone()));
    header.push("status".into());
    header.extend(columns.iter().map(|c| c.to_string()));
    header.push("error".into());

    let mut points = Vec::new();
    for coords in grid(&cfg.axes) {
        let mut point = base.clone();
        for (axis, v) in cfg.axes.iter().zip(&coords) {
            set_path(&mut point, &axis.key, v.clone())?;
        }
        points.push((coords, point));
    }
    if let Some(dir) = markers {
        fs::create_dir_all(dir)?;
    }

    let rows = with_workers(cfg.workers, || {
        points
            .into_par_iter()
            .enumerate()
            .map(|(index, (coords, point))| -> Result<SweepRow> {
                let point_text = serde_json::to_string(&point)?;
                let marker = markers.map(|d| marker_path(d, index));
                if let Some(path) = &marker {
                    if let Some(row) = read_marker(path, &point_text) {
                        return Ok(row);
                    }
                }
                let (fields, error) = match evaluate(&cfg.kind, &point) {
                    Ok(f) => (f, None),
                    Err(e) => (Vec::new(), Some(e.to_string())),
                };
                let row = SweepRow {
                    index,
                    coords: coords.iter().map(|c| c.to_string()).collect(),
                    fields,
                    error,
                    point: point_text,
                };
                if let Some(path) = &marker {
                    fs::write(path, serde_json::to_string(&row)?)?;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SweepOutput { header, rows })
}

fn marker_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("point-{index:06}.done"))
}

fn read_marker(path: &Path, point: &str) -> Option<SweepRow> {
    let row: SweepRow = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    (row.point == point).then_some(row)
}

/// Runs the sweep, writing the CSV to `path`, a metadata sidecar to
/// `path.meta.json` and completion markers under `path.points/`.
pub fn write_sweep(cfg: &SweepConfig, path: &Path) -> Result<SweepOutput> {
    let markers = sibling(path, ".points");
    let out = run_sweep(cfg, Some(&markers))?;
    fs::write(path, out.to_csv())?;
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "schema": 1,
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
        "points": out.rows.len(),
        "errors": out.errors(),
        "config": cfg,
    });
    fs::write(
        sibling(path, ".meta.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(out)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}
