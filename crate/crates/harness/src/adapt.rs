//! The adaptation protocol on a task table or on synthetic data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use metasp_core::adaptation::{
    preprocess, run_protocol, PreprocessSpec, ProtocolOutcome, RawRow, RawTaskTable, SplitProtocol, Transform,
};
use metasp_core::seed::{derive_seed, label_hash};
use metasp_core::synthetic::{generate_dataset, generate_ground_truth};
use metasp_core::MultiTaskDataset;
use serde::Deserialize;

use crate::config::{ExperimentConfig, Point};
use crate::error::{HarnessError, Result};

pub const ADAPT_HEADER: &str = "method,arm,stage,tasks,m_mre";

/// Reads a long-format table with header `task_id,<features...>,<response>`.
pub fn read_table(path: &Path) -> Result<RawTaskTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "task_id" {
        return Err(HarnessError::data("table header must be task_id,<features...>,<response>"));
    }
    let p = header.len() - 2;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            let field = record[i].trim();
            field
                .parse()
                .map_err(|_| HarnessError::data(format!("row {}: bad number {field:?} in {}", line + 2, header[i])))
        };
        rows.push(RawRow {
            task_id: record[0].to_string(),
            features: (1..=p).map(parse).collect::<Result<_>>()?,
            response: parse(p + 1)?,
        });
    }
    Ok(RawTaskTable {
        feature_names: header[1..=p].to_vec(),
        response_name: header[p + 1].clone(),
        rows,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    response: String,
    #[serde(default = "yes")]
    intercept: bool,
    features: BTreeMap<String, String>,
}

fn yes() -> bool {
    true
}

fn transform(name: &str) -> Result<Transform> {
    Transform::parse(name).ok_or_else(|| HarnessError::config(format!("unknown transform {name}")))
}

/// Parses a transform sidecar:
///
/// ```toml
/// response = "log_only"
/// intercept = true
/// [features]
/// lat = "minmax_global"
/// day = "fold_standardize"
/// ```
pub fn parse_spec(text: &str, table: &RawTaskTable) -> Result<PreprocessSpec> {
    let sidecar: Sidecar = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
    for name in sidecar.features.keys() {
        if !table.feature_names.contains(name) {
            return Err(HarnessError::config(format!("transform for unknown column {name}")));
        }
    }
    let features = table
        .feature_names
        .iter()
        .map(|c| match sidecar.features.get(c) {
            Some(t) => transform(t),
            None => Err(HarnessError::config(format!("no transform for column {c}"))),
        })
        .collect::<Result<_>>()?;
    Ok(PreprocessSpec {
        features,
        response: transform(&sidecar.response)?,
        intercept: sidecar.intercept,
    })
}

fn dataset(cfg: &ExperimentConfig) -> Result<MultiTaskDataset> {
    let a = cfg.adapt.as_ref().ok_or_else(|| HarnessError::config("adapt needs an [adapt] section"))?;
    match (&a.data, &a.transforms) {
        (Some(data), Some(sidecar)) => {
            let table = read_table(data)?;
            let text = std::fs::read_to_string(sidecar)
                .map_err(|e| HarnessError::config(format!("{}: {e}", sidecar.display())))?;
            let spec = parse_spec(&text, &table)?;
            let out = preprocess(&table, &spec)?;
            if out.rejected_rows > 0 || out.dropped_tasks > 0 {
                eprintln!("preprocess: rejected {} rows, dropped {} tasks", out.rejected_rows, out.dropped_tasks);
            }
            Ok(out.dataset)
        }
        _ => {
            let seed = derive_seed(&[cfg.experiment.seed_base, label_hash("adapt-data")]);
            let dgp = cfg.dgp_config(cfg.base_point(), seed)?;
            let gt = generate_ground_truth(&dgp)?;
            Ok(generate_dataset(&gt, &dgp)?)
        }
    }
}

/// Runs the protocol once per configured method.
pub fn run_adapt(cfg: &ExperimentConfig) -> Result<Vec<(String, ProtocolOutcome)>> {
    let a = cfg.adapt.as_ref().ok_or_else(|| HarnessError::config("adapt needs an [adapt] section"))?;
    let data = dataset(cfg)?;
    let seed = cfg.experiment.seed_base;
    let split = SplitProtocol {
        meta_fraction: a.meta_fraction,
        delog: a.delog,
        ..SplitProtocol::new(a.train_points, derive_seed(&[seed, label_hash("split")]))
    };
    let p = Point {
        d: data.dim(),
        t: data.task_count(),
        m: a.train_points,
        ..cfg.base_point()
    };
    cfg.experiment
        .methods
        .iter()
        .map(|name| {
            let method = cfg.method(name, p, derive_seed(&[seed, label_hash(name)]))?;
            let out = run_protocol(&data, &split, &method, derive_seed(&[seed, label_hash("random-b")]))?;
            if out.dropped_tasks > 0 {
                eprintln!("{name}: dropped {} tasks with too few samples", out.dropped_tasks);
            }
            Ok((name.clone(), out))
        })
        .collect()
}

pub fn adapt_csv(outcomes: &[(String, ProtocolOutcome)]) -> String {
    let mut out = String::from(ADAPT_HEADER);
    out.push('\n');
    for (method, o) in outcomes {
        for r in &o.reports {
            writeln!(out, "{method},{},{},{},{:?}", r.arm.name(), r.stage.name(), r.per_task_mre.len(), r.m_mre).unwrap();
        }
    }
    out
}
