use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{MultiTaskDataset, TaskData};

/// Per-column transform applied by [`preprocess`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Affine map of the global range onto `[−1, 1]`.
    MinmaxGlobal,
    /// `|x − center|`, then standardized over all rows.
    FoldStandardize { center: f64 },
    /// `ln x`, then standardized within each task.
    LogStandardizePerTask,
    LogOnly,
    Passthrough,
}

impl Transform {
    /// Fold center used for day-of-year columns.
    pub const DAY_OF_YEAR_CENTER: f64 = 183.0;

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "minmax_global" => Transform::MinmaxGlobal,
            "fold_standardize" => Transform::FoldStandardize {
                center: Self::DAY_OF_YEAR_CENTER,
            },
            "log_standardize_per_task" => Transform::LogStandardizePerTask,
            "log_only" => Transform::LogOnly,
            "passthrough" => Transform::Passthrough,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Transform::MinmaxGlobal => "minmax_global",
            Transform::FoldStandardize { .. } => "fold_standardize",
            Transform::LogStandardizePerTask => "log_standardize_per_task",
            Transform::LogOnly => "log_only",
            Transform::Passthrough => "passthrough",
        }
    }

    fn needs_log(&self) -> bool {
        matches!(self, Transform::LogStandardizePerTask | Transform::LogOnly)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub task_id: String,
    pub features: Vec<f64>,
    pub response: f64,
}

/// Observations in long format, one row per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTaskTable {
    pub feature_names: Vec<String>,
    pub response_name: String,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSpec {
    /// One transform per feature column.
    pub features: Vec<Transform>,
    pub response: Transform,
    /// Append a constant column of ones.
    pub intercept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutcome {
    pub dataset: MultiTaskDataset,
    /// Task labels in dataset order (order of first appearance).
    pub task_ids: Vec<String>,
    /// Rows with a nonpositive or non-finite value in a log column.
    pub rejected_rows: usize,
    /// Tasks left without rows after rejection.
    pub dropped_tasks: usize,
}

fn column(tasks: &[Vec<Vec<f64>>], c: usize) -> impl Iterator<Item = f64> + Clone + '_ {
    tasks.iter().flatten().map(move |r| r[c])
}

/// Spread indistinguishable from rounding in the mean.
fn flat(mean: f64, sd: f64) -> bool {
    !(sd > 1e-12 * (1.0 + mean.abs()))
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Turns a raw table into a dataset. Standardization uses the population
/// standard deviation; a zero range or zero spread is an error.
pub fn preprocess(table: &RawTaskTable, spec: &PreprocessSpec) -> Result<PreprocessOutcome> {
    let p = table.feature_names.len();
    Error::check_dim("preprocess transforms", p, spec.features.len())?;
    // Column `p` is the response.
    let transforms: Vec<Transform> = spec.features.iter().copied().chain([spec.response]).collect();

    let mut order: Vec<String> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rows_by_task: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut rejected_rows = 0;
    for row in &table.rows {
        Error::check_dim("raw row width", p, row.features.len())?;
        let slot = *index.entry(row.task_id.as_str()).or_insert_with(|| {
            order.push(row.task_id.clone());
            rows_by_task.push(Vec::new());
            order.len() - 1
        });
        let values: Vec<f64> = row.features.iter().copied().chain([row.response]).collect();
        let bad = values.iter().zip(&transforms).any(|(&v, tr)| {
            !v.is_finite() || (tr.needs_log() && v <= 0.0)
        });
        if bad {
            rejected_rows += 1;
            continue;
        }
        rows_by_task[slot].push(values);
    }
    let total_tasks = order.len();
    let (task_ids, mut tasks): (Vec<String>, Vec<Vec<Vec<f64>>>) = order
        .into_iter()
        .zip(rows_by_task)
        .filter(|(_, rows)| !rows.is_empty())
        .unzip();
    let dropped_tasks = total_tasks - tasks.len();
    if tasks.is_empty() {
        return Err(Error::degenerate("no rows survive preprocessing"));
    }

    for (c, tr) in transforms.iter().enumerate() {
        let name = if c < p {
            table.feature_names[c].as_str()
        } else {
            table.response_name.as_str()
        };
        match *tr {
            Transform::Passthrough => {}
            Transform::LogOnly => {
                for r in tasks.iter_mut().flatten() {
                    r[c] = libm::log(r[c]);
                }
            }
            Transform::MinmaxGlobal => {
                let lo = column(&tasks, c).fold(f64::INFINITY, f64::min);
                let hi = column(&tasks, c).fold(f64::NEG_INFINITY, f64::max);
                if !(hi > lo) {
                    return Err(Error::degenerate(format!("column {name} has zero range")));
                }
                for r in tasks.iter_mut().flatten() {
                    r[c] = 2.0 * (r[c] - lo) / (hi - lo) - 1.0;
                }
            }
            Transform::FoldStandardize { center } => {
                for r in tasks.iter_mut().flatten() {
                    r[c] = (r[c] - center).abs();
                }
                let (mean, sd) = mean_sd(column(&tasks, c));
                if flat(mean, sd) {
                    return Err(Error::degenerate(format!("column {name} has zero variance")));
                }
                for r in tasks.iter_mut().flatten() {
                    r[c] = (r[c] - mean) / sd;
                }
            }
            Transform::LogStandardizePerTask => {
                for (t, rows) in tasks.iter_mut().enumerate() {
                    for r in rows.iter_mut() {
                        r[c] = libm::log(r[c]);
                    }
                    let (mean, sd) = mean_sd(rows.iter().map(|r| r[c]));
                    if flat(mean, sd) {
                        return Err(Error::degenerate(format!(
                            "column {name} has zero variance in task {}",
                            task_ids[t]
                        )));
                    }
                    for r in rows.iter_mut() {
                        r[c] = (r[c] - mean) / sd;
                    }
                }
            }
        }
    }

    let width = p + usize::from(spec.intercept);
    if width == 0 {
        return Err(Error::invalid("no features and no intercept"));
    }
    let dataset = tasks
        .iter()
        .map(|rows| {
            let mut data = Vec::with_capacity(rows.len() * width);
            for r in rows {
                data.extend_from_slice(&r[..p]);
                if spec.intercept {
                    data.push(1.0);
                }
            }
            let response = rows.iter().map(|r| r[p]).collect();
            TaskData::new(Matrix::new(rows.len(), width, data)?, response)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PreprocessOutcome {
        dataset: MultiTaskDataset::new(dataset)?,
        task_ids,
        rejected_rows,
        dropped_tasks,
    })
}
