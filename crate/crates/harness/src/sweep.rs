//! Parameter sweeps and the minimal-task search.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use metasp_core::metrics::{dist1, sine_angle};
use metasp_core::seed::{derive_seed, label_hash};
use metasp_core::synthetic::{generate_dataset, generate_ground_truth};
use metasp_core::{Error as CoreError, FitContext, FitResult, GroundTruth};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Point};
use crate::error::{HarnessError, Result};

pub const RESULTS_HEADER: &str = "method,d,s,m,T,sigma,trial_seed,dist1,dist2,iterations,wall_seconds,status";
pub const SUMMARY_HEADER: &str = "method,d,s,m,T,sigma,trials,dist1,dist2,iterations,wall_seconds,failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Diverged,
    Degenerate,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Diverged => "diverged",
            Status::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub point: Point,
    pub trial: usize,
    pub trial_seed: u64,
    pub dist1: f64,
    pub dist2: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub status: Status,
}

/// Seed of one trial. The method name is mixed in so that each method's
/// stream is unaffected by which other methods run.
pub fn trial_seed(seed_base: u64, method: &str, axis_value: f64, trial: usize) -> u64 {
    derive_seed(&[seed_base, label_hash(method), axis_value.to_bits(), trial as u64])
}

/// Metrics of a finished fit, or of the zero estimate when nothing
/// finite is available.
fn evaluate(fit: Option<&FitResult>, gt: &GroundTruth) -> Result<(f64, f64, usize)> {
    match fit {
        Some(f) => Ok((dist1(&f.coefficients, gt)?, sine_angle(&f.subspace, gt.subspace())?, f.iterations)),
        None => {
            let zero = metasp_core::Coefficients::zeros(gt.task_count(), gt.dim());
            Ok((dist1(&zero, gt)?, 1.0, 0))
        }
    }
}

/// Generates fresh data for one trial, fits and scores it. Divergence and
/// degeneracy are recorded in the status; other failures abort.
pub fn run_trial(cfg: &ExperimentConfig, method: &str, axis_value: f64, p: Point, trial: usize) -> Result<ResultRow> {
    let seed = trial_seed(cfg.experiment.seed_base, method, axis_value, trial);
    let dgp = cfg.dgp_config(p, seed)?;
    let gt = generate_ground_truth(&dgp)?;
    let dataset = generate_dataset(&gt, &dgp)?;
    let solver = cfg.method(method, p, seed)?;
    let start = Instant::now();
    let outcome = solver.fit(&dataset, FitContext::default());
    let wall_seconds = if cfg.experiment.record_wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let (status, (dist1, dist2, iterations)) = match outcome {
        Ok(fit) => {
            let status = if fit.degenerate { Status::Degenerate } else { Status::Ok };
            (status, evaluate(Some(&fit), &gt)?)
        }
        Err(CoreError::Diverged { last, .. }) => (Status::Diverged, evaluate(last.as_deref(), &gt)?),
        Err(CoreError::Degenerate(_)) => (Status::Degenerate, evaluate(None, &gt)?),
        Err(e) => return Err(e.into()),
    };
    Ok(ResultRow {
        method: method.to_string(),
        point: p,
        trial,
        trial_seed: seed,
        dist1,
        dist2,
        iterations,
        wall_seconds,
        status,
    })
}

/// Every method × axis value × trial, in that output order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    if e.values.is_empty() {
        return Err(HarnessError::config("sweep needs a nonempty value list"));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..e.methods.len())
        .flat_map(|mi| (0..e.values.len()).flat_map(move |vi| (0..e.trials).map(move |t| (mi, vi, t))))
        .collect();
    let mut rows: Vec<((usize, usize, usize), ResultRow)> = jobs
        .par_iter()
        .map(|&(mi, vi, t)| {
            let v = e.values[vi];
            run_trial(cfg, &e.methods[mi], v, cfg.point(v), t).map(|r| ((mi, vi, t), r))
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn point_fields(out: &mut String, p: &Point) {
    write!(out, "{},{},{},{},{:?}", p.d, p.s, p.m, p.t, p.sigma).unwrap();
}

/// Floats use `{:?}`: shortest round-trip digits, switching to exponent
/// notation for very large or small magnitudes.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.method);
        out.push(',');
        point_fields(&mut out, &r.point);
        writeln!(
            out,
            ",{},{:?},{:?},{},{:?},{}",
            r.trial_seed,
            r.dist1,
            r.dist2,
            r.iterations,
            r.wall_seconds,
            r.status.name()
        )
        .unwrap();
    }
    out
}

/// Per-(method, point) means over trials. Rows must be grouped, as
/// returned by [`run_sweep`].
pub fn summary_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for group in rows.chunk_by(|a, b| a.method == b.method && a.point == b.point) {
        let n = group.len() as f64;
        let mean = |f: &dyn Fn(&ResultRow) -> f64| group.iter().map(f).sum::<f64>() / n;
        let failed = group.iter().filter(|r| r.status != Status::Ok).count();
        out.push_str(&group[0].method);
        out.push(',');
        point_fields(&mut out, &group[0].point);
        writeln!(
            out,
            ",{},{:?},{:?},{:?},{:?},{}",
            group.len(),
            mean(&|r| r.dist1),
            mean(&|r| r.dist2),
            mean(&|r| r.iterations as f64),
            mean(&|r| r.wall_seconds),
            failed
        )
        .unwrap();
    }
    out
}

/// Result of [`min_tasks_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// `None` when even the ceiling misses the target.
    pub min_tasks: Option<usize>,
    pub granularity: usize,
    /// Every probed task count with its score, ascending.
    pub probes: Vec<(usize, f64)>,
}

/// Smallest task count whose score reaches `target`.
///
/// Doubles from `start` until the score is at most `target`, then bisects
/// the last bracket over multiples of the granularity. Without an explicit
/// granularity it is 100 when the bracket top is at least 1000 and 10
/// otherwise. Scores are assumed to decrease with the task count.
pub fn min_tasks_search(
    mut score: impl FnMut(usize) -> Result<f64>,
    target: f64,
    start: usize,
    ceiling: usize,
    granularity: Option<usize>,
) -> Result<SearchOutcome> {
    let mut probes = BTreeMap::new();
    let mut probe = |t: usize, probes: &mut BTreeMap<usize, f64>| -> Result<bool> {
        let v = match probes.get(&t) {
            Some(&v) => v,
            None => {
                let v = score(t)?;
                probes.insert(t, v);
                v
            }
        };
        Ok(v <= target)
    };

    let mut lo = 0;
    let mut hi = start;
    loop {
        if probe(hi, &mut probes)? {
            break;
        }
        if hi >= ceiling {
            return Ok(SearchOutcome {
                min_tasks: None,
                granularity: granularity.unwrap_or(if ceiling >= 1000 { 100 } else { 10 }),
                probes: probes.into_iter().collect(),
            });
        }
        lo = hi;
        hi = (hi * 2).min(ceiling);
    }
    let g = granularity.unwrap_or(if hi >= 1000 { 100 } else { 10 });
    if lo == 0 {
        return Ok(SearchOutcome {
            min_tasks: Some(hi),
            granularity: g,
            probes: probes.into_iter().collect(),
        });
    }
    // Smallest multiple of g above lo; hi rounded up counts as reached.
    let (mut a, mut b) = (lo / g + 1, hi.div_ceil(g));
    while a < b {
        let mid = (a + b) / 2;
        if probe(mid * g, &mut probes)? {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    Ok(SearchOutcome {
        min_tasks: Some(b * g),
        granularity: g,
        probes: probes.into_iter().collect(),
    })
}

/// Trial-averaged subspace error of `method` on `T` tasks of `m` samples.
pub fn mean_dist2(cfg: &ExperimentConfig, method: &str, m: usize, tasks: usize) -> Result<f64> {
    let p = Point {
        m,
        t: tasks,
        ..cfg.base_point()
    };
    let rows: Vec<ResultRow> = (0..cfg.experiment.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, method, tasks as f64, p, trial))
        .collect::<Result<_>>()?;
    Ok(rows.iter().map(|r| r.dist2).sum::<f64>() / rows.len() as f64)
}

pub const MIN_TASKS_HEADER: &str = "method,m,target,granularity,min_T";
pub const PROBES_HEADER: &str = "method,m,T,mean_dist2";

/// Marker written in place of a task count the search never reached.
pub const NOT_FOUND: &str = "not-found";

/// Runs the search for every configured method and `m`, returning the
/// `min_tasks.csv` and `probes.csv` contents.
pub fn run_min_tasks(cfg: &ExperimentConfig) -> Result<(String, String)> {
    let s = cfg
        .search
        .as_ref()
        .ok_or_else(|| HarnessError::config("min-tasks needs a [search] section"))?;
    let mut table = String::from(MIN_TASKS_HEADER);
    table.push('\n');
    let mut probes = String::from(PROBES_HEADER);
    probes.push('\n');
    for method in &cfg.experiment.methods {
        for &m in &s.m_values {
            let out = min_tasks_search(|t| mean_dist2(cfg, method, m, t), s.target, s.start, s.ceiling, s.granularity)?;
            let found = out.min_tasks.map_or(NOT_FOUND.to_string(), |t| t.to_string());
            writeln!(table, "{method},{m},{:?},{},{found}", s.target, out.granularity).unwrap();
            for (t, v) in out.probes {
                writeln!(probes, "{method},{m},{t},{v:?}").unwrap();
            }
        }
    }
    Ok((table, probes))
}
