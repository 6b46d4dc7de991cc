//! Per-iteration traces.

use std::fmt::Write as _;
use std::time::Instant;

use metasp_core::synthetic::{generate_dataset, generate_ground_truth};
use metasp_core::{Clock, Error as CoreError, FitContext, GroundTruth, IterationTrace, Method, MultiTaskDataset, NoClock};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::sweep::trial_seed;

pub const TRACE_HEADER: &str = "method,iter,loss,dist1,dist2,elapsed_seconds";

/// Wall clock measured from its construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl Default for StdClock {
    fn default() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn now_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Fits `method` while recording distances to `gt` at every iteration. A
/// diverged run keeps the iterations before the blow-up.
pub fn trace_run(method: &Method, gt: &GroundTruth, dataset: &MultiTaskDataset, clock: &dyn Clock) -> Result<Vec<IterationTrace>> {
    let ctx = FitContext::default().with_truth(gt).with_clock(clock);
    match method.fit(dataset, ctx) {
        Ok(fit) => Ok(fit.trace),
        Err(CoreError::Diverged { last, .. }) => Ok(last.map(|f| f.trace).unwrap_or_default()),
        Err(e) => Err(e.into()),
    }
}

/// Traces every configured method at the base DGP point, trial 0.
pub fn run_traces(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<IterationTrace>)>> {
    let p = cfg.base_point();
    let mut out = Vec::new();
    for name in &cfg.experiment.methods {
        let seed = trial_seed(cfg.experiment.seed_base, name, p.t as f64, 0);
        let dgp = cfg.dgp_config(p, seed)?;
        let gt = generate_ground_truth(&dgp)?;
        let dataset = generate_dataset(&gt, &dgp)?;
        let method = cfg.method(name, p, seed)?;
        let wall = StdClock::default();
        let clock: &dyn Clock = if cfg.experiment.record_wall_time { &wall } else { &NoClock };
        out.push((name.clone(), trace_run(&method, &gt, &dataset, clock)?));
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn trace_csv(traces: &[(String, Vec<IterationTrace>)]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (method, rows) in traces {
        for r in rows {
            writeln!(out, "{method},{},{:?},{},{},{:?}", r.iter, r.loss, opt(r.dist1), opt(r.dist2), r.elapsed).unwrap();
        }
    }
    out
}
