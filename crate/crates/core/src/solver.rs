//! Output contract shared by every solver and a uniform dispatch over them.

use alloc::vec::Vec;

use crate::baselines::{
    self, AltMinConfig, AltMinGdConfig, BmConfig, NucConfig,
};
use crate::clock::{Clock, NoClock};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::metasp::{self, MetaSpConfig};
use crate::metrics::{dist1_matrix, sine_angle};
use crate::model::{Coefficients, GroundTruth, MultiTaskDataset, Subspace};

/// One row of a solver trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// 1-based iteration index, strictly increasing within a run.
    pub iter: usize,
    pub loss: f64,
    pub dist1: Option<f64>,
    pub dist2: Option<f64>,
    /// Seconds since the fit started, nondecreasing.
    pub elapsed: f64,
}

/// What a fit returns: final coefficients and representation plus the trace.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Coefficients,
    pub subspace: Subspace,
    pub trace: Vec<IterationTrace>,
    pub iterations: usize,
    /// The relative-change stopping rule fired before `max_iters`.
    pub converged: bool,
    /// Some step hit a degenerate case (zero iterate, singular inner system)
    /// and used its documented fallback.
    pub degenerate: bool,
}

/// Optional monitoring for a fit: a ground truth to compute distances
/// against and a clock to stamp iterations.
#[derive(Clone, Copy)]
pub struct FitContext<'a> {
    pub truth: Option<&'a GroundTruth>,
    pub clock: &'a dyn Clock,
}

impl Default for FitContext<'_> {
    fn default() -> Self {
        Self {
            truth: None,
            clock: &NoClock,
        }
    }
}

impl<'a> FitContext<'a> {
    pub fn with_truth(mut self, truth: &'a GroundTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn with_clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = clock;
        self
    }
}

pub(crate) struct Tracer<'a> {
    ctx: FitContext<'a>,
    start: f64,
    last: f64,
    pub(crate) rows: Vec<IterationTrace>,
}

impl<'a> Tracer<'a> {
    pub(crate) fn new(ctx: FitContext<'a>) -> Self {
        let start = ctx.clock.now_seconds();
        Self {
            ctx,
            start,
            last: 0.0,
            rows: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, iter: usize, loss: f64, theta: &Matrix, subspace: Option<&Subspace>) {
        let elapsed = (self.ctx.clock.now_seconds() - self.start).max(self.last);
        self.last = elapsed;
        let (dist1, dist2) = match self.ctx.truth {
            Some(gt) => (
                Some(dist1_matrix(theta, gt.theta().theta())),
                subspace.and_then(|b| sine_angle(b, gt.subspace()).ok()),
            ),
            None => (None, None),
        };
        self.rows.push(IterationTrace {
            iter,
            loss,
            dist1,
            dist2,
            elapsed,
        });
    }
}

/// Configuration of the method of moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomConfig {
    pub rank: usize,
}

/// A fully configured solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    MetaSp(MetaSpConfig),
    MoM(MomConfig),
    AltMin(AltMinConfig),
    AltMinGd(AltMinGdConfig),
    Bm(BmConfig),
    Nuc(NucConfig),
}

impl Method {
    /// Names used in configuration files and CSV output.
    pub const NAMES: [&'static str; 6] = ["meta-sp", "mom", "altmin", "altmingd", "bm", "nuc"];
    /// Names of methods that are recognized but not implemented.
    pub const RESERVED: [&'static str; 2] = ["anil", "mom2"];

    pub fn name(&self) -> &'static str {
        match self {
            Method::MetaSp(_) => "meta-sp",
            Method::MoM(_) => "mom",
            Method::AltMin(_) => "altmin",
            Method::AltMinGd(_) => "altmingd",
            Method::Bm(_) => "bm",
            Method::Nuc(_) => "nuc",
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Method::MetaSp(c) => c.rank,
            Method::MoM(c) => c.rank,
            Method::AltMin(c) => c.rank,
            Method::AltMinGd(c) => c.rank,
            Method::Bm(c) => c.rank,
            Method::Nuc(c) => c.rank,
        }
    }

    /// Runs the solver. The method of moments only estimates a subspace;
    /// its coefficients are the per-task least-squares fits inside it.
    pub fn fit(&self, dataset: &MultiTaskDataset, ctx: FitContext<'_>) -> Result<FitResult> {
        match self {
            Method::MetaSp(c) => metasp::fit(dataset, c, ctx),
            Method::MoM(c) => baselines::mom_fit_full(dataset, c.rank, ctx),
            Method::AltMin(c) => baselines::altmin_fit(dataset, c, ctx),
            Method::AltMinGd(c) => baselines::altmingd_fit(dataset, c, ctx),
            Method::Bm(c) => baselines::bm_fit(dataset, c, ctx),
            Method::Nuc(c) => baselines::nuc_fit(dataset, c, ctx),
        }
    }
}
