use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adapt_task, lsq_pinv, random_b};
use crate::error::{Error, Result};
use crate::model::{Coefficients, MultiTaskDataset, Subspace, TaskData};
use crate::seed::derive_seed;
use crate::solver::{FitContext, FitResult, Method};

const TASK_STREAM: u64 = 0x7461_736b;
const POINT_STREAM: u64 = 0x706f_696e_74;

/// How tasks and points are divided between meta-learning and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProtocol {
    /// Share of tasks used for meta-training, in `(0, 1)`.
    pub meta_fraction: f64,
    /// Points per task used for fitting; the rest are held out.
    pub train_points_per_task: usize,
    pub seed: u64,
    /// Compare `exp(prediction)` with `exp(truth)` instead of the raw values,
    /// for responses that were log transformed.
    pub delog: bool,
}

impl SplitProtocol {
    pub fn new(train_points_per_task: usize, seed: u64) -> Self {
        Self {
            meta_fraction: 0.8,
            train_points_per_task,
            seed,
            delog: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.meta_fraction > 0.0 && self.meta_fraction < 1.0) {
            return Err(Error::invalid("meta_fraction must lie in (0, 1)"));
        }
        if self.train_points_per_task == 0 {
            return Err(Error::invalid("train_points_per_task must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    MetaTest,
    TestTrain,
    TestTest,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::MetaTest => "meta-test",
            Stage::TestTrain => "test-train",
            Stage::TestTest => "test-test",
        }
    }
}

/// Which representation the test tasks are adapted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Learned,
    RandomB,
    LsqPinv,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Learned => "learned",
            Arm::RandomB => "random-b",
            Arm::LsqPinv => "lsq-pinv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub arm: Arm,
    pub stage: Stage,
    pub per_task_mre: Vec<f64>,
    /// Mean of `per_task_mre`.
    pub m_mre: f64,
}

impl StageReport {
    fn new(arm: Arm, stage: Stage, per_task_mre: Vec<f64>) -> Self {
        let m_mre = per_task_mre.iter().sum::<f64>() / per_task_mre.len() as f64;
        Self {
            arm,
            stage,
            per_task_mre,
            m_mre,
        }
    }
}

/// Anything that maps meta-training tasks to per-task coefficients and a
/// shared basis.
pub trait MetaLearner {
    fn meta_train(&self, dataset: &MultiTaskDataset) -> Result<(Coefficients, Subspace)>;
}

impl MetaLearner for Method {
    fn meta_train(&self, dataset: &MultiTaskDataset) -> Result<(Coefficients, Subspace)> {
        let FitResult {
            coefficients,
            subspace,
            ..
        } = self.fit(dataset, FitContext::default())?;
        Ok((coefficients, subspace))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    /// Learned arm for all three stages, then the two reference arms for the
    /// test stages.
    pub reports: Vec<StageReport>,
    pub meta_tasks: usize,
    pub test_tasks: usize,
    /// Tasks with at most `train_points_per_task` samples.
    pub dropped_tasks: usize,
    /// Held-out points skipped because their truth value was zero.
    pub skipped_points: usize,
}

impl ProtocolOutcome {
    pub fn report(&self, arm: Arm, stage: Stage) -> Option<&StageReport> {
        self.reports.iter().find(|r| r.arm == arm && r.stage == stage)
    }
}

struct Split {
    train: TaskData,
    test: TaskData,
}

fn split_task(task: &TaskData, m: usize, seed: u64, id: usize) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, POINT_STREAM, id as u64]));
    let n = task.samples();
    let mut chosen = index::sample(&mut rng, n, m).into_vec();
    chosen.sort_unstable();
    let mut is_train = alloc::vec![false; n];
    for &i in &chosen {
        is_train[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !is_train[i]).collect();
    Ok(Split {
        train: task.select(&chosen)?,
        test: task.select(&rest)?,
    })
}

struct Scorer {
    delog: bool,
    skipped: usize,
}

impl Scorer {
    fn score(&mut self, task: &TaskData, theta: &[f64]) -> Result<f64> {
        let pred = task.predict(theta);
        let (v, skipped) = if self.delog {
            let p: Vec<f64> = pred.iter().map(|&v| libm::exp(v)).collect();
            let y: Vec<f64> = task.response().iter().map(|&v| libm::exp(v)).collect();
            super::mre_counted(&p, &y)?
        } else {
            super::mre_counted(&pred, task.response())?
        };
        self.skipped += skipped;
        Ok(v)
    }
}

/// Runs meta-train, meta-test, test-train and test-test.
///
/// Tasks are shuffled under `split.seed`; the first
/// `round(meta_fraction·T)` become meta-tasks (at least one task lands on
/// each side). Every task keeps `train_points_per_task` points, drawn
/// uniformly without replacement, for fitting and holds out the rest.
pub fn run_protocol(
    dataset: &MultiTaskDataset,
    split: &SplitProtocol,
    learner: &dyn MetaLearner,
    random_b_seed: u64,
) -> Result<ProtocolOutcome> {
    split.validate()?;
    let m = split.train_points_per_task;
    let kept: Vec<usize> = (0..dataset.task_count())
        .filter(|&t| dataset.task(t).samples() > m)
        .collect();
    let dropped_tasks = dataset.task_count() - kept.len();
    if kept.len() < 2 {
        return Err(Error::invalid(
            "need at least two tasks with more than train_points_per_task samples",
        ));
    }
    let mut order = kept;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[split.seed, TASK_STREAM]));
    order.shuffle(&mut rng);
    let n_meta = libm::round(split.meta_fraction * order.len() as f64) as usize;
    let n_meta = n_meta.clamp(1, order.len() - 1);
    let (meta_ids, test_ids) = order.split_at(n_meta);

    let split_all = |ids: &[usize]| -> Result<Vec<Split>> {
        ids.iter()
            .map(|&t| split_task(dataset.task(t), m, split.seed, t))
            .collect()
    };
    let meta = split_all(meta_ids)?;
    let test = split_all(test_ids)?;

    let meta_train = MultiTaskDataset::new(meta.iter().map(|s| s.train.clone()).collect())?;
    let (coefficients, basis) = learner.meta_train(&meta_train)?;
    Error::check_dim("learned coefficient rows", meta.len(), coefficients.theta().rows())?;

    let mut scorer = Scorer {
        delog: split.delog,
        skipped: 0,
    };
    let mut reports = Vec::with_capacity(7);

    let meta_test = meta
        .iter()
        .enumerate()
        .map(|(i, s)| scorer.score(&s.test, coefficients.task(i)))
        .collect::<Result<Vec<_>>>()?;
    reports.push(StageReport::new(Arm::Learned, Stage::MetaTest, meta_test));

    let random = random_b(dataset.dim(), basis.rank(), random_b_seed)?;
    for (arm, b) in [(Arm::Learned, Some(&basis)), (Arm::RandomB, Some(&random)), (Arm::LsqPinv, None)] {
        let mut train_mre = Vec::with_capacity(test.len());
        let mut test_mre = Vec::with_capacity(test.len());
        for s in &test {
            let theta = match b {
                Some(b) => adapt_task(b, &s.train)?.theta,
                None => lsq_pinv(&s.train)?,
            };
            train_mre.push(scorer.score(&s.train, &theta)?);
            test_mre.push(scorer.score(&s.test, &theta)?);
        }
        reports.push(StageReport::new(arm, Stage::TestTrain, train_mre));
        reports.push(StageReport::new(arm, Stage::TestTest, test_mre));
    }

    Ok(ProtocolOutcome {
        reports,
        meta_tasks: meta.len(),
        test_tasks: test.len(),
        dropped_tasks,
        skipped_points: scorer.skipped,
    })
}
