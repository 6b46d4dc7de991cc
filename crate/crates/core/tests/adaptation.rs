use metasp_core::adaptation::{
    adapt_task, lsq_pinv, mre, preprocess, random_b, run_protocol, Arm, MetaLearner, PreprocessSpec,
    RawRow, RawTaskTable, SplitProtocol, Stage, Transform,
};
use metasp_core::metasp::MetaSpConfig;
use metasp_core::synthetic::{generate_dataset, generate_ground_truth, DgpConfig};
use metasp_core::{Coefficients, Matrix, Method, MultiTaskDataset, Result, Subspace, TaskData};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fits every task inside a fixed basis.
struct FixedBasis(Subspace);

impl MetaLearner for FixedBasis {
    fn meta_train(&self, dataset: &MultiTaskDataset) -> Result<(Coefficients, Subspace)> {
        let mut theta = Matrix::zeros(dataset.task_count(), dataset.dim());
        for (t, task) in dataset.tasks().iter().enumerate() {
            theta.row_mut(t).copy_from_slice(&adapt_task(&self.0, task)?.theta);
        }
        Ok((Coefficients::new(theta)?, self.0.clone()))
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0))
}

#[test]
fn true_basis_recovers_true_weights() {
    let cfg = DgpConfig::new(15, 3, 6, 8, 0.0, 5).unwrap();
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    for (t, task) in ds.tasks().iter().enumerate() {
        let a = adapt_task(gt.subspace(), task).unwrap();
        assert!(!a.degenerate);
        for (w, w_star) in a.weights.iter().zip(gt.weights().row(t)) {
            assert!((w - w_star).abs() <= 1e-8);
        }
        for (x, y) in a.theta.iter().zip(gt.theta().task(t)) {
            assert!((x - y).abs() <= 1e-8);
        }
    }
}

#[test]
fn two_dimensional_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(6, 5, &mut rng);
    let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = random_b(5, 2, 3).unwrap();
    let task = TaskData::new(x.clone(), y.clone()).unwrap();
    let got = adapt_task(&b, &task).unwrap();

    let z = x.matmul_transpose(b.basis());
    let (mut g, mut r) = ([[0.0; 2]; 2], [0.0; 2]);
    for i in 0..6 {
        for a in 0..2 {
            r[a] += z.get(i, a) * y[i];
            for c in 0..2 {
                g[a][c] += z.get(i, a) * z.get(i, c);
            }
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let w0 = (g[1][1] * r[0] - g[0][1] * r[1]) / det;
    let w1 = (g[0][0] * r[1] - g[1][0] * r[0]) / det;
    assert!((got.weights[0] - w0).abs() < 1e-12 && (got.weights[1] - w1).abs() < 1e-12);
}

#[test]
fn singular_projected_design_falls_back() {
    // One sample cannot determine two weights.
    let task = TaskData::new(Matrix::from_rows(&[&[1.0, 2.0, 3.0]]).unwrap(), vec![1.0]).unwrap();
    let a = adapt_task(&Subspace::canonical(2, 3), &task).unwrap();
    assert!(a.degenerate);
    assert!(a.weights.iter().all(|v| v.is_finite()));
    assert!((task.predict(&a.theta)[0] - 1.0).abs() < 1e-12);
}

#[test]
fn lsq_pinv_examples() {
    let x = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
    let task = TaskData::new(x, vec![3.0, 5.0]).unwrap();
    let theta = lsq_pinv(&task).unwrap();
    assert!((theta[0] - 0.8).abs() < 1e-12 && (theta[1] - 1.4).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(5, 8, &mut rng);
    let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let task = TaskData::new(x.clone(), y.clone()).unwrap();
    let theta = lsq_pinv(&task).unwrap();
    assert!(task.residual(&theta).iter().all(|r| r.abs() < 1e-10));

    let svd = DMatrix::from_row_slice(5, 8, x.as_slice()).svd(true, true);
    let oracle = svd.solve(&nalgebra::DVector::from_vec(y), 1e-12).unwrap();
    for (a, b) in theta.iter().zip(oracle.iter()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn oracle_learner_is_exact_on_noiseless_data() {
    let cfg = DgpConfig::new(12, 3, 20, 10, 0.0, 8).unwrap();
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    let out = run_protocol(&ds, &SplitProtocol::new(5, 1), &FixedBasis(gt.subspace().clone()), 2).unwrap();
    assert_eq!((out.meta_tasks, out.test_tasks, out.dropped_tasks), (16, 4, 0));
    for stage in [Stage::MetaTest, Stage::TestTrain, Stage::TestTest] {
        let r = out.report(Arm::Learned, stage).unwrap();
        assert!(r.m_mre <= 1e-8, "{stage:?}: {}", r.m_mre);
        let mean = r.per_task_mre.iter().sum::<f64>() / r.per_task_mre.len() as f64;
        assert_eq!(r.m_mre, mean);
    }
}

#[test]
fn short_tasks_are_dropped() {
    let cfg = DgpConfig {
        samples: metasp_core::synthetic::SampleSizes::PerTask(vec![8, 3, 8, 8, 4, 8]),
        ..DgpConfig::new(6, 2, 6, 1, 0.1, 3).unwrap()
    };
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    let out = run_protocol(&ds, &SplitProtocol::new(4, 1), &FixedBasis(gt.subspace().clone()), 0).unwrap();
    assert_eq!(out.dropped_tasks, 2);
    assert_eq!(out.meta_tasks + out.test_tasks, 4);
}

#[test]
fn learned_basis_beats_random_basis() {
    let mut wins = 0;
    let method = Method::MetaSp(MetaSpConfig::new(4, 0.2, 300));
    for seed in 0..5 {
        let cfg = DgpConfig::new(30, 4, 100, 25, 0.1, 500 + seed).unwrap();
        let gt = generate_ground_truth(&cfg).unwrap();
        let ds = generate_dataset(&gt, &cfg).unwrap();
        let out = run_protocol(&ds, &SplitProtocol::new(12, seed), &method, seed).unwrap();
        let learned = out.report(Arm::Learned, Stage::TestTest).unwrap().m_mre;
        let random = out.report(Arm::RandomB, Stage::TestTest).unwrap().m_mre;
        wins += usize::from(learned <= random);
    }
    assert!(wins >= 3);
}

#[test]
fn protocol_is_deterministic() {
    let cfg = DgpConfig::new(10, 2, 15, 9, 0.2, 1).unwrap();
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    let method = Method::MetaSp(MetaSpConfig::new(2, 0.5, 30));
    let split = SplitProtocol::new(6, 42);
    let a = run_protocol(&ds, &split, &method, 7).unwrap();
    assert_eq!(a, run_protocol(&ds, &split, &method, 7).unwrap());
    let other = run_protocol(&ds, &SplitProtocol::new(6, 43), &method, 7).unwrap();
    assert_ne!(a, other);
}

#[test]
fn passthrough_preprocessing_round_trips() {
    let cfg = DgpConfig::new(4, 2, 3, 5, 0.1, 2).unwrap();
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    let mut rows = Vec::new();
    for (t, task) in ds.tasks().iter().enumerate() {
        for j in 0..task.samples() {
            rows.push(RawRow {
                task_id: format!("task{t}"),
                features: task.design().row(j).to_vec(),
                response: task.response()[j],
            });
        }
    }
    let table = RawTaskTable {
        feature_names: (0..4).map(|i| format!("x{i}")).collect(),
        response_name: "y".into(),
        rows,
    };
    let spec = PreprocessSpec {
        features: vec![Transform::Passthrough; 4],
        response: Transform::Passthrough,
        intercept: false,
    };
    let out = preprocess(&table, &spec).unwrap();
    assert_eq!(out.dataset, ds);
    let with_intercept = preprocess(&table, &PreprocessSpec { intercept: true, ..spec }).unwrap();
    assert_eq!(with_intercept.dataset.dim(), 5);
    assert!(with_intercept.dataset.tasks().iter().all(|t| (0..t.samples()).all(|j| t.design().get(j, 4) == 1.0)));
}

proptest! {
    #[test]
    fn mre_is_scale_free(
        pairs in prop::collection::vec((-100.0..100.0f64, 0.1..100.0f64), 1..20),
        c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
    ) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = mre(&p, &y).unwrap();
        let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        prop_assert!((mre(&ps, &ys).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
    }
}
