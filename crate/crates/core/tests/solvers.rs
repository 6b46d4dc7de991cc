use metasp_core::baselines::{
    altmin_fit, altmingd_fit, bm_fit, bm_gradient, moment_matrix, mom_fit, nuc_fit,
    soft_threshold_singular_values, AltMinConfig, AltMinGdConfig, BmConfig, NucConfig,
};
use metasp_core::linalg::singular_values;
use metasp_core::metasp::{self, MetaSpConfig};
use metasp_core::metrics::{dist1, sine_angle, theorem2_rate, theorem3_check};
use metasp_core::model::loss;
use metasp_core::solver::MomConfig;
use metasp_core::synthetic::{generate_dataset, generate_ground_truth, task_diversity, DgpConfig};
use metasp_core::{Coefficients, FitContext, GroundTruth, Matrix, Method, MultiTaskDataset};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(d: usize, s: usize, t: usize, m: usize, sigma: f64, seed: u64) -> (GroundTruth, MultiTaskDataset) {
    let cfg = DgpConfig::new(d, s, t, m, sigma, seed).unwrap();
    let gt = generate_ground_truth(&cfg).unwrap();
    let ds = generate_dataset(&gt, &cfg).unwrap();
    (gt, ds)
}

#[test]
fn zero_iterations_return_the_initialization() {
    let (_, ds) = instance(8, 2, 5, 6, 0.1, 0);
    let out = metasp::fit(&ds, &MetaSpConfig::new(2, 0.5, 0), FitContext::default()).unwrap();
    assert_eq!(out.coefficients.theta().max_abs(), 0.0);
    assert!(out.trace.is_empty());
    assert_eq!(out.iterations, 0);
}

#[test]
fn every_iterate_is_rank_s_and_spans_its_subspace() {
    let (gt, ds) = instance(15, 3, 12, 10, 0.2, 4);
    for k in 1..=8 {
        let out = metasp::fit(&ds, &MetaSpConfig::new(3, 0.5, k), FitContext::default()).unwrap();
        let theta = out.coefficients.theta();
        let sv = singular_values(theta);
        assert!(sv[3..].iter().all(|&v| v <= 1e-8 * sv[0]));
        assert!(out.subspace.basis().row_orthonormality_residual() <= 1e-8);
        // Every row of Θ lies in the row span of B.
        let proj = theta.matmul_transpose(out.subspace.basis()).matmul(out.subspace.basis());
        assert!(proj.sub(theta).max_abs() <= 1e-9 * theta.max_abs());
        let check = theorem3_check(&out.subspace, &gt, &out.coefficients).unwrap();
        assert!(check.holds, "{check:?}");
    }
}

#[test]
fn trace_reports_distances_against_truth() {
    let (gt, ds) = instance(20, 2, 30, 15, 0.0, 6);
    let out = metasp::fit(&ds, &MetaSpConfig::new(2, 0.5, 10), FitContext::default().with_truth(&gt)).unwrap();
    assert_eq!(out.trace.len(), 10);
    assert!(out.trace.windows(2).all(|w| w[0].iter < w[1].iter));
    let last = out.trace.last().unwrap();
    assert_eq!(last.dist1.unwrap(), dist1(&out.coefficients, &gt).unwrap());
    assert_eq!(last.dist2.unwrap(), sine_angle(&out.subspace, gt.subspace()).unwrap());
    let untraced = metasp::fit(&ds, &MetaSpConfig::new(2, 0.5, 3), FitContext::default()).unwrap();
    assert!(untraced.trace.iter().all(|r| r.dist1.is_none() && r.dist2.is_none()));
}

#[test]
fn noiseless_error_is_nonincreasing_after_burn_in() {
    for seed in 0..20 {
        let (gt, ds) = instance(20, 2, 40, 20, 0.0, 100 + seed);
        let out = metasp::fit(&ds, &MetaSpConfig::new(2, 0.5, 60), FitContext::default().with_truth(&gt)).unwrap();
        let errs: Vec<f64> = out.trace.iter().map(|r| r.dist1.unwrap()).collect();
        for w in errs[5..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-24, "seed {seed}: {} > {}", w[1], w[0]);
        }
        assert!(errs.last().unwrap() < &(errs[5] * 1e-2), "seed {seed}");
    }
}

#[test]
fn diverging_step_reports_last_finite_iterate() {
    let (_, ds) = instance(40, 2, 10, 5, 0.0, 3);
    match metasp::fit(&ds, &MetaSpConfig::new(2, 50.0, 2000), FitContext::default()) {
        Err(metasp_core::Error::Diverged { iteration, last }) => {
            let last = last.unwrap();
            assert_eq!(last.iterations + 1, iteration);
            assert!(last.coefficients.theta().is_finite());
        }
        other => panic!("expected divergence, got {:?}", other.map(|r| r.iterations)),
    }
}

#[test]
fn metric_examples() {
    let (gt, _) = instance(6, 2, 4, 1, 0.0, 2);
    assert_eq!(dist1(gt.theta(), &gt).unwrap(), 0.0);
    let mut bumped = gt.theta().theta().clone();
    bumped.set(0, 0, bumped.get(0, 0) + 2.0);
    assert!((dist1(&Coefficients::new(bumped).unwrap(), &gt).unwrap() - 1.0).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let delta = Matrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
    let shifted = |c: f64| Coefficients::new(gt.theta().theta().add(&delta.scale(c))).unwrap();
    let base = dist1(&shifted(1.0), &gt).unwrap();
    let naive: f64 = delta.as_slice().iter().map(|v| v * v).sum::<f64>() / 4.0;
    assert!((base - naive).abs() <= 1e-12 * naive);
    assert!((dist1(&shifted(3.0), &gt).unwrap() - 9.0 * base).abs() <= 1e-12 * base);

    assert_eq!(theorem2_rate(1.0, 0.0).factor, 0.0);
    let edge = theorem2_rate(1.0, 1.0 / (2.0 * 2f64.sqrt()));
    assert!((edge.factor - 1.0).abs() < 1e-15);
    let stall = theorem2_rate(0.0, 0.3);
    assert!((stall.factor - 2.0 * 2f64.sqrt()).abs() < 1e-15 && !stall.contracts);

    let check = theorem3_check(gt.subspace(), &gt, gt.theta()).unwrap();
    assert!(check.holds && check.lhs < 1e-12 && check.rhs == 0.0);
}

#[test]
fn sine_angle_matches_projector_and_principal_angle_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let d = rng.random_range(2..10);
        let s = rng.random_range(1..d);
        let (a, _) = instance(d, s, s, 1, 0.0, rng.random());
        let (b, _) = instance(d, s, s, 1, 0.0, rng.random());
        let (a, b) = (a.subspace(), b.subspace());
        let v = sine_angle(a, b).unwrap();
        assert!((v - sine_angle(b, a).unwrap()).abs() <= 1e-10);
        assert!((0.0..=1.0).contains(&v));

        let na = DMatrix::from_row_slice(s, d, a.basis().as_slice());
        let nb = DMatrix::from_row_slice(s, d, b.basis().as_slice());
        let proj = DMatrix::<f64>::identity(d, d) - nb.transpose() * &nb;
        let projector = (&na * proj).singular_values().max();
        assert!((v - projector).abs() <= 1e-10, "{v} vs {projector}");
        let smin = (&na * nb.transpose()).singular_values().min();
        assert!((v - (1.0 - smin * smin).max(0.0).sqrt()).abs() <= 1e-6);

        // Rotating the basis rows does not change the span.
        let (r, _) = instance(s, s, s, 1, 0.0, rng.random());
        let rotated = metasp_core::Subspace::new(r.subspace().basis().matmul(a.basis())).unwrap();
        assert!((sine_angle(&rotated, b).unwrap() - v).abs() <= 1e-10);
        assert!(sine_angle(&rotated, a).unwrap() <= 1e-8);
    }
}

#[test]
fn rip_probe_exact_isometry() {
    let d = 6;
    let x = Matrix::identity(d).scale((d as f64).sqrt());
    let tasks = (0..4).map(|_| metasp_core::TaskData::new(x.clone(), vec![0.0; d]).unwrap()).collect();
    let ds = MultiTaskDataset::new(tasks).unwrap();
    let est = metasp_core::metrics::rip_probe(&ds, 2, 10, 1, 10.0, 0.1).unwrap();
    assert!(est.delta_hat < 1e-12);
    assert!(est.ratios.iter().all(|&r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn altmin_objective_is_monotone() {
    for seed in 0..5 {
        let (_, ds) = instance(20, 3, 25, 12, 0.5, 200 + seed);
        let out = altmin_fit(&ds, &AltMinConfig::new(3, 15, seed), FitContext::default()).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1].loss <= w[0].loss + 1e-9 * w[0].loss.max(1.0));
        }
        assert!(out.subspace.basis().row_orthonormality_residual() <= 1e-8);
    }
}

#[test]
fn altmin_recovers_well_sampled_subspace() {
    let (gt, ds) = instance(20, 2, 60, 20, 0.0, 5);
    let out = altmin_fit(&ds, &AltMinConfig::new(2, 100, 1), FitContext::default()).unwrap();
    assert!(sine_angle(&out.subspace, gt.subspace()).unwrap() < 1e-6);
    let gd = altmingd_fit(&ds, &AltMinGdConfig::new(2, 0.5, 400, 1), FitContext::default()).unwrap();
    assert!(sine_angle(&gd.subspace, gt.subspace()).unwrap() < 1e-4);
}

#[test]
fn soft_threshold_matches_svd_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (r, c) = (rng.random_range(2..8), rng.random_range(2..8));
        let m = Matrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0));
        let tau = rng.random_range(0.0..2.0);
        let (out, _, _) = soft_threshold_singular_values(&m, tau);
        let na = DMatrix::from_row_slice(r, c, m.as_slice()).svd(true, true);
        let shrunk = na.singular_values.map(|s| (s - tau).max(0.0));
        let oracle = na.u.unwrap() * DMatrix::from_diagonal(&shrunk) * na.v_t.unwrap();
        for i in 0..r {
            for j in 0..c {
                assert!((out.get(i, j) - oracle[(i, j)]).abs() < 1e-9);
            }
        }
        let mut expected: Vec<f64> = shrunk.iter().copied().filter(|&v| v > 0.0).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in singular_values(&out).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn nuc_recovers_noiseless_low_rank() {
    let (gt, ds) = instance(10, 2, 40, 10, 0.0, 21);
    let out = nuc_fit(&ds, &NucConfig::new(2, 1e-5, 3000, 0), FitContext::default()).unwrap();
    assert!(sine_angle(&out.subspace, gt.subspace()).unwrap() < 1e-3);
    assert!(out.subspace.basis().row_orthonormality_residual() <= 1e-8);
}

#[test]
fn bm_tiny_instance_fits_exactly() {
    let (gt, ds) = instance(6, 2, 20, 12, 0.0, 31);
    let out = bm_fit(&ds, &BmConfig::new(2, 0.2, 5000, 1), FitContext::default()).unwrap();
    assert!(loss(&ds, &out.coefficients).unwrap() <= 1e-6);
    assert!(sine_angle(&out.subspace, gt.subspace()).unwrap() < 1e-4);
}

#[test]
fn bm_origin_has_zero_gradient() {
    let (_, ds) = instance(6, 2, 20, 12, 0.5, 31);
    let (gw, gb, _) = bm_gradient(&ds, &Matrix::zeros(20, 2), &Matrix::zeros(2, 6));
    assert_eq!(gw.max_abs() + gb.max_abs(), 0.0);
}

#[test]
fn moment_matrix_is_symmetric() {
    let (gt, ds) = instance(12, 2, 300, 10, 0.1, 9);
    let m = moment_matrix(&ds);
    assert_eq!(m, m.transpose());
    let est = mom_fit(&ds, 2).unwrap();
    assert!(est.subspace.basis().row_orthonormality_residual() <= 1e-10);
    assert!(sine_angle(&est.subspace, gt.subspace()).unwrap() < 0.5);
}

#[test]
fn every_method_returns_orthonormal_subspace() {
    let (gt, ds) = instance(12, 2, 20, 8, 0.3, 13);
    let methods = [
        Method::MetaSp(MetaSpConfig::new(2, 0.5, 20)),
        Method::MoM(MomConfig { rank: 2 }),
        Method::AltMin(AltMinConfig::new(2, 10, 1)),
        Method::AltMinGd(AltMinGdConfig::new(2, 0.5, 20, 1)),
        Method::Bm(BmConfig::new(2, 0.1, 50, 1)),
        Method::Nuc(NucConfig::from_noise(2, 0.3, 50, 1)),
    ];
    for (method, name) in methods.iter().zip(Method::NAMES) {
        assert_eq!(method.name(), name);
        let out = method.fit(&ds, FitContext::default().with_truth(&gt)).unwrap();
        assert!(out.subspace.basis().row_orthonormality_residual() <= 1e-8, "{name}");
        assert_eq!(out.subspace.rank(), 2);
        assert!(out.trace.iter().all(|r| r.dist2.unwrap() <= 1.0));
    }
    assert!(task_diversity(&gt) > 0.0);
}
