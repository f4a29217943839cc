use nalgebra::DMatrix;

use super::*;
use crate::linalg::min_eigenvalue;
use crate::noise::ProblemKernels;
use crate::problem::{
    build_problem, make_grid, preset_params, DelayKind, DelaySchedule, KernelShape, NoiseModel,
    ProblemParams,
};

fn s(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn with_noise(name: &str, noise: NoiseModel, n: usize) -> (ProblemSpec, TimeGrid) {
    let (mut params, _) = preset_params(name).unwrap();
    params.noise = noise;
    let spec = build_problem(params).unwrap();
    let grid = make_grid(&spec, n, 1).unwrap();
    (spec, grid)
}

/// `P' = 2aP − P²` in closed form.
fn kalman_scalar(a: f64, p0: f64, t: f64) -> f64 {
    let e = (2.0 * a * t).exp();
    2.0 * a * p0 * e / (2.0 * a + p0 * (e - 1.0))
}

fn two_dim(noise: NoiseModel, n: usize) -> (ProblemSpec, TimeGrid) {
    let m = |v: &[f64]| DMatrix::from_row_slice(2, 2, v);
    let spec = build_problem(ProblemParams {
        a: m(&[0.2, 1.0, -0.5, -0.1]),
        b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        c: DMatrix::from_row_slice(1, 2, &[1.0, 0.3]),
        f: DMatrix::identity(2, 2),
        g: s(0.2),
        h: DMatrix::identity(2, 2),
        horizon: 1.0,
        initial_cov: m(&[0.2, 0.05, 0.05, 0.1]),
        initial_mean: None,
        noise,
    })
    .unwrap();
    let grid = make_grid(&spec, n, 1).unwrap();
    (spec, grid)
}

#[test]
fn zero_kernel_is_classical_kalman() {
    let (spec, grid) = with_noise(
        "case1-default",
        NoiseModel::Case1 {
            lambda: KernelShape::Zero,
            eps: 0.25,
        },
        100,
    );
    let t = solve_kernels_case1(&spec, &grid).unwrap();
    assert_eq!(t.kernels.q.max_abs(), 0.0);
    assert_eq!(t.corr.r0.max_abs(), 0.0);
    for (i, p) in t.p.p.iter().enumerate() {
        assert!((p[(0, 0)] - kalman_scalar(0.5, 0.1, grid.t(i))).abs() < 1e-9);
    }
}

#[test]
fn case1_support_and_boundary() {
    let (spec, grid) = scenario("case1-default");
    let t = solve_kernels_case1(&spec, &grid).unwrap();
    let l = grid.lag_steps;
    for lag in 0..=l {
        assert_eq!(t.kernels.q.view(0, lag).amax(), 0.0);
    }
    for i in 0..=grid.n {
        assert_eq!(t.kernels.q.view(i, l).amax(), 0.0);
        assert_eq!(t.corr.r0.view(i, l).amax(), 0.0);
    }
    assert!(t.kernels.q.max_abs() > 0.0);
}

fn scenario(name: &str) -> (ProblemSpec, TimeGrid) {
    crate::problem::scenario_preset(name).unwrap()
}

#[test]
fn case2_reduces_to_case1() {
    let lambda = KernelShape::Triangular(s(4.0));
    let (spec1, grid1) = with_noise(
        "case1-default",
        NoiseModel::Case1 {
            lambda: lambda.clone(),
            eps: 0.25,
        },
        120,
    );
    let (spec2, grid2) = with_noise(
        "case1-default",
        NoiseModel::Case2 {
            lambda11: lambda,
            lambda22: KernelShape::Zero,
            lambda12: KernelShape::Zero,
            eps: 0.25,
        },
        120,
    );
    let opts = KernelOptions { store_full: true };
    let t1 = solve_kernels_case1_with(&spec1, &grid1, opts).unwrap();
    let t2 = solve_kernels_case2_with(&spec2, &grid2, opts).unwrap();
    assert!(t1.kernels.q.max_abs_diff(&t2.kernels.q) <= 1e-12);
    assert!(t1.corr.r0.max_abs_diff(&t2.corr.r0) <= 1e-12);
    for (a, b) in t1.p.p.iter().zip(&t2.p.p) {
        assert!((a - b).amax() <= 1e-12);
    }
    assert_eq!(t2.kernels.m.as_ref().unwrap().max_abs(), 0.0);
    assert_eq!(t2.corr.n0.as_ref().unwrap().max_abs(), 0.0);
    assert_eq!(t2.corr.s0.as_ref().unwrap().max_abs(), 0.0);
}

#[test]
fn case2_all_zero_is_kalman() {
    let z = KernelShape::Zero;
    let (spec, grid) = with_noise(
        "case1-default",
        NoiseModel::Case2 {
            lambda11: z.clone(),
            lambda22: z.clone(),
            lambda12: z,
            eps: 0.25,
        },
        100,
    );
    let t = solve_kernels_case2(&spec, &grid).unwrap();
    assert_eq!(
        t.kernels.q.max_abs() + t.kernels.m.as_ref().unwrap().max_abs(),
        0.0
    );
    for (i, p) in t.p.p.iter().enumerate() {
        assert!((p[(0, 0)] - kalman_scalar(0.5, 0.1, grid.t(i))).abs() < 1e-9);
    }
}

fn check_transpose_exchange(slices: &[BlockSquare]) -> f64 {
    let mut worst = 0.0f64;
    for sq in slices {
        let (r, c) = (sq.rows, sq.cols);
        for l in 0..sq.side {
            for m in 0..sq.side {
                let a = DMatrix::from_column_slice(r, c, sq.block(l, m));
                let b = DMatrix::from_column_slice(r, c, sq.block(m, l)).transpose();
                worst = worst.max((a - b).amax());
            }
        }
    }
    worst
}

#[test]
fn correlation_slices_are_transpose_symmetric() {
    let tri = KernelShape::Triangular(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
    let (spec, grid) = two_dim(
        NoiseModel::Case1 {
            lambda: tri.clone(),
            eps: 0.2,
        },
        60,
    );
    let t = solve_kernels_case1_with(&spec, &grid, KernelOptions { store_full: true }).unwrap();
    let full = t.corr.full.unwrap();
    assert_eq!(full.r.len(), grid.n + 1);
    assert!(check_transpose_exchange(&full.r) <= 1e-14);

    let (spec, grid) = two_dim(
        NoiseModel::Case2 {
            lambda11: tri,
            lambda22: KernelShape::Triangular(s(0.5)),
            lambda12: KernelShape::Triangular(DMatrix::from_row_slice(2, 1, &[0.3, 0.1])),
            eps: 0.2,
        },
        60,
    );
    let t = solve_kernels_case2_with(&spec, &grid, KernelOptions { store_full: true }).unwrap();
    let full = t.corr.full.unwrap();
    assert!(check_transpose_exchange(&full.r) <= 1e-14);
    assert!(check_transpose_exchange(&full.n) <= 1e-14);
    assert!(t.corr.s0.unwrap().max_abs() > 0.0);
}

#[test]
fn delayed_zero_gain_is_kalman() {
    let sched = DelaySchedule::new(DelayKind::ConstantLag { eps: 0.2 }, 1.0).unwrap();
    let (spec, grid) = with_noise(
        "case3-lunar",
        NoiseModel::Case3 {
            d: s(0.0),
            schedule: sched,
        },
        100,
    );
    let t = solve_kernels_case3(&spec, &grid).unwrap();
    assert_eq!(t.kernels.q.max_abs() + t.corr.r0.max_abs(), 0.0);
    for (i, p) in t.p.p.iter().enumerate() {
        assert!((p[(0, 0)] - kalman_scalar(0.3, 0.1, grid.t(i))).abs() < 1e-9);
    }
}

#[test]
fn constant_lag_boundary_is_minus_dcp() {
    let (spec, grid) = scenario("case3-lunar");
    let t = solve_kernels_case3(&spec, &grid).unwrap();
    let l = grid.lag_steps;
    let (d, c) = match spec.noise() {
        NoiseModel::Case3 { d, .. } => (d.clone(), spec.c().clone()),
        _ => unreachable!(),
    };
    for i in 0..grid.n {
        let want = -(&d * &c * &t.p.p[i]);
        assert!((t.kernels.q.get(i, l) - want).amax() <= 1e-14, "i = {i}");
    }
}

/// With no delay the filter must collapse to the correlated-noise Kalman filter
/// `P' = 2aP − (P + d)² + d²` and gain `P + d`.
#[test]
fn zero_delay_matches_correlated_kalman() {
    let d = s(0.7);
    let err = |n: usize| {
        let sched = DelaySchedule::new(DelayKind::ConstantLag { eps: 0.2 }, 1.0).unwrap();
        let (spec, grid) = with_noise(
            "case3-lunar",
            NoiseModel::Case3 {
                d: d.clone(),
                schedule: sched,
            },
            n,
        );
        let t = case3::solve_with_weights(
            &spec,
            &grid,
            &d,
            |_, l| if l == 0 { 1.0 } else { 0.0 },
            KernelOptions::default(),
        )
        .unwrap();
        let inj = t.gains.injection.as_ref().unwrap();
        assert_eq!(inj.get(0, 0)[(0, 0)], 0.7);
        // fine RK4 reference
        let rhs = |p: f64| 0.6 * p - (p + 0.7) * (p + 0.7) + 0.49;
        let fine = 20 * n;
        let h = 1.0 / fine as f64;
        let mut p = 0.1;
        let mut worst = 0.0f64;
        for j in 0..fine {
            if j % 20 == 0 {
                worst = worst.max((t.p.p[j / 20][(0, 0)] - p).abs());
            }
            let k1 = rhs(p);
            let k2 = rhs(p + 0.5 * h * k1);
            let k3 = rhs(p + 0.5 * h * k2);
            let k4 = rhs(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        worst
    };
    let (e1, e2) = (err(100), err(200));
    assert!(e1 < 5e-3, "{e1}");
    assert!(e1 / e2 > 1.7, "{e1} {e2}");
}

#[test]
fn moving_boundaries_solve() {
    for name in ["case3-voyager", "case3-mars-return"] {
        let (spec, grid) = scenario(name);
        let t = solve_kernels_case3(&spec, &grid).unwrap();
        assert!(
            t.p.p
                .iter()
                .all(|p| p[(0, 0)].is_finite() && p[(0, 0)] > 0.0),
            "{name}"
        );
        assert!(t.kernels.q.max_abs() > 0.0);
    }
}

#[test]
fn derived_stats_read_back() {
    let (spec, grid) = scenario("case1-default");
    let t = solve_kernels_case1(&spec, &grid).unwrap();
    let st = derive_noise_stats(&t, &ProblemKernels::new(&spec, &grid), spec.c());
    for i in 0..=grid.n {
        assert_eq!(st.sigma.get(i, 0), t.corr.r0.get(i, 0));
        assert!(min_eigenvalue(&st.sigma.get(i, 0)) >= -1e-8);
        assert_eq!(st.sigma.view(i, grid.lag_steps).amax(), 0.0);
        for l in 0..=grid.lag_steps.min(i) {
            assert_eq!(
                st.psi.get(i, l),
                t.kernels.q.get(i - l, l) * spec.c().transpose()
            );
        }
    }

    let (spec, grid) = with_noise(
        "case1-default",
        NoiseModel::Case1 {
            lambda: KernelShape::Zero,
            eps: 0.25,
        },
        50,
    );
    let t = solve_kernels_case1(&spec, &grid).unwrap();
    let st = derive_noise_stats(&t, &ProblemKernels::new(&spec, &grid), spec.c());
    assert_eq!(st.psi.max_abs() + st.sigma.max_abs(), 0.0);
}

#[test]
fn case2_stats_report_both_conventions() {
    let (spec, grid) = scenario("case2-sensor");
    let t = solve_kernels_case2(&spec, &grid).unwrap();
    let st = derive_noise_stats(&t, &ProblemKernels::new(&spec, &grid), spec.c());
    let shifted = st.psi1_shifted.as_ref().unwrap();
    assert!(st.psi2.is_some() && st.psi2_shifted.is_some());
    // the two conventions share the Q part and differ only through the index shifts
    assert!(st.psi.max_abs_diff(shifted) > 0.0);
    // at a node where the gain exists, the filter convention is the stored ψ¹ gain
    let i = 40;
    let l = 3;
    let gain = t.gains.psi_gain.get(i - l, l);
    assert!((st.psi.get(i, l)[(0, 0)] - gain[(0, 0)]).abs() < 1e-14);
    assert!((st.psi2.as_ref().unwrap().get(i, l)[(0, 0)] - gain[(1, 0)]).abs() < 1e-14);
}
