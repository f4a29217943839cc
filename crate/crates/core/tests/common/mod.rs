//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

pub mod mild;

use acausal_lqg::problem::{
    build_problem, make_grid, KernelShape, NoiseModel, ProblemParams, ProblemSpec, TimeGrid,
};
use nalgebra::DMatrix;

pub fn s(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Scalar problem `a, b, c, f, g = 1, h` on `[0, 1]` with `P₀ = p0` and the given noise.
pub fn scalar_problem(
    a: f64,
    b: f64,
    c: f64,
    f: f64,
    h: f64,
    p0: f64,
    noise: NoiseModel,
) -> ProblemSpec {
    build_problem(ProblemParams {
        a: s(a),
        b: s(b),
        c: s(c),
        f: s(f),
        g: s(1.0),
        h: s(h),
        horizon: 1.0,
        initial_cov: s(p0),
        initial_mean: None,
        noise,
    })
    .expect("valid scalar problem")
}

pub fn white(eps: f64) -> NoiseModel {
    NoiseModel::Case1 {
        lambda: KernelShape::Zero,
        eps,
    }
}

pub fn grid(spec: &ProblemSpec, n: usize) -> TimeGrid {
    make_grid(spec, n, 1).expect("valid grid")
}

/// `log₂(e_coarse / e_fine)` for successive halvings of `dt`.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
