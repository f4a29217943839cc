//! Backward control Riccati equation against its closed form `K_t = 1/(2 − t)` for
//! `A = 0, B = G = H = 1, F = 0` on `[0, 1]`.

use acausal_lqg::problem::{build_problem, make_grid, KernelShape, NoiseModel, ProblemParams};
use acausal_lqg::riccati::{build_propagators, solve_backward_riccati};
use nalgebra::DMatrix;

fn main() -> acausal_lqg::Result<()> {
    let s = |v: f64| DMatrix::from_element(1, 1, v);
    let spec = build_problem(ProblemParams {
        a: s(0.0),
        b: s(1.0),
        c: s(1.0),
        f: s(0.0),
        g: s(1.0),
        h: s(1.0),
        horizon: 1.0,
        initial_cov: s(1.0),
        initial_mean: None,
        noise: NoiseModel::Case1 {
            lambda: KernelShape::Zero,
            eps: 0.1,
        },
    })?;
    for n in [10, 20, 40, 80] {
        let grid = make_grid(&spec, n, 1)?;
        let k = solve_backward_riccati(&spec, &grid)?;
        let err = (0..=n)
            .map(|i| (k.k[i][(0, 0)] - 1.0 / (2.0 - grid.t(i))).abs())
            .fold(0.0, f64::max);
        let u = build_propagators(&spec, &k, &grid).between(n, 0)[(0, 0)];
        println!("N = {n:>3}: max |K - exact| = {err:.3e}, U(T, 0) = {u:.8} (exact 0.5)");
    }
    Ok(())
}
