//! Factor a triangular autocovariance into a relaxing function, draw an ensemble of
//! wide-band noise paths and compare the empirical autocovariance with the kernel.

use acausal_lqg::noise::{factor_covariance, generate_bn_path, FactorVariant, ProblemKernels};
use acausal_lqg::problem::scenario_preset;

fn main() -> acausal_lqg::Result<()> {
    let (spec, grid) = scenario_preset("case1-default")?;
    let kernel = ProblemKernels::new(&spec, &grid)
        .sampling_kernel()?
        .expect("state-noise kernel");
    let phi = factor_covariance(&kernel, &grid, FactorVariant::LowerFactor)?;
    println!("Gram reproduction error: {:.3e}", phi.gram_error(&kernel));

    let paths = 4000;
    let origin = grid.n / 2;
    let lags = [0, grid.lag_steps / 4, grid.lag_steps / 2, grid.lag_steps];
    let mut acc = vec![0.0; lags.len()];
    for p in 0..paths {
        let bn = generate_bn_path(&phi, &grid, 11, p, false)?;
        for (j, &l) in lags.iter().enumerate() {
            acc[j] += bn.phi[origin + l] * bn.phi[origin];
        }
    }
    println!("{:>8} {:>12} {:>12}", "lag", "kernel", "empirical");
    for (j, &l) in lags.iter().enumerate() {
        println!(
            "{:>8.4} {:>12.5} {:>12.5}",
            l as f64 * grid.dt,
            kernel.at(origin, l)[(0, 0)],
            acc[j] / paths as f64
        );
    }
    Ok(())
}
