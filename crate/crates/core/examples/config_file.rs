//! Load a two-state problem from JSON and estimate its optimal cost.
//!
//! `cargo run --example config_file -- path/to/problem.json`

use std::path::PathBuf;

use acausal_lqg::experiments::{mc_cost, Scenario};
use acausal_lqg::sim::Policy;

fn main() -> acausal_lqg::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/two_state.json")
        });
    let sc = Scenario::from_config(&path, None, None)?;
    let (n, m, k) = sc.spec.dims();
    println!(
        "{}: n = {n}, m = {m}, k = {k}, N = {}, L = {}",
        sc.name, sc.grid.n, sc.grid.lag_steps
    );
    for policy in [Policy::Optimal, Policy::DropAlpha, Policy::Zero] {
        let est = mc_cost(&sc.spec, &sc.grid, &policy, 2000, 5)?;
        println!(
            "{policy:>12}: J = {:.5} ± {:.5}",
            est.mean,
            est.stderr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
