//! Paired comparison of the optimal policy against perturbed and simplified policies.
//!
//! `cargo run --release --example optimality -- 4000`

use acausal_lqg::experiments::{optimality_experiment, Scenario, DEFAULT_SEED};

fn main() -> acausal_lqg::Result<()> {
    let m = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(2000);
    let sc = Scenario::preset("case1-default", None, None)?;
    print!(
        "{}",
        optimality_experiment(&sc, m, DEFAULT_SEED, false)?.render()
    );
    if let Some(high) = sc.high_correlation()? {
        print!(
            "{}",
            optimality_experiment(&high, m, DEFAULT_SEED, true)?.render()
        );
    }
    Ok(())
}
