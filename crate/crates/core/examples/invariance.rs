//! Two relaxing functions with the same kernel give the same design and the same cost law.

use acausal_lqg::experiments::{invariance_experiment, Scenario, DEFAULT_SEED};

fn main() -> acausal_lqg::Result<()> {
    let m = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(2000);
    for name in ["case1-default", "case2-sensor"] {
        let sc = Scenario::preset(name, None, None)?;
        print!("{}", invariance_experiment(&sc, m, DEFAULT_SEED)?.render());
    }
    Ok(())
}
