//! Innovation whiteness, filter consistency, residual martingale and noise-law checks.

use acausal_lqg::experiments::{statistical_suites, Scenario, DEFAULT_SEED};

fn main() -> acausal_lqg::Result<()> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "case3-lunar".into());
    let m = std::env::args()
        .nth(2)
        .and_then(|v| v.parse().ok())
        .unwrap_or(2000);
    let sc = Scenario::preset(&name, None, None)?;
    let report = statistical_suites(&sc, m, DEFAULT_SEED)?;
    print!("{}", report.render());
    Ok(())
}
