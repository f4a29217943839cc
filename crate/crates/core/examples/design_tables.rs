//! Solve the control and filter equations of a preset and print a few table entries.
//!
//! `cargo run --example design_tables -- case2-sensor`

use acausal_lqg::experiments::Scenario;
use acausal_lqg::sim::design;

fn main() -> acausal_lqg::Result<()> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "case1-default".into());
    let sc = Scenario::preset(&name, None, None)?;
    let d = design(&sc.spec, &sc.grid)?;
    let g = &sc.grid;
    println!(
        "{name}: N = {}, L = {}, case {:?}",
        g.n, g.lag_steps, d.filter.case
    );
    println!("{:>6} {:>12} {:>12} {:>14}", "t", "K", "P", "Q(t, -eps/2)");
    for i in (0..=g.n).step_by(g.n / 10) {
        let q = d.filter.kernels.q.view(i, g.lag_steps / 2)[(0, 0)];
        println!(
            "{:>6.3} {:>12.6} {:>12.6} {:>14.6}",
            g.t(i),
            d.control.k[i][(0, 0)],
            d.filter.p.p[i][(0, 0)],
            q
        );
    }
    Ok(())
}
