//! How each delay schedule spreads one observation-noise cell over later plant steps.

use acausal_lqg::noise::{grid_schedule, DelayWeights};
use acausal_lqg::problem::{scenario_preset, NoiseModel};

fn main() -> acausal_lqg::Result<()> {
    for name in ["case3-lunar", "case3-voyager", "case3-mars-return"] {
        let (spec, grid) = scenario_preset(name)?;
        let NoiseModel::Case3 { schedule, .. } = spec.noise() else {
            unreachable!()
        };
        let w = DelayWeights::new(&grid_schedule(schedule, &grid), &grid)?;
        println!("{name}: N = {}, L = {}", grid.n, grid.lag_steps);
        for i in [grid.n / 10, grid.n / 2, 3 * grid.n / 4] {
            let cells: Vec<String> = (0..=grid.lag_steps)
                .filter(|&l| w.get(i, l) != 0.0)
                .map(|l| format!("{:+.3}:{:.3}", l as f64 * grid.dt, w.get(i, l)))
                .collect();
            println!(
                "  noise at t = {:.3} reaches the plant at lag:weight {}",
                grid.t(i),
                cells.join(" ")
            );
        }
    }
    Ok(())
}
