//! Simulate one closed-loop path under two policies on common noise and write the optimal
//! trace as CSV to standard output.

use acausal_lqg::noise::{FactorVariant, NoiseSampler};
use acausal_lqg::problem::scenario_preset;
use acausal_lqg::sim::{accumulate_cost, design, write_trace, Policy, Simulator};

fn main() -> acausal_lqg::Result<()> {
    let (spec, grid) = scenario_preset("case1-default")?;
    let d = design(&spec, &grid)?;
    let sampler = NoiseSampler::new(&spec, &grid, FactorVariant::LowerFactor)?;
    let noise = sampler.sample(3, 0, &grid, spec.dims().0);
    let sim = Simulator::new(&spec, &d)?;
    for policy in [Policy::Optimal, Policy::Zero] {
        let traj = sim.run(&noise, &policy, 0)?;
        eprintln!(
            "{policy}: realized cost {:.5}",
            accumulate_cost(&traj, &spec)
        );
    }
    let traj = sim.run(&noise, &Policy::Optimal, 0)?;
    write_trace(&traj, &grid, std::io::stdout().lock())
}
