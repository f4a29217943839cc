use super::mc::{combine_digests, estimate, map_paths, mean_stderr, noise_digest, McSetup};
use super::report::{ExperimentReport, PairedStat, PolicyEstimate, Verdict};
use super::Scenario;
use crate::error::Result;
use crate::noise::FactorVariant;
use crate::sim::{accumulate_cost, Policy, Simulator};

/// Feedback-gain perturbations compared against the optimal law.
pub const GAIN_SCALES: [f64; 4] = [0.8, 0.9, 1.1, 1.2];

/// Paired comparison of the optimal law against perturbed and reduced laws.
///
/// Every alternative must satisfy `J_alt − J_opt ≥ −3·stderr`. With `strict_alpha` the law
/// without the anticipating correction must also lose by `+3·stderr`.
pub fn optimality_experiment(
    sc: &Scenario,
    m: usize,
    seed: u64,
    strict_alpha: bool,
) -> Result<ExperimentReport> {
    let setup = McSetup::new(&sc.spec, &sc.grid, FactorVariant::LowerFactor)?;
    let mut policies = vec![Policy::Optimal];
    policies.extend(
        GAIN_SCALES
            .iter()
            .map(|&gamma| Policy::GainScaled { gamma }),
    );
    policies.extend([Policy::DropAlpha, Policy::Zero]);

    let sim = Simulator::new(&sc.spec, &setup.design)?;
    let per_path = map_paths(m, |p| {
        let mut costs = Vec::with_capacity(policies.len());
        let mut digests = Vec::with_capacity(policies.len());
        for policy in &policies {
            // each policy redraws its noise from the path seed
            let noise = setup.noise(seed, p);
            digests.push(noise_digest(&noise));
            costs.push(accumulate_cost(&sim.run(&noise, policy, p)?, &sc.spec));
        }
        Ok((costs, digests))
    })?;

    let label = if strict_alpha {
        "optimality-high-correlation"
    } else {
        "optimality"
    };
    let grid = setup.grid();
    let mut report = ExperimentReport::new(label, &sc.name, seed, m, grid.n, grid.lag_steps);
    let crn = per_path.iter().all(|(_, d)| d.iter().all(|x| *x == d[0]));
    report.noise_digest = Some(combine_digests(per_path.iter().map(|(_, d)| &d[0])));
    report.verdicts.push(Verdict::at_least(
        "common random numbers across policies",
        f64::from(u8::from(crn)),
        1.0,
    ));

    let column = |j: usize| per_path.iter().map(|(c, _)| c[j]).collect::<Vec<f64>>();
    let opt = column(0);
    for (j, policy) in policies.iter().enumerate() {
        let costs = column(j);
        report.estimates.push(PolicyEstimate {
            policy: policy.to_string(),
            estimate: estimate(&costs, seed),
        });
        if j == 0 {
            continue;
        }
        let diff: Vec<f64> = costs.iter().zip(&opt).map(|(a, b)| a - b).collect();
        let (mean, stderr) = mean_stderr(&diff);
        report.paired.push(PairedStat {
            policy: policy.to_string(),
            reference: Policy::Optimal.to_string(),
            mean,
            stderr,
        });
        let bound = stderr.map(|s| -3.0 * s);
        report.verdicts.push(Verdict::new(
            format!("J[{policy}] - J[optimal] >= -3 stderr"),
            Some(mean),
            super::report::Relation::AtLeast,
            bound,
        ));
        if strict_alpha && matches!(policy, Policy::DropAlpha) {
            report.verdicts.push(Verdict::new(
                "J[drop-alpha] - J[optimal] >= +3 stderr",
                Some(mean),
                super::report::Relation::AtLeast,
                stderr.map(|s| 3.0 * s),
            ));
        }
    }
    if m < 2 {
        report
            .notes
            .push(format!("{m} path(s): standard errors are undefined"));
    }
    Ok(report.finish())
}
