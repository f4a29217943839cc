use super::mc::{estimate, McSetup};
use super::report::{ExperimentReport, PolicyEstimate, Relation, Verdict};
use super::Scenario;
use crate::error::{Error, Result};
use crate::noise::{FactorVariant, NoiseSampler, ProblemKernels};
use crate::problem::Case;
use crate::sim::{design, Policy};

/// The design never reads the relaxing function, so it is rebuilt and compared bitwise; the
/// cost means under the lower and upper factors must agree within three combined errors.
pub fn invariance_experiment(sc: &Scenario, m: usize, seed: u64) -> Result<ExperimentReport> {
    if sc.spec.case() == Case::Three {
        return Err(Error::UnsupportedExperiment(
            "invariance needs a covariance-kernel noise model (cases 1 and 2)".into(),
        ));
    }
    let first = design(&sc.spec, &sc.grid)?;
    let second = design(&sc.spec, &sc.grid)?;
    let identical = first.control == second.control
        && first.propagators == second.propagators
        && first.alpha_weights == second.alpha_weights
        && first.filter == second.filter;

    let mut report = ExperimentReport::new(
        "invariance",
        &sc.name,
        seed,
        m,
        sc.grid.n,
        sc.grid.lag_steps,
    );
    report.verdicts.push(Verdict::at_least(
        "design tables identical across rebuilds",
        f64::from(u8::from(identical)),
        1.0,
    ));

    let kernel = ProblemKernels::new(&sc.spec, &sc.grid)
        .sampling_kernel()?
        .expect("covariance-kernel model");
    let tol = 1e-8 * kernel.max_abs().max(1.0);
    let mut means = Vec::new();
    for variant in [FactorVariant::LowerFactor, FactorVariant::UpperFactor] {
        let setup = McSetup::with_design(&sc.spec, first.clone(), variant)?;
        if let NoiseSampler::Wideband { phi, .. } = &setup.sampler {
            let err = phi.gram_error(&kernel);
            if !(err <= tol) {
                return Err(Error::FactorizationMismatch(err));
            }
            report.verdicts.push(Verdict::at_most(
                format!("{variant:?} reproduces the kernel"),
                err,
                tol,
            ));
        }
        let costs: Vec<f64> = setup
            .costs(&Policy::Optimal, m, seed)?
            .into_iter()
            .map(|(c, _)| c)
            .collect();
        let est = estimate(&costs, seed);
        report.estimates.push(PolicyEstimate {
            policy: format!("optimal/{variant:?}"),
            estimate: est.clone(),
        });
        means.push(est);
    }
    let combined = match (means[0].stderr, means[1].stderr) {
        (Some(a), Some(b)) => Some((a * a + b * b).sqrt()),
        _ => None,
    };
    report.verdicts.push(Verdict::new(
        "|J[lower] - J[upper]| <= 3 combined stderr",
        Some((means[0].mean - means[1].mean).abs()),
        Relation::AtMost,
        combined.map(|s| 3.0 * s),
    ));
    if m < 2 {
        report
            .notes
            .push(format!("{m} path(s): standard errors are undefined"));
    }
    Ok(report.finish())
}
