use super::mc::{map_paths, mean_stderr, McSetup};
use super::report::{ExperimentReport, Verdict};
use super::Scenario;
use crate::error::{Error, Result};
use crate::kernels::{derive_noise_stats, DerivedNoiseStats};
use crate::noise::{CovarianceKernel, FactorVariant, PathNoise, ProblemKernels};
use crate::problem::Case;
use crate::sim::{lemma_diagnostics, DiagnosticsRecord, Policy, Simulator, TrajectoryBundle};

/// How one per-path observable is judged after averaging over paths.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rule {
    /// `|mean − target| ≤ k·stderr`.
    Stderr(f64),
    /// `|mean − target| ≤ bound`.
    Absolute(f64),
    /// `max |value| ≤ bound` over paths.
    Max(f64),
}

#[derive(Debug, Clone)]
struct Obs {
    name: String,
    value: f64,
    target: f64,
    rule: Rule,
}

/// Innovation whiteness, filter consistency, Lemma residual, noise law and filter-noise covariance.
pub fn statistical_suites(sc: &Scenario, m: usize, seed: u64) -> Result<ExperimentReport> {
    if m == 0 {
        return Err(Error::TooFewPaths(0));
    }
    let setup = McSetup::new(&sc.spec, &sc.grid, FactorVariant::LowerFactor)?;
    let sim = Simulator::new(&sc.spec, &setup.design)?;
    let law = match sc.spec.case() {
        Case::Three => None,
        _ => {
            let kernels = ProblemKernels::new(&sc.spec, setup.grid());
            let stats = derive_noise_stats(&setup.design.filter, &kernels, sc.spec.c());
            Some((
                kernels.sampling_kernel()?.expect("covariance-kernel model"),
                stats,
            ))
        }
    };
    let per_path = map_paths(m, |p| {
        let noise = setup.noise(seed, p);
        let traj = sim.run(&noise, &Policy::Optimal, p)?;
        let diag = lemma_diagnostics(&traj, &noise, &setup.design, &sc.spec);
        Ok(observe(sc, &setup, law.as_ref(), &traj, &diag, &noise))
    })?;

    let grid = setup.grid();
    let mut report = ExperimentReport::new("suites", &sc.name, seed, m, grid.n, grid.lag_steps);
    for (j, probe) in per_path[0].iter().enumerate() {
        let values: Vec<f64> = per_path.iter().map(|o| o[j].value).collect();
        let verdict = match probe.rule {
            Rule::Stderr(k) => {
                let (mean, se) = mean_stderr(&values);
                Verdict::within(&probe.name, mean - probe.target, se, k)
            }
            Rule::Absolute(bound) => Verdict::at_most(
                &probe.name,
                (mean_stderr(&values).0 - probe.target).abs(),
                bound,
            ),
            Rule::Max(bound) => Verdict::at_most(
                &probe.name,
                values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                bound,
            ),
        };
        report.verdicts.push(verdict);
    }
    if sc.spec.case() == Case::Three {
        report.notes.push("delayed noise has no covariance kernel: noise-law and filter-noise covariance checks do not apply".into());
    }
    if m < 2 {
        report
            .notes
            .push(format!("{m} path(s): standard errors are undefined"));
    }
    Ok(report.finish())
}

fn observe(
    sc: &Scenario,
    setup: &McSetup<'_>,
    law: Option<&(CovarianceKernel, DerivedNoiseStats)>,
    traj: &TrajectoryBundle,
    diag: &DiagnosticsRecord,
    noise: &PathNoise,
) -> Vec<Obs> {
    let (n, _, k) = sc.spec.dims();
    let grid = setup.grid();
    let (steps, lags, dt) = (grid.n, grid.lag_steps, grid.dt);
    let interior = [steps / 4, steps / 2, 3 * steps / 4];
    let mut out = Vec::new();
    let mut push = |name: String, value: f64, target: f64, rule: Rule| {
        out.push(Obs {
            name,
            value,
            target,
            rule,
        })
    };

    // innovation increments behave like Wiener increments
    for &i in &interior {
        for b in 0..k {
            let z = traj.innovation[i * k + b];
            let z_next = traj.innovation[(i + 1) * k + b];
            push(
                format!("innovation mean, step {i}, component {b}"),
                z,
                0.0,
                Rule::Stderr(3.0),
            );
            push(
                format!("innovation variance / dt, step {i}, component {b}"),
                z * z / dt,
                1.0,
                Rule::Stderr(3.0),
            );
            push(
                format!("innovation lag-1 product / dt, step {i}, component {b}"),
                z * z_next / dt,
                0.0,
                Rule::Stderr(3.0),
            );
        }
    }

    // estimation error second moment against P
    for &i in &[steps / 4, steps / 2, steps] {
        let p = &setup.design.filter.p.p[i];
        for a in 0..n {
            for b in 0..=a {
                let ea = traj.x[i * n + a] - traj.xhat[i * n + a];
                let eb = traj.x[i * n + b] - traj.xhat[i * n + b];
                let scale = (p[(a, a)] * p[(b, b)]).sqrt();
                push(
                    format!("error covariance vs P, step {i}, entry ({a},{b})"),
                    ea * eb,
                    p[(a, b)],
                    Rule::Absolute(0.05 * scale),
                );
            }
        }
    }

    // Lemma residual
    let k_t = &setup.design.control.k[steps];
    let x_t = traj.x_at(steps);
    let scale = (0..n)
        .map(|a| {
            diag.y[steps * n + a].abs() + (0..n).map(|b| (k_t[(a, b)] * x_t[b]).abs()).sum::<f64>()
        })
        .fold(f64::MIN_POSITIVE, f64::max);
    let r_end = (0..n)
        .map(|a| diag.residual[steps * n + a].abs())
        .fold(0.0, f64::max);
    push(
        "terminal residual, relative".into(),
        r_end / scale,
        0.0,
        Rule::Max(1e-10),
    );
    let z = traj.z();
    for &i in &interior {
        for a in 0..n {
            let r = diag.residual[i * n + a];
            push(
                format!("residual mean, step {i}, component {a}"),
                r,
                0.0,
                Rule::Stderr(3.0),
            );
            for b in 0..k {
                push(
                    format!(
                        "residual x observation at step {}, step {i}, ({a},{b})",
                        i / 2
                    ),
                    r * z[(i / 2) * k + b],
                    0.0,
                    Rule::Stderr(3.0),
                );
            }
        }
    }

    // noise law and the covariance of the filter-generated noise
    if let Some((kernel, stats)) = law {
        let (dim, _) = kernel.shape();
        let phi = |i: usize, a: usize| {
            if a < n {
                noise.state_incr[i * n + a] / dt
            } else {
                (noise.obs_incr[i * k + a - n] - noise.obs_white[i * k + a - n]) / dt
            }
        };
        let far = (3 * lags).div_ceil(2);
        let origin = (steps / 2).min(steps.saturating_sub(far + 1)).max(1);
        let lag_set = [0, lags / 4, lags / 2, lags, far];
        for &l in &lag_set {
            if origin + l >= steps {
                continue;
            }
            let target = |a: usize, b: usize| {
                if l <= lags {
                    kernel.values.view(origin, l)[(a, b)]
                } else {
                    0.0
                }
            };
            for a in 0..dim {
                for b in 0..dim {
                    push(
                        format!("noise autocovariance, lag {l} steps, entry ({a},{b})"),
                        phi(origin + l, a) * phi(origin, b),
                        target(a, b),
                        Rule::Stderr(3.0),
                    );
                }
            }
        }
        let pd = traj.psi_dim;
        for &l in &[0, lags / 4, lags / 2] {
            if origin + l >= steps {
                continue;
            }
            let sigma = stats.sigma.view(origin, l);
            for a in 0..n {
                for b in 0..n {
                    push(
                        format!("filter-noise autocovariance, lag {l} steps, entry ({a},{b})"),
                        traj.psi0[(origin + l) * pd + a] * traj.psi0[origin * pd + b],
                        sigma[(a, b)],
                        Rule::Stderr(3.0),
                    );
                }
            }
        }
    }
    out
}
