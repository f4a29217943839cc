//! End-to-end acceptance suite. Run with `--nocapture` to see one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use acausal_lqg::experiments::{
    invariance_experiment, run_experiment, statistical_suites, ExperimentKind, ExperimentReport,
    McSetup, ReportSet, Scenario, Verdict, DEFAULT_SEED,
};
use acausal_lqg::kernels::{solve_filter, KernelOptions};
use acausal_lqg::noise::{FactorVariant, NoiseSampler, PathNoise};
use acausal_lqg::problem::{
    build_problem, make_grid, DelayKind, DelaySchedule, KernelShape, NoiseModel, ProblemParams,
    ProblemSpec, TimeGrid,
};
use acausal_lqg::riccati::solve_backward_riccati;
use acausal_lqg::sim::{accumulate_cost, design, simulate_closed_loop, Policy};

use common::{mild::preset_errors, orders, s, scalar_problem, white};

const PATHS: usize = 10_000;
const SUITE_SCENARIOS: [&str; 3] = ["case1-default", "case2-sensor", "case3-lunar"];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn backward_riccati_closed_form() -> Outcome {
    let spec = scalar_problem(0.0, 1.0, 1.0, 0.0, 1.0, 1.0, white(0.25));
    let grid = common::grid(&spec, 1000);
    let start = Instant::now();
    let k = solve_backward_riccati(&spec, &grid).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (i, ki) in k.k.iter().enumerate() {
        worst = worst.max(rel_err(ki[(0, 0)], 1.0 / (2.0 - grid.t(i))));
    }
    for (j, km) in k.k_mid.iter().enumerate() {
        let t = grid.t(j) + 0.5 * grid.dt;
        worst = worst.max(rel_err(km[(0, 0)], 1.0 / (2.0 - t)));
    }
    check(
        worst <= 1e-6 && elapsed < 1.0,
        format!("max relative error {worst:.2e}, {elapsed:.3} s"),
    )
}

fn forward_riccati_closed_form() -> Outcome {
    let spec = scalar_problem(0.0, 1.0, 1.0, 0.0, 1.0, 1.0, white(0.25));
    let grid = common::grid(&spec, 1000);
    let f = solve_filter(&spec, &grid, KernelOptions::default()).map_err(|e| e.to_string())?;
    let worst =
        f.p.p
            .iter()
            .enumerate()
            .map(|(i, p)| rel_err(p[(0, 0)], 1.0 / (1.0 + grid.t(i))))
            .fold(0.0, f64::max);
    check(worst <= 1e-6, format!("max relative error {worst:.2e}"))
}

fn quiet_noise(grid: &TimeGrid, n: usize, k: usize) -> PathNoise {
    PathNoise {
        xi: vec![0.0; n],
        state_incr: vec![0.0; grid.n * n],
        obs_incr: vec![0.0; grid.n * k],
        obs_white: vec![0.0; grid.n * k],
    }
}

fn deterministic_lqr_value() -> Outcome {
    let x0 = 2.0;
    let spec = build_problem(ProblemParams {
        a: s(0.0),
        b: s(1.0),
        c: s(1.0),
        f: s(0.0),
        g: s(1.0),
        h: s(1.0),
        horizon: 1.0,
        initial_cov: s(0.0),
        initial_mean: Some(DVector::from_element(1, x0)),
        noise: white(0.25),
    })
    .map_err(|e| e.to_string())?;
    let grid = common::grid(&spec, 1000);
    let d = design(&spec, &grid).map_err(|e| e.to_string())?;
    let traj = simulate_closed_loop(&spec, &d, &quiet_noise(&grid, 1, 1), &Policy::Optimal)
        .map_err(|e| e.to_string())?;
    let j = accumulate_cost(&traj, &spec);
    let want = 0.5 * x0 * x0;
    let err = rel_err(j, want);
    check(
        err <= 1e-4,
        format!("J = {j:.8}, expected {want}, relative error {err:.2e}"),
    )
}

fn mild_solution_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_order = f64::INFINITY;
    let mut worst_error: f64 = 0.0;
    let mut failures = Vec::new();
    for name in SUITE_SCENARIOS {
        for (table, errors) in preset_errors(name, &[200, 400, 800]) {
            let ord = orders(&errors).into_iter().fold(f64::INFINITY, f64::min);
            worst_order = worst_order.min(ord);
            worst_error = worst_error.max(errors[2]);
            if !(ord >= 0.9) {
                failures.push(format!("{name}/{table} order {ord:.3}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && elapsed < 60.0,
        format!(
            "min order {worst_order:.3}, max error at N = 800 {worst_error:.2e}, {elapsed:.1} s{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join(", "))
            }
        ),
    )
}

fn two_state(noise: NoiseModel) -> ProblemSpec {
    let m = |v: &[f64]| DMatrix::from_row_slice(2, 2, v);
    build_problem(ProblemParams {
        a: m(&[0.2, 1.0, -0.5, -0.1]),
        b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        c: DMatrix::from_row_slice(1, 2, &[1.0, 0.3]),
        f: DMatrix::identity(2, 2),
        g: s(0.2),
        h: DMatrix::identity(2, 2),
        horizon: 1.0,
        initial_cov: m(&[0.2, 0.05, 0.05, 0.1]),
        initial_mean: Some(DVector::from_row_slice(&[0.5, -0.3])),
        noise,
    })
    .expect("valid two-state problem")
}

/// Classical Kalman–Bucy covariance `P' = AP + PAᵀ − PCᵀCP` by RK4.
fn kalman_covariance(spec: &ProblemSpec, grid: &TimeGrid) -> Vec<DMatrix<f64>> {
    let (a, c) = (spec.a(), spec.c());
    let rhs = |p: &DMatrix<f64>| {
        let ap = a * p;
        let cp = c * p;
        &ap + ap.transpose() - cp.transpose() * cp
    };
    let h = grid.dt;
    let mut p = spec.initial_cov().clone();
    let mut out = vec![p.clone()];
    for _ in 0..grid.n {
        let k1 = rhs(&p);
        let k2 = rhs(&(&p + &k1 * (h / 2.0)));
        let k3 = rhs(&(&p + &k2 * (h / 2.0)));
        let k4 = rhs(&(&p + &k3 * h));
        p = &p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        p = (&p + p.transpose()) * 0.5;
        out.push(p.clone());
    }
    out
}

fn reduction_chain() -> Outcome {
    let eps = 0.2;
    let models = [
        (
            "state-noise kernel zero",
            NoiseModel::Case1 {
                lambda: KernelShape::Zero,
                eps,
            },
        ),
        (
            "all kernels zero",
            NoiseModel::Case2 {
                lambda11: KernelShape::Zero,
                lambda22: KernelShape::Zero,
                lambda12: KernelShape::Zero,
                eps,
            },
        ),
        (
            "delayed-noise gain zero",
            NoiseModel::Case3 {
                d: DMatrix::zeros(2, 1),
                schedule: DelaySchedule::new(DelayKind::ConstantLag { eps }, 1.0)
                    .expect("schedule"),
            },
        ),
    ];
    let mut worst: f64 = 0.0;
    for (label, noise) in models {
        let spec = two_state(noise);
        let grid = make_grid(&spec, 200, 1).map_err(|e| e.to_string())?;
        let d = design(&spec, &grid).map_err(|e| e.to_string())?;
        let f = &d.filter;
        let kalman = kalman_covariance(&spec, &grid);
        let mut table_err: f64 = 0.0;
        for (p, pk) in f.p.p.iter().zip(&kalman) {
            table_err = table_err.max((p - pk).amax());
        }
        for (gain, pk) in f.gains.state_gain.iter().zip(&kalman) {
            table_err = table_err.max((gain - pk * spec.c().transpose()).amax());
        }
        let mut extra = vec![
            f.kernels.q.max_abs(),
            f.corr.r0.max_abs(),
            f.gains.psi_gain.max_abs(),
            d.alpha_weights.max_abs() * f.kernels.q.max_abs(),
        ];
        extra.extend(f.kernels.m.as_ref().map(|m| m.max_abs()));
        extra.extend(f.gains.injection.as_ref().map(|m| m.max_abs()));
        table_err = extra.into_iter().fold(table_err, f64::max);

        // closed loop against the classical separated law on the same draw
        let sampler = NoiseSampler::new(&spec, &grid, FactorVariant::LowerFactor)
            .map_err(|e| e.to_string())?;
        let noise = sampler.sample(DEFAULT_SEED, 0, &grid, 2);
        let traj =
            simulate_closed_loop(&spec, &d, &noise, &Policy::Optimal).map_err(|e| e.to_string())?;
        let law = spec.g_inv() * spec.b().transpose();
        let mut xhat = spec.initial_mean().clone();
        let mut law_err: f64 = 0.0;
        for i in 0..=grid.n {
            let u = -(&law * &d.control.k[i] * &xhat);
            law_err = law_err
                .max((DVector::from_column_slice(&traj.xhat[2 * i..2 * i + 2]) - &xhat).amax())
                .max((traj.u[i] - u[0]).abs())
                .max(traj.u1[i].abs());
            if i == grid.n {
                break;
            }
            let zbar = traj.dz[i] - (spec.c() * &xhat)[0] * grid.dt;
            xhat = &xhat
                + (spec.a() * &xhat + spec.b() * &u) * grid.dt
                + &kalman[i] * spec.c().transpose() * zbar;
        }
        if !(table_err <= 1e-12 && law_err <= 1e-12) {
            return Err(format!(
                "{label}: table error {table_err:.2e}, control-law error {law_err:.2e}"
            ));
        }
        worst = worst.max(table_err).max(law_err);
    }
    Ok(format!("three reductions, max deviation {worst:.2e}"))
}

fn verdicts_matching<'a>(
    reports: &'a [ExperimentReport],
    keep: impl Fn(&str) -> bool,
) -> Vec<(&'a str, &'a Verdict)> {
    reports
        .iter()
        .flat_map(|r| r.verdicts.iter().map(move |v| (r.scenario.as_str(), v)))
        .filter(|(_, v)| keep(&v.check))
        .collect()
}

fn summarize(selected: &[(&str, &Verdict)]) -> Outcome {
    if selected.is_empty() {
        return Err("no applicable checks".into());
    }
    let failed: Vec<String> = selected
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(sc, v)| format!("{sc}: {} = {:?} vs {:?}", v.check, v.value, v.bound))
        .collect();
    check(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} checks", selected.len())
        } else {
            format!(
                "{} of {} checks failed: {}",
                failed.len(),
                selected.len(),
                failed.join("; ")
            )
        },
    )
}

fn noise_law(suites: &[ExperimentReport]) -> Outcome {
    summarize(&verdicts_matching(suites, |c| {
        c.starts_with("noise autocovariance")
    }))
}

fn invariance() -> Outcome {
    let mut reports = Vec::new();
    for name in ["case1-default", "case2-sensor"] {
        let sc = Scenario::preset(name, None, None).map_err(|e| e.to_string())?;
        let lower = McSetup::new(&sc.spec, &sc.grid, FactorVariant::LowerFactor)
            .map_err(|e| e.to_string())?;
        let upper = McSetup::new(&sc.spec, &sc.grid, FactorVariant::UpperFactor)
            .map_err(|e| e.to_string())?;
        let (a, b) = (&lower.design, &upper.design);
        if !(a.control == b.control
            && a.propagators == b.propagators
            && a.alpha_weights == b.alpha_weights
            && a.filter == b.filter)
        {
            return Err(format!(
                "{name}: design tables depend on the relaxing function"
            ));
        }
        reports.push(invariance_experiment(&sc, PATHS, DEFAULT_SEED).map_err(|e| e.to_string())?);
    }
    summarize(&verdicts_matching(&reports, |_| true))
}

fn optimality() -> Outcome {
    let start = Instant::now();
    let sc = Scenario::preset("case1-default", None, None).map_err(|e| e.to_string())?;
    let set = run_experiment(ExperimentKind::Optimality, &sc, PATHS, DEFAULT_SEED)
        .map_err(|e| e.to_string())?;
    if set.reports.len() != 2 {
        return Err("high-correlation variant missing".into());
    }
    let drop_alpha = set.reports[1]
        .paired
        .iter()
        .find(|p| p.policy == Policy::DropAlpha.to_string())
        .map(|p| p.mean / p.stderr.unwrap_or(f64::NAN));
    let mut outcome = summarize(&verdicts_matching(&set.reports, |_| true));
    let note = format!(
        ", drop-alpha margin {:.1} stderr, {:.0} s",
        drop_alpha.unwrap_or(f64::NAN),
        start.elapsed().as_secs_f64()
    );
    match &mut outcome {
        Ok(s) | Err(s) => s.push_str(&note),
    }
    outcome
}

fn lemma_residual(suites: &[ExperimentReport]) -> Outcome {
    summarize(&verdicts_matching(suites, |c| {
        c.starts_with("terminal residual") || c.starts_with("residual")
    }))
}

fn innovation_and_consistency(suites: &[ExperimentReport]) -> Outcome {
    summarize(&verdicts_matching(suites, |c| {
        c.starts_with("innovation") || c.starts_with("error covariance")
    }))
}

fn in_pool(threads: usize, f: impl FnOnce() -> String + Send) -> String {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn cli_report(threads: usize, args: &[&str]) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_acausal"))
        .args(args)
        .arg("--out")
        .arg(dir.path())
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    // exit 1 is a completed run with a failing verdict
    if !matches!(status.status.code(), Some(0 | 1)) {
        return Err(format!(
            "`{}` exited with {:?}: {}",
            args.join(" "),
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    let file = if args[0] == "simulate" {
        "summary.json"
    } else {
        "report.json"
    };
    std::fs::read(dir.path().join(file)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for name in SUITE_SCENARIOS {
        let sc = Scenario::preset(name, None, None).map_err(|e| e.to_string())?;
        let run = || {
            let set: ReportSet =
                run_experiment(ExperimentKind::All, &sc, 400, 7).expect("experiment runs");
            serde_json::to_string(&set).expect("serializable")
        };
        let reference = in_pool(1, run);
        for threads in [2, 5] {
            if in_pool(threads, run) != reference {
                return Err(format!("{name}: report differs with {threads} workers"));
            }
            compared += 1;
        }
    }
    for args in [
        &[
            "experiment",
            "suites",
            "--preset",
            "case2-sensor",
            "--M",
            "300",
        ][..],
        &[
            "simulate",
            "--preset",
            "case3-lunar",
            "--M",
            "300",
            "--policy",
            "drop-alpha",
        ][..],
    ] {
        let reference = cli_report(1, args)?;
        for threads in [3, 8] {
            if cli_report(threads, args)? != reference {
                return Err(format!(
                    "`{}` differs with {threads} workers",
                    args.join(" ")
                ));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} repeated runs bitwise identical"))
}

#[test]
fn acceptance() {
    let suites: Vec<ExperimentReport> = SUITE_SCENARIOS
        .iter()
        .map(|name| {
            let sc = Scenario::preset(name, None, None).expect("preset");
            statistical_suites(&sc, PATHS, DEFAULT_SEED).expect("suites run")
        })
        .collect();

    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (
            "backward Riccati closed form",
            Box::new(backward_riccati_closed_form),
        ),
        (
            "forward Riccati closed form",
            Box::new(forward_riccati_closed_form),
        ),
        ("deterministic LQR value", Box::new(deterministic_lqr_value)),
        (
            "mild-solution equivalence",
            Box::new(mild_solution_equivalence),
        ),
        ("reduction to classical LQG", Box::new(reduction_chain)),
        ("noise law", Box::new(|| noise_law(&suites))),
        (
            "invariance under the relaxing function",
            Box::new(invariance),
        ),
        (
            "optimality of the extended separation law",
            Box::new(optimality),
        ),
        (
            "decomposition residual",
            Box::new(|| lemma_residual(&suites)),
        ),
        (
            "innovation whiteness and consistency",
            Box::new(|| innovation_and_consistency(&suites)),
        ),
        ("determinism across worker counts", Box::new(determinism)),
    ];
    let mut failed = Vec::new();
    for (id, (title, run)) in criteria.into_iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {title}: {detail}", id + 1),
            Err(detail) => {
                println!("FAIL [{:>2}] {title}: {detail}", id + 1);
                failed.push(id + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
