use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use acausal_lqg::experiments::{
    combine_digests, estimate, run_experiment, ExperimentKind, McSetup, Scenario, DEFAULT_SEED,
};
use acausal_lqg::io::{write_design, Artifacts};
use acausal_lqg::kernels::{derive_noise_stats, KernelOptions};
use acausal_lqg::noise::{FactorVariant, ProblemKernels};
use acausal_lqg::problem::{Case, PRESET_NAMES};
use acausal_lqg::sim::{design_with, write_trace, Policy, Simulator};
use acausal_lqg::Error;

/// Design, simulate and verify optimal feedback for acausal LQG problems.
#[derive(Parser, Debug)]
#[command(name = "acausal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the control and filter equations and write every table.
    Design(Common),
    /// Run closed-loop paths under one policy and summarize the realized cost.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// optimal | gain-scaled:<γ> | drop-alpha | zero | linear:<gain>
        #[arg(long, default_value = "optimal")]
        policy: Policy,
        #[arg(long = "M", default_value_t = 100)]
        paths: usize,
        /// Write the per-step trace of this path (repeatable).
        #[arg(long)]
        trace: Vec<u64>,
    },
    /// Run a Monte Carlo experiment; exits nonzero unless every verdict passes.
    Experiment {
        kind: Kind,
        #[command(flatten)]
        common: Common,
        #[arg(long = "M", default_value_t = 10_000)]
        paths: usize,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
struct Common {
    /// Named scenario.
    #[arg(
        long,
        value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES),
        required_unless_present = "config",
        conflicts_with = "config"
    )]
    preset: Option<String>,
    /// JSON problem file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of time steps.
    #[arg(long = "N")]
    steps: Option<usize>,
    /// Refinement of the master noise grid.
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the noise kernels and full correlation tables.
    #[arg(long)]
    dump_kernels: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Optimality,
    Invariance,
    Suites,
    All,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Optimality => ExperimentKind::Optimality,
            Kind::Invariance => ExperimentKind::Invariance,
            Kind::Suites => ExperimentKind::Suites,
            Kind::All => ExperimentKind::All,
        }
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    scenario: String,
    policy: Policy,
    seed: u64,
    paths: usize,
    steps: usize,
    mean_cost: f64,
    stderr: Option<f64>,
    noise_digest: String,
}

impl Common {
    fn scenario(&self) -> Result<Scenario, Error> {
        match (&self.preset, &self.config) {
            (Some(name), _) => Scenario::preset(name, self.steps, self.rho),
            (None, Some(path)) => Scenario::from_config(path, self.steps, self.rho),
            (None, None) => unreachable!("clap requires a problem source"),
        }
    }
}

fn grid_report(sc: &Scenario) -> String {
    let g = &sc.grid;
    let mut s = format!(
        "{}: N = {}, dt = {}, L = {}, rho = {}\n",
        sc.name, g.n, g.dt, g.lag_steps, g.rho
    );
    if g.was_snapped() {
        s += &format!(
            "correlation window snapped from {} to {}\n",
            g.eps_requested, g.eps
        );
    }
    s
}

fn cmd_design(c: &Common) -> Result<bool, Error> {
    let sc = c.scenario()?;
    let opts = KernelOptions {
        store_full: c.dump_kernels,
    };
    let design = design_with(&sc.spec, &sc.grid, opts)?;
    let kernels = ProblemKernels::new(&sc.spec, &sc.grid);
    let stats = (sc.spec.case() != Case::Three)
        .then(|| derive_noise_stats(&design.filter, &kernels, sc.spec.c()));
    let mut art = Artifacts::create(&c.out)?;
    write_design(&mut art, &design, stats.as_ref(), &kernels, c.dump_kernels)?;
    let report = grid_report(&sc);
    art.text("grid.txt", &report)?;
    let files = art.files().len();
    art.finish()?;
    print!("{report}");
    println!("{files} tables written to {}", c.out.display());
    Ok(true)
}

fn cmd_simulate(c: &Common, policy: &Policy, m: usize, traces: &[u64]) -> Result<bool, Error> {
    let sc = c.scenario()?;
    let setup = McSetup::new(&sc.spec, &sc.grid, FactorVariant::LowerFactor)?;
    let samples = setup.costs(policy, m, c.seed)?;
    let costs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let est = estimate(&costs, c.seed);
    let summary = SimulationSummary {
        scenario: sc.name.clone(),
        policy: policy.clone(),
        seed: c.seed,
        paths: m,
        steps: sc.grid.n,
        mean_cost: est.mean,
        stderr: est.stderr,
        noise_digest: combine_digests(samples.iter().map(|s| &s.1)),
    };
    let mut art = Artifacts::create(&c.out)?;
    art.json("summary.json", &summary)?;
    art.write_with("costs.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["path", "cost", "noise_sha256"])?;
        for (p, (cost, digest)) in samples.iter().enumerate() {
            w.write_record([p.to_string(), cost.to_string(), digest.clone()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let sim = Simulator::new(&sc.spec, &setup.design)?;
    for &k in traces {
        let traj = sim.run(&setup.noise(c.seed, k), policy, k)?;
        art.write_with(&format!("trace_{k}.csv"), |w| {
            write_trace(&traj, &sc.grid, w)
        })?;
    }
    art.finish()?;
    print!("{}", grid_report(&sc));
    let se = summary
        .stderr
        .map_or("undefined".to_string(), |s| format!("{s:.6e}"));
    println!(
        "policy {}: J = {:.6} ± {} over {} paths (seed {})",
        summary.policy, summary.mean_cost, se, m, c.seed
    );
    Ok(true)
}

fn cmd_experiment(c: &Common, kind: Kind, m: usize) -> Result<bool, Error> {
    let sc = c.scenario()?;
    let set = run_experiment(kind.into(), &sc, m, c.seed)?;
    let mut art = Artifacts::create(&c.out)?;
    art.json("report.json", &set)?;
    let text: String = set.reports.iter().map(|r| r.render()).collect();
    art.text("report.txt", &text)?;
    art.finish()?;
    print!("{}{text}", grid_report(&sc));
    println!("{}", if set.passed { "PASS" } else { "FAIL" });
    Ok(set.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Simulate { paths: 0, .. } | Command::Experiment { paths: 0, .. } = cli.command {
        eprintln!("error: {}", Error::TooFewPaths(0));
        return ExitCode::from(2);
    }
    let outcome = match &cli.command {
        Command::Design(c) => cmd_design(c),
        Command::Simulate {
            common,
            policy,
            paths,
            trace,
        } => cmd_simulate(common, policy, *paths, trace),
        Command::Experiment {
            kind,
            common,
            paths,
        } => cmd_experiment(common, *kind, *paths),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
