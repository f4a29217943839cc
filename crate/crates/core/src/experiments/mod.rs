//! Monte Carlo experiments: realized-cost estimates, the optimality and invariance
//! comparisons and the statistical suites, each producing a JSON-serializable report.

mod invariance;
mod mc;
mod optimality;
mod report;
mod suites;

pub use invariance::invariance_experiment;
pub use mc::{combine_digests, estimate, map_paths, mc_cost, mean_stderr, noise_digest, McSetup};
pub use optimality::{optimality_experiment, GAIN_SCALES};
pub use report::{CostEstimate, ExperimentReport, PairedStat, PolicyEstimate, Relation, Verdict};
pub use suites::statistical_suites;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    build_problem, make_grid, preset_params, Case, GridConfig, KernelShape, NoiseModel,
    ProblemConfig, ProblemSpec, TimeGrid,
};

/// Steps of a config file that carries no grid.
pub const DEFAULT_STEPS: usize = 200;

/// Seed used when none is given; every experiment is reproducible from it.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Kernel multiplier of the high-correlation variant; on `case1-default` it lifts the
/// integrated filter-noise autocovariance above the observation-noise intensity.
pub const HIGH_CORRELATION_SCALE: f64 = 256.0;

/// A named problem on its grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: ProblemSpec,
    pub grid: TimeGrid,
}

impl Scenario {
    pub fn new(name: impl Into<String>, spec: ProblemSpec, grid: TimeGrid) -> Self {
        Self {
            name: name.into(),
            spec,
            grid,
        }
    }

    /// A preset on `n` steps (its default when `None`) with refinement `rho`.
    pub fn preset(name: &str, n: Option<usize>, rho: Option<usize>) -> Result<Self> {
        let (params, default_n) = preset_params(name)?;
        let spec = build_problem(params)?;
        let grid = make_grid(&spec, n.unwrap_or(default_n), rho.unwrap_or(1))?;
        Ok(Self::new(name, spec, grid))
    }

    /// A JSON config; `n` and `rho` override its grid. CSV kernels resolve next to the file.
    pub fn from_config(path: &Path, n: Option<usize>, rho: Option<usize>) -> Result<Self> {
        let cfg = ProblemConfig::from_path(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let spec = build_problem(cfg.to_params(base)?)?;
        let file_grid = cfg.grid.unwrap_or(GridConfig {
            n: DEFAULT_STEPS,
            rho: 1,
        });
        let grid = make_grid(
            &spec,
            n.unwrap_or(file_grid.n),
            rho.unwrap_or(file_grid.rho),
        )?;
        let name = path
            .file_stem()
            .map_or("config".into(), |s| s.to_string_lossy().into_owned());
        Ok(Self::new(name, spec, grid))
    }

    /// The state-noise kernel scaled by [`HIGH_CORRELATION_SCALE`]; `None` outside case 1.
    pub fn high_correlation(&self) -> Result<Option<Self>> {
        let NoiseModel::Case1 { lambda, eps } = self.spec.noise() else {
            return Ok(None);
        };
        if matches!(lambda, KernelShape::Zero) {
            return Ok(None);
        }
        let mut params = self.spec.params().clone();
        params.noise = NoiseModel::Case1 {
            lambda: lambda.scaled(HIGH_CORRELATION_SCALE),
            eps: *eps,
        };
        let spec = build_problem(params)?;
        let grid = make_grid(&spec, self.grid.n, self.grid.rho)?;
        Ok(Some(Self::new(
            format!("{}-high-correlation", self.name),
            spec,
            grid,
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Optimality,
    Invariance,
    Suites,
    All,
}

/// Reports of one experiment request, in run order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub reports: Vec<ExperimentReport>,
    pub passed: bool,
}

/// Run `kind` on `sc`. `All` runs every experiment that applies to the noise model, plus the
/// high-correlation optimality check for state-noise scenarios.
pub fn run_experiment(
    kind: ExperimentKind,
    sc: &Scenario,
    m: usize,
    seed: u64,
) -> Result<ReportSet> {
    let mut reports = Vec::new();
    let wants = |k: ExperimentKind| kind == k || kind == ExperimentKind::All;
    if wants(ExperimentKind::Optimality) {
        reports.push(optimality_experiment(sc, m, seed, false)?);
        if let Some(high) = sc.high_correlation()? {
            reports.push(optimality_experiment(&high, m, seed, true)?);
        }
    }
    if wants(ExperimentKind::Invariance) {
        match invariance_experiment(sc, m, seed) {
            Err(Error::UnsupportedExperiment(_))
                if kind == ExperimentKind::All && sc.spec.case() == Case::Three => {}
            other => reports.push(other?),
        }
    }
    if wants(ExperimentKind::Suites) {
        reports.push(statistical_suites(sc, m, seed)?);
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok(ReportSet { reports, passed })
}
