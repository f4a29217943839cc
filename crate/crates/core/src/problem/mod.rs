//! Problem instances: system matrices, horizon, noise model, grids and presets.

mod config;
mod grid;
pub(crate) mod preset;
mod schedule;

pub use config::{read_kernel_csv, GridConfig, KernelConfig, NoiseConfig, ProblemConfig};
pub use grid::{make_grid, TimeGrid};
pub use preset::{preset_params, scenario_preset, PRESET_NAMES};
pub use schedule::{DelayKind, DelaySchedule};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    all_finite, asymmetry, check_shape, check_square, inf_norm, min_eigenvalue, symmetrize,
};

/// Analytic or tabulated description of a covariance kernel Λ(t, θ), θ ≥ 0 the lag.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    Zero,
    /// Λ(t, θ) = S·min(t, ε − θ) on [0, ε]: the law of `√S·(w_t − w_{max(0, t−ε)})`, stationary once `t ≥ ε`.
    Triangular(DMatrix<f64>),
    Tabulated(TabulatedKernel),
}

/// Λ on a rectangular `(time, lag)` table, bilinearly interpolated. A single time row means stationary.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    pub times: Vec<f64>,
    pub lags: Vec<f64>,
    /// `values[time][lag]`
    pub values: Vec<Vec<DMatrix<f64>>>,
}

impl KernelShape {
    pub fn is_zero(&self) -> bool {
        match self {
            KernelShape::Zero => true,
            KernelShape::Triangular(s) => s.iter().all(|v| *v == 0.0),
            KernelShape::Tabulated(t) => t
                .values
                .iter()
                .flatten()
                .all(|m| m.iter().all(|v| *v == 0.0)),
        }
    }

    pub fn is_stationary(&self) -> bool {
        match self {
            KernelShape::Tabulated(t) => t.times.len() == 1,
            _ => true,
        }
    }

    /// Scale Λ by `factor` (a noise `√factor` times larger).
    pub fn scaled(&self, factor: f64) -> KernelShape {
        match self {
            KernelShape::Zero => KernelShape::Zero,
            KernelShape::Triangular(s) => KernelShape::Triangular(s * factor),
            KernelShape::Tabulated(t) => KernelShape::Tabulated(TabulatedKernel {
                times: t.times.clone(),
                lags: t.lags.clone(),
                values: t
                    .values
                    .iter()
                    .map(|row| row.iter().map(|m| m * factor).collect())
                    .collect(),
            }),
        }
    }

    /// Λ(t, lag) with support `0 ≤ lag < eps`; `t` is the earlier of the two times.
    pub fn eval(&self, t: f64, lag: f64, eps: f64, rows: usize, cols: usize) -> DMatrix<f64> {
        if lag < 0.0 || lag >= eps * (1.0 - 1e-12) {
            return DMatrix::zeros(rows, cols);
        }
        match self {
            KernelShape::Zero => DMatrix::zeros(rows, cols),
            KernelShape::Triangular(s) => s * (eps - lag).min(t.max(0.0)),
            KernelShape::Tabulated(tab) => tab.eval(t, lag, rows, cols),
        }
    }

    fn check_dims(&self, name: &'static str, rows: usize, cols: usize) -> Result<()> {
        match self {
            KernelShape::Zero => Ok(()),
            KernelShape::Triangular(s) => {
                check_shape(name, s, rows, cols)?;
                if !all_finite(s) {
                    return Err(Error::NonFinite(name));
                }
                Ok(())
            }
            KernelShape::Tabulated(t) => {
                if t.times.is_empty() || t.lags.len() < 2 || t.values.len() != t.times.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{name}: tabulated kernel table is ragged"
                    )));
                }
                for row in &t.values {
                    if row.len() != t.lags.len() {
                        return Err(Error::DimensionMismatch(format!(
                            "{name}: tabulated kernel table is ragged"
                        )));
                    }
                    for m in row {
                        check_shape(name, m, rows, cols)?;
                        if !all_finite(m) {
                            return Err(Error::NonFinite(name));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

impl TabulatedKernel {
    fn eval(&self, t: f64, lag: f64, rows: usize, cols: usize) -> DMatrix<f64> {
        let (l0, l1, wl) = bracket(&self.lags, lag);
        if lag > *self.lags.last().unwrap() {
            return DMatrix::zeros(rows, cols);
        }
        let at_time = |k: usize| &self.values[k][l0] * (1.0 - wl) + &self.values[k][l1] * wl;
        if self.times.len() == 1 {
            return at_time(0);
        }
        let (t0, t1, wt) = bracket(&self.times, t);
        at_time(t0) * (1.0 - wt) + at_time(t1) * wt
    }
}

fn bracket(xs: &[f64], x: f64) -> (usize, usize, f64) {
    if xs.len() == 1 || x <= xs[0] {
        return (0, 0, 0.0);
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    (k, k + 1, (x - xs[k]) / (xs[k + 1] - xs[k]))
}

/// Noise model selector.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// State corrupted by a wide-band noise with autocovariance Λ.
    Case1 { lambda: KernelShape, eps: f64 },
    /// State and observation corrupted by jointly wide-band noises.
    Case2 {
        lambda11: KernelShape,
        lambda22: KernelShape,
        lambda12: KernelShape,
        eps: f64,
    },
    /// State corrupted by `D w'_{max(0, λ_t)}`, a pointwise delay of the observation noise.
    Case3 {
        d: DMatrix<f64>,
        schedule: DelaySchedule,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    One,
    Two,
    Three,
}

impl NoiseModel {
    pub fn case(&self) -> Case {
        match self {
            NoiseModel::Case1 { .. } => Case::One,
            NoiseModel::Case2 { .. } => Case::Two,
            NoiseModel::Case3 { .. } => Case::Three,
        }
    }

    /// Correlation window ε (for Case 3 the largest relevant lag).
    pub fn eps(&self) -> f64 {
        match self {
            NoiseModel::Case1 { eps, .. } | NoiseModel::Case2 { eps, .. } => *eps,
            NoiseModel::Case3 { schedule, .. } => schedule.max_lag(),
        }
    }
}

/// Raw, unvalidated parameters; [`build_problem`] turns them into a [`ProblemSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub horizon: f64,
    pub initial_cov: DMatrix<f64>,
    /// `E ξ`; zero unless set.
    pub initial_mean: Option<DVector<f64>>,
    pub noise: NoiseModel,
}

/// A validated LQG problem instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    params: ProblemParams,
    initial_mean: DVector<f64>,
    g_inv: DMatrix<f64>,
}

impl ProblemSpec {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.params.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.params.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.params.c
    }
    pub fn f(&self) -> &DMatrix<f64> {
        &self.params.f
    }
    pub fn g(&self) -> &DMatrix<f64> {
        &self.params.g
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.params.h
    }
    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }
    pub fn horizon(&self) -> f64 {
        self.params.horizon
    }
    pub fn initial_cov(&self) -> &DMatrix<f64> {
        &self.params.initial_cov
    }
    pub fn initial_mean(&self) -> &DVector<f64> {
        &self.initial_mean
    }
    pub fn noise(&self) -> &NoiseModel {
        &self.params.noise
    }
    pub fn case(&self) -> Case {
        self.params.noise.case()
    }
    pub fn eps(&self) -> f64 {
        self.params.noise.eps()
    }
    pub fn params(&self) -> &ProblemParams {
        &self.params
    }
    /// State, control and observation dimensions `(n, m, k)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.params.a.nrows(),
            self.params.b.ncols(),
            self.params.c.nrows(),
        )
    }
}

/// Validate parameters and enforce the symmetry / definiteness hypotheses.
pub fn build_problem(params: ProblemParams) -> Result<ProblemSpec> {
    let n = params.a.nrows();
    let m = params.b.ncols();
    let k = params.c.nrows();
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::DimensionMismatch(
            "empty state, control or observation space".into(),
        ));
    }
    check_square("A", &params.a, n)?;
    check_shape("B", &params.b, n, m)?;
    check_shape("C", &params.c, k, n)?;
    check_square("F", &params.f, n)?;
    check_square("G", &params.g, m)?;
    check_square("H", &params.h, n)?;
    check_square("initial_cov", &params.initial_cov, n)?;
    for (name, mat) in [
        ("A", &params.a),
        ("B", &params.b),
        ("C", &params.c),
        ("F", &params.f),
        ("G", &params.g),
        ("H", &params.h),
        ("initial_cov", &params.initial_cov),
    ] {
        if !all_finite(mat) {
            return Err(Error::NonFinite(name));
        }
    }
    let initial_mean = match &params.initial_mean {
        Some(v) if v.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "initial_mean has length {}, expected {n}",
                v.len()
            )))
        }
        Some(v) if !v.iter().all(|x| x.is_finite()) => {
            return Err(Error::NonFinite("initial_mean"))
        }
        Some(v) => v.clone(),
        None => DVector::zeros(n),
    };
    let horizon = params.horizon;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::BadHorizon(format!(
            "T = {horizon} must be positive and finite"
        )));
    }

    let mut p = params;
    p.f = checked_symmetric("F", &p.f)?;
    p.h = checked_symmetric("H", &p.h)?;
    p.g = checked_symmetric("G", &p.g)?;
    p.initial_cov = checked_symmetric("initial_cov", &p.initial_cov)?;
    for (name, mat) in [("F", &p.f), ("H", &p.h), ("initial_cov", &p.initial_cov)] {
        let tol = 1e-10 * inf_norm(mat);
        let lmin = min_eigenvalue(mat);
        if lmin < -tol {
            return Err(Error::NotPsd(name, lmin));
        }
    }
    let tol_pd = 1e-12 * inf_norm(&p.g);
    let gmin = min_eigenvalue(&p.g);
    if !(gmin > tol_pd && gmin > 0.0) {
        return Err(Error::NotPd("G", gmin));
    }
    let g_inv = p.g.clone().try_inverse().ok_or(Error::NotPd("G", gmin))?;

    match &mut p.noise {
        NoiseModel::Case1 { lambda, eps } => {
            check_eps(*eps, horizon)?;
            lambda.check_dims("Lambda", n, n)?;
        }
        NoiseModel::Case2 {
            lambda11,
            lambda22,
            lambda12,
            eps,
        } => {
            check_eps(*eps, horizon)?;
            lambda11.check_dims("Lambda11", n, n)?;
            lambda22.check_dims("Lambda22", k, k)?;
            lambda12.check_dims("Lambda12", n, k)?;
        }
        NoiseModel::Case3 { d, schedule } => {
            check_shape("D", d, n, k)?;
            if !all_finite(d) {
                return Err(Error::NonFinite("D"));
            }
            if (schedule.horizon - horizon).abs() > 1e-12 * horizon {
                return Err(Error::ScheduleOutOfRange(format!(
                    "schedule horizon {} differs from T = {horizon}",
                    schedule.horizon
                )));
            }
            schedule.validate()?;
        }
    }
    Ok(ProblemSpec {
        params: p,
        initial_mean,
        g_inv,
    })
}

fn check_eps(eps: f64, horizon: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= horizon) {
        return Err(Error::BadEps(format!(
            "eps = {eps} must lie in (0, T = {horizon}]"
        )));
    }
    Ok(())
}

fn checked_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let asym = asymmetry(m);
    if asym > 1e-10 * inf_norm(m) {
        return Err(Error::NotSymmetric(name, asym));
    }
    Ok(symmetrize(m))
}
