use std::ops::Range;

use nalgebra::DMatrix;

use super::kernel::{CovarianceKernel, KernelKind};
use crate::error::{Error, Result};
use crate::linalg::{BandedLower, MatTable};
use crate::problem::TimeGrid;

/// How a relaxing function was obtained from (or supplied alongside) its kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorVariant {
    /// Banded Cholesky of the Gram matrix: `φ_i` reads the cells `i−L+1 ..= i`.
    LowerFactor,
    /// Cholesky of the time-reversed Gram matrix: `φ_i` reads the cells `i ..= i+L−1`.
    UpperFactor,
    /// Supplied in closed form, evaluated at the nodes.
    Analytic,
}

impl FactorVariant {
    pub fn is_causal(self) -> bool {
        !matches!(self, FactorVariant::UpperFactor)
    }
}

/// Φ on the grid. `values[i][m]` multiplies the Wiener increment of cell `i − m` (cell `i + m` for
/// the upper factor); cell `j` covers `(t_{j−1}, t_j]` and only cells `1..=N` exist.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxingFunction {
    pub variant: FactorVariant,
    pub values: MatTable,
    pub dt: f64,
    /// Observation rows of a stacked factor have been windowed to vanish at `θ = −ε`.
    pub smooth_obs: bool,
}

impl RelaxingFunction {
    /// `(dim φ, dim w)`.
    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn steps(&self) -> usize {
        self.values.dims().0 - 1
    }

    pub fn lag_steps(&self) -> usize {
        self.values.dims().1 - 1
    }

    pub fn zero(grid: &TimeGrid, dim: usize, dim_w: usize, variant: FactorVariant) -> Self {
        Self {
            variant,
            values: MatTable::zeros(grid.n + 1, grid.lag_steps + 1, dim, dim_w),
            dt: grid.dt,
            smooth_obs: false,
        }
    }

    /// Closed-form Φ: node `(i, m)` holds `phi(t_i, −m·dt)`.
    pub fn analytic(
        grid: &TimeGrid,
        dim: usize,
        dim_w: usize,
        phi: impl Fn(f64, f64) -> DMatrix<f64>,
    ) -> Self {
        let mut out = Self::zero(grid, dim, dim_w, FactorVariant::Analytic);
        for i in 1..=grid.n {
            for m in 0..=grid.lag_steps {
                out.values.set(i, m, &phi(grid.t(i), -(m as f64) * grid.dt));
            }
        }
        out
    }

    /// Cell read by node `m` of `φ_i`, if it exists.
    #[inline]
    pub fn cell(&self, i: usize, m: usize) -> Option<usize> {
        let n = self.steps();
        if m >= self.lag_steps() {
            return None;
        }
        if self.variant.is_causal() {
            (m < i).then(|| i - m)
        } else {
            (i >= 1 && i + m <= n).then_some(i + m)
        }
    }

    /// Λ implied by Φ: `dt·Σ_cells Φ_{i+l}Φ_iᵀ` wherever both times lie in the horizon.
    pub fn implied_kernel(&self) -> CovarianceKernel {
        let (dim, dim_w) = self.shape();
        let (n, lmax) = (self.steps(), self.lag_steps());
        let kind = KernelKind::Auto;
        let mut values = MatTable::zeros(n + 1, lmax + 1, dim, dim);
        for i in 1..=n {
            for l in 0..lmax.min(n - i + 1) {
                let mut acc = DMatrix::<f64>::zeros(dim, dim);
                for m in 0..lmax {
                    let Some(c) = self.cell(i, m) else { continue };
                    // node of φ_{i+l} reading the same cell
                    let m2 = if self.variant.is_causal() {
                        i + l - c
                    } else {
                        match c.checked_sub(i + l) {
                            Some(v) => v,
                            None => continue,
                        }
                    };
                    if self.cell(i + l, m2) != Some(c) {
                        continue;
                    }
                    acc.gemm(
                        self.dt,
                        &self.values.view(i + l, m2),
                        &self.values.view(i, m).transpose(),
                        1.0,
                    );
                }
                values.set(i, l, &acc);
            }
        }
        let _ = dim_w;
        CovarianceKernel {
            values,
            kind,
            stationary: false,
        }
    }

    /// Largest `|Λ̂ − Λ|` over grid points whose two times lie in the horizon.
    pub fn gram_error(&self, kernel: &CovarianceKernel) -> f64 {
        let implied = self.implied_kernel();
        let (n, lmax) = (self.steps(), self.lag_steps());
        let mut err: f64 = 0.0;
        for i in 1..=n {
            for l in 0..=lmax.min(n - i) {
                let d = &implied.values.view(i, l) - &kernel.values.view(i, l);
                err = err.max(d.amax());
            }
        }
        err
    }
}

/// Factor an auto (or stacked) kernel into a relaxing function with identical discrete Gram.
pub fn factor_covariance(
    kernel: &CovarianceKernel,
    grid: &TimeGrid,
    variant: FactorVariant,
) -> Result<RelaxingFunction> {
    if kernel.kind == KernelKind::Cross {
        return Err(Error::UnsupportedCross);
    }
    let (d, d2) = kernel.shape();
    if d != d2 {
        return Err(Error::DimensionMismatch(format!(
            "auto kernel must be square, got {d}x{d2}"
        )));
    }
    if kernel.grid_dims() != (grid.n, grid.lag_steps) {
        return Err(Error::GridMismatch("kernel table and grid disagree".into()));
    }
    if variant == FactorVariant::Analytic {
        return Err(Error::Unsupported(
            "analytic relaxing functions are supplied, not factored".into(),
        ));
    }
    let mut out = RelaxingFunction::zero(grid, d, d, variant);
    if kernel.is_zero() {
        return Ok(out);
    }
    let scale = kernel.max_abs();
    let asym = kernel.lag_zero_asymmetry();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric("Lambda(t, 0)", asym));
    }
    let (n, lags) = (grid.n, grid.lag_steps);
    let size = n * d;
    let bw = lags * d - 1;
    let mut gram = BandedLower::zeros(size, bw);
    for i in 1..=n {
        for l in 0..lags.min(n - i + 1) {
            let blk = kernel.values.view(i, l);
            let (r0, c0) = ((i + l - 1) * d, (i - 1) * d);
            for a in 0..d {
                for b in 0..d {
                    if l > 0 || a >= b {
                        gram.set(r0 + a, c0 + b, blk[(a, b)]);
                    }
                }
            }
        }
    }
    let tol = 1e-8 * scale;
    let sdt = grid.dt.sqrt();
    match variant {
        FactorVariant::LowerFactor => {
            let chol = gram.cholesky(tol).map_err(Error::KernelNotPsd)?;
            for i in 1..=n {
                for m in 0..lags.min(i) {
                    let (r0, c0) = ((i - 1) * d, (i - 1 - m) * d);
                    let blk = DMatrix::from_fn(d, d, |a, b| chol.get(r0 + a, c0 + b) / sdt);
                    out.values.set(i, m, &blk);
                }
            }
        }
        FactorVariant::UpperFactor => {
            let chol = gram.reversed().cholesky(tol).map_err(Error::KernelNotPsd)?;
            let last = size - 1;
            for i in 1..=n {
                for m in 0..lags.min(n - i + 1) {
                    let (r0, c0) = ((i - 1) * d, (i - 1 + m) * d);
                    let blk = DMatrix::from_fn(d, d, |a, b| {
                        chol.get(last - (r0 + a), last - (c0 + b)) / sdt
                    });
                    out.values.set(i, m, &blk);
                }
            }
        }
        FactorVariant::Analytic => unreachable!(),
    }
    let err = out.gram_error(kernel);
    if err > 1e-8 * scale {
        return Err(Error::FactorizationMismatch(err));
    }
    Ok(out)
}

/// C¹ (or linear) window on `[−ε, 0]` vanishing at `θ = −ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// `(θ + ε)/ε`.
    Linear,
    /// Smoothstep ramp of the given width starting at `−ε`; 1 beyond it.
    Smoothstep { width: f64 },
}

impl Window {
    pub fn eval(self, theta: f64, eps: f64) -> f64 {
        let s = match self {
            Window::Linear => (theta + eps) / eps,
            Window::Smoothstep { width } => (theta + eps) / width,
        }
        .clamp(0.0, 1.0);
        match self {
            Window::Linear => s,
            Window::Smoothstep { .. } => s * s * (3.0 - 2.0 * s),
        }
    }
}

/// A windowed factor with the kernel it now implies.
#[derive(Debug, Clone)]
pub struct SmoothedFactor {
    pub phi: RelaxingFunction,
    pub implied: CovarianceKernel,
    /// `‖Λ_new − Λ_old‖∞` over the grid.
    pub perturbation: f64,
}

/// Multiply the observation rows of Φ by `window` so that they vanish at `θ = −ε`.
pub fn smooth_obs_factor(
    phi: &RelaxingFunction,
    obs_rows: Range<usize>,
    window: Window,
) -> SmoothedFactor {
    let before = phi.implied_kernel();
    let mut out = phi.clone();
    let (n, lags) = (phi.steps(), phi.lag_steps());
    let eps = lags as f64 * phi.dt;
    let (_, dim_w) = phi.shape();
    for i in 0..=n {
        for m in 0..=lags {
            let w = if m == lags {
                0.0
            } else {
                window.eval(-(m as f64) * phi.dt, eps)
            };
            let mut blk = out.values.view_mut(i, m);
            for r in obs_rows.clone() {
                for c in 0..dim_w {
                    blk[(r, c)] *= w;
                }
            }
        }
    }
    out.smooth_obs = true;
    let implied = out.implied_kernel();
    let perturbation = implied.values.max_abs_diff(&before.values);
    SmoothedFactor {
        phi: out,
        implied,
        perturbation,
    }
}
