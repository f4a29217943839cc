use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, MatTable};
use crate::problem::{KernelShape, TimeGrid};

/// Which covariance a kernel table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `cov(φ_{t+θ}, φ_t)` of a single noise.
    Auto,
    /// `cov(φ¹_{t+θ}, φ²_t)`; cannot be factored on its own.
    Cross,
    /// Joint kernel of `[φ¹; φ²]`.
    Stacked,
}

/// Λ on the grid: `values[i][l] = cov(φ_{t_i + l·dt}, φ_{t_i})`, `i ∈ 0..=N`, `l ∈ 0..=L`.
///
/// Row `i = 0` is zero because `φ_0 = 0`; column `l = L` is zero by compact support.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceKernel {
    pub values: MatTable,
    pub kind: KernelKind,
    pub stationary: bool,
}

impl CovarianceKernel {
    pub fn zero(grid: &TimeGrid, rows: usize, cols: usize, kind: KernelKind) -> Self {
        Self {
            values: MatTable::zeros(grid.n + 1, grid.lag_steps + 1, rows, cols),
            kind,
            stationary: true,
        }
    }

    pub fn from_shape(
        shape: &KernelShape,
        grid: &TimeGrid,
        rows: usize,
        cols: usize,
        kind: KernelKind,
    ) -> Self {
        let mut out = Self::zero(grid, rows, cols, kind);
        out.stationary = shape.is_stationary();
        if shape.is_zero() {
            return out;
        }
        for i in 1..=grid.n {
            for l in 0..grid.lag_steps {
                let m = shape.eval(grid.t(i), l as f64 * grid.dt, grid.eps, rows, cols);
                out.values.set(i, l, &m);
            }
        }
        out
    }

    /// Joint kernel of `[φ¹; φ²]`; the lower-left block is `Λ¹²ᵀ` at the same lag.
    pub fn stacked(
        l11: &CovarianceKernel,
        l22: &CovarianceKernel,
        l12: &CovarianceKernel,
    ) -> Result<Self> {
        let (n, _) = l11.values.shape();
        let (k, _) = l22.values.shape();
        if l12.values.shape() != (n, k)
            || l11.values.dims() != l22.values.dims()
            || l11.values.dims() != l12.values.dims()
        {
            return Err(Error::DimensionMismatch(
                "stacked kernel blocks disagree".into(),
            ));
        }
        let (n_i, n_l) = l11.values.dims();
        let d = n + k;
        let mut values = MatTable::zeros(n_i, n_l, d, d);
        for i in 0..n_i {
            for l in 0..n_l {
                let mut blk = values.view_mut(i, l);
                blk.view_mut((0, 0), (n, n))
                    .copy_from(&l11.values.view(i, l));
                blk.view_mut((n, n), (k, k))
                    .copy_from(&l22.values.view(i, l));
                blk.view_mut((0, n), (n, k))
                    .copy_from(&l12.values.view(i, l));
                blk.view_mut((n, 0), (k, n))
                    .copy_from(&l12.values.view(i, l).transpose());
            }
        }
        Ok(Self {
            values,
            kind: KernelKind::Stacked,
            stationary: l11.stationary && l22.stationary && l12.stationary,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// `(N, L)` of the underlying grid.
    pub fn grid_dims(&self) -> (usize, usize) {
        let (a, b) = self.values.dims();
        (a - 1, b - 1)
    }

    pub fn at(&self, i: usize, l: usize) -> DMatrix<f64> {
        self.values.get(i, l)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.max_abs()
    }

    pub fn is_zero(&self) -> bool {
        self.values.as_slice().iter().all(|v| *v == 0.0)
    }

    /// `‖Λ(t, 0) − Λ(t, 0)ᵀ‖` over the grid; auto kernels must be symmetric at lag zero.
    pub fn lag_zero_asymmetry(&self) -> f64 {
        let (n, _) = self.grid_dims();
        (0..=n)
            .map(|i| asymmetry(&self.values.get(i, 0)))
            .fold(0.0, f64::max)
    }
}
