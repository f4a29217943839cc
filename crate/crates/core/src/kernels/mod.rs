//! Filter kernels: characteristic-aligned transport solves for `Q`, `R` (Cases 1 and 3) and
//! `Q`, `M`, `R`, `N`, `S` (Case 2), co-integrated with the filter covariance `P`.
//!
//! Lag cell `l ∈ 0..=L` holds the value at `θ = −l·dt`. One time step shifts every cell by one
//! (`new[l] = old[l+1] + dt·source(old, l+1)`) and opens a zero cell at `l = L`.

pub mod blocks;
mod case1;
mod case2;
mod case3;
mod stats;

use nalgebra::DMatrix;

pub use blocks::BlockSquare;
pub use case1::solve_kernels_case1_with;
pub use case2::solve_kernels_case2_with;
pub use case3::solve_kernels_case3_with;
pub use stats::{derive_noise_stats, DerivedNoiseStats};

use crate::error::{Error, Result};
use crate::linalg::MatTable;
use crate::problem::{Case, ProblemSpec, TimeGrid};

const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelOptions {
    /// Keep every `(L+1)²` correlation slice, not only the zero-lag column.
    pub store_full: bool,
}

/// `P_i`, `i ∈ 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCovarianceTable {
    pub p: Vec<DMatrix<f64>>,
}

/// `Q[i][l]` (`n×n`) and, in Case 2, `M[i][l]` (`k×n`); `(N+1) × (L+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub q: MatTable,
    pub m: Option<MatTable>,
}

/// Correlation kernels. The zero second-lag slices are always kept; full slices on request.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    /// `R[i][l][0]`.
    pub r0: MatTable,
    /// `N[i][l][0]` (Case 2).
    pub n0: Option<MatTable>,
    /// `S[i][l][0]` (Case 2).
    pub s0: Option<MatTable>,
    /// `S[i][0][l]` (Case 2).
    pub s_row0: Option<MatTable>,
    pub full: Option<FullCorrelation>,
}

/// Full band slices per time node; `n` and `s` are empty outside Case 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCorrelation {
    pub r: Vec<BlockSquare>,
    pub n: Vec<BlockSquare>,
    pub s: Vec<BlockSquare>,
}

/// Per-step gains of the discrete filter, `i ∈ 0..N`.
///
/// With innovation `z̄_i`, the estimator moves by `state_gain[i]·z̄_i` and the lag cells by
/// `ψ_{i+1}[l] = ψ_i[l+1] + psi_gain[i][l+1]·z̄_i`. In Case 3 the cells first receive
/// `injection[i][l]·z̄_i / dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGains {
    /// `n` (Cases 1 and 3) or `n + k` (Case 2, `[ψ¹; ψ²]`).
    pub psi_dim: usize,
    pub psi_gain: MatTable,
    pub state_gain: Vec<DMatrix<f64>>,
    pub injection: Option<MatTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTables {
    pub case: Case,
    pub dt: f64,
    pub lag_steps: usize,
    pub p: ForwardCovarianceTable,
    pub kernels: KernelTable,
    pub corr: CorrelationTable,
    pub gains: FilterGains,
}

impl FilterTables {
    pub fn steps(&self) -> usize {
        self.p.p.len() - 1
    }
}

pub fn solve_kernels_case1(spec: &ProblemSpec, grid: &TimeGrid) -> Result<FilterTables> {
    solve_kernels_case1_with(spec, grid, KernelOptions::default())
}

pub fn solve_kernels_case2(spec: &ProblemSpec, grid: &TimeGrid) -> Result<FilterTables> {
    solve_kernels_case2_with(spec, grid, KernelOptions::default())
}

pub fn solve_kernels_case3(spec: &ProblemSpec, grid: &TimeGrid) -> Result<FilterTables> {
    solve_kernels_case3_with(spec, grid, KernelOptions::default())
}

/// Dispatch on the noise model.
pub fn solve_filter(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    opts: KernelOptions,
) -> Result<FilterTables> {
    match spec.case() {
        Case::One => solve_kernels_case1_with(spec, grid, opts),
        Case::Two => solve_kernels_case2_with(spec, grid, opts),
        Case::Three => solve_kernels_case3_with(spec, grid, opts),
    }
}

fn check_blow_up(values: &[f64], t: f64) -> Result<()> {
    let norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(norm <= BLOW_UP) {
        return Err(Error::BlowUp { t, norm });
    }
    Ok(())
}

/// Double-buffered slice of lag cells `0..=L`, each `rows × cols`.
#[derive(Debug, Clone)]
struct LagSlice {
    cells: usize,
    len: usize,
    data: Vec<f64>,
}

impl LagSlice {
    fn zeros(cells: usize, rows: usize, cols: usize) -> Self {
        Self {
            cells,
            len: rows * cols,
            data: vec![0.0; cells * rows * cols],
        }
    }

    #[inline]
    fn cell(&self, l: usize) -> &[f64] {
        &self.data[l * self.len..(l + 1) * self.len]
    }

    #[inline]
    fn cell_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.len..(l + 1) * self.len]
    }

    fn store(&self, table: &mut MatTable, i: usize) {
        for l in 0..self.cells {
            table.block_mut(i, l).copy_from_slice(self.cell(l));
        }
    }
}

/// `new[l-1][m-1] = old[l][m] + dt·X_l·Y_mᵀ` for `l, m ∈ 1..=L`; row and column `L` reset.
fn advect_square(
    old: &BlockSquare,
    new: &mut BlockSquare,
    xs: &LagSlice,
    ys: &LagSlice,
    inner: usize,
    dt: f64,
) {
    let (side, rows, cols) = (old.side, old.rows, old.cols);
    new.fill_zero();
    for l in 1..side {
        for m in 1..side {
            let dst = new.block_mut(l - 1, m - 1);
            dst.copy_from_slice(old.block(l, m));
            blocks::mul_t_acc(dst, xs.cell(l), ys.cell(m), rows, inner, cols, dt);
        }
    }
}

fn column0(square: &BlockSquare, table: &mut MatTable, i: usize) {
    for l in 0..square.side {
        table.block_mut(i, l).copy_from_slice(square.block(l, 0));
    }
}

fn row0(square: &BlockSquare, table: &mut MatTable, i: usize) {
    for l in 0..square.side {
        table.block_mut(i, l).copy_from_slice(square.block(0, l));
    }
}

#[cfg(test)]
mod tests;
