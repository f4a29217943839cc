//! State-noise case: `Q`, `R` with source `QAᵀ + Λ − R₀ − QCᵀCP` and `R' = (QCᵀ)(QCᵀ)ᵀ`.

use nalgebra::DMatrix;

use super::blocks::{axpy, mul_acc, mul_t_acc, BlockSquare};
use super::{
    advect_square, check_blow_up, column0, CorrelationTable, FilterGains, FilterTables,
    ForwardCovarianceTable, FullCorrelation, KernelOptions, KernelTable, LagSlice,
};
use crate::error::{Error, Result};
use crate::linalg::MatTable;
use crate::noise::{CovarianceKernel, ProblemKernels};
use crate::problem::{Case, ProblemSpec, TimeGrid};
use crate::riccati::step_forward_p;

pub fn solve_kernels_case1_with(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    opts: KernelOptions,
) -> Result<FilterTables> {
    let ProblemKernels::Case1 { lambda } = ProblemKernels::new(spec, grid) else {
        return Err(Error::Unsupported(
            "the state-noise solver needs a state-noise problem".into(),
        ));
    };
    solve_with_kernel(spec, grid, &lambda, opts)
}

pub(crate) fn solve_with_kernel(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    lambda: &CovarianceKernel,
    opts: KernelOptions,
) -> Result<FilterTables> {
    let (n, _, k) = spec.dims();
    let (steps, cells, dt) = (grid.n, grid.lag_steps + 1, grid.dt);
    if lambda.grid_dims() != (steps, grid.lag_steps) {
        return Err(Error::GridMismatch(
            "kernel table does not match the grid".into(),
        ));
    }
    let (a, c) = (spec.a(), spec.c());
    let a_t = a.transpose();

    let mut q = LagSlice::zeros(cells, n, n);
    let mut q_next = q.clone();
    let mut r = BlockSquare::zeros(cells, n, n);
    let mut r_next = r.clone();
    let mut xs = LagSlice::zeros(cells, n, k);

    let mut p_table = Vec::with_capacity(steps + 1);
    let mut q_table = MatTable::zeros(steps + 1, cells, n, n);
    let mut r0 = MatTable::zeros(steps + 1, cells, n, n);
    let mut full = opts.store_full.then(|| vec![r.clone()]);
    let mut psi_gain = MatTable::zeros(steps, cells, n, k);
    let mut state_gain = Vec::with_capacity(steps);

    let mut p = spec.initial_cov().clone();
    p_table.push(p.clone());
    for i in 0..steps {
        let cp = c * &p;
        for l in 0..cells {
            let x = xs.cell_mut(l);
            x.iter_mut().for_each(|v| *v = 0.0);
            mul_t_acc(x, q.cell(l), c.as_slice(), n, n, k, 1.0);
        }
        for l in 0..cells {
            psi_gain.block_mut(i, l).copy_from_slice(xs.cell(l));
        }
        state_gain.push(&p * c.transpose());

        q_next.cell_mut(cells - 1).iter_mut().for_each(|v| *v = 0.0);
        for l in 1..cells {
            let dst = q_next.cell_mut(l - 1);
            dst.copy_from_slice(q.cell(l));
            mul_acc(dst, q.cell(l), a_t.as_slice(), n, n, n, dt);
            axpy(dst, lambda.values.block(i, l), dt);
            axpy(dst, r.block(l, 0), -dt);
            mul_acc(dst, xs.cell(l), cp.as_slice(), n, k, n, -dt);
        }
        advect_square(&r, &mut r_next, &xs, &xs, k, dt);

        let q0 = DMatrix::from_column_slice(n, n, q.cell(0));
        p = step_forward_p(&p, a, c, &q0, None, dt, grid.t(i))?;
        std::mem::swap(&mut q, &mut q_next);
        std::mem::swap(&mut r, &mut r_next);
        check_blow_up(&q.data, grid.t(i + 1))?;

        p_table.push(p.clone());
        q.store(&mut q_table, i + 1);
        column0(&r, &mut r0, i + 1);
        if let Some(f) = full.as_mut() {
            f.push(r.clone());
        }
    }

    Ok(FilterTables {
        case: Case::One,
        dt,
        lag_steps: grid.lag_steps,
        p: ForwardCovarianceTable { p: p_table },
        kernels: KernelTable {
            q: q_table,
            m: None,
        },
        corr: CorrelationTable {
            r0,
            n0: None,
            s0: None,
            s_row0: None,
            full: full.map(|r| FullCorrelation {
                r,
                n: Vec::new(),
                s: Vec::new(),
            }),
        },
        gains: FilterGains {
            psi_dim: n,
            psi_gain,
            state_gain,
            injection: None,
        },
    })
}
