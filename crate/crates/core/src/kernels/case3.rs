//! Pointwise-delayed noise: the observation increment of step `i` enters the lag cells `l` with
//! weight `a_l = D·ω(i, i+l)`, where the moving boundary sits. The stored slices at node `i` are
//! the post-injection ones, so a fixed lag shows `Q[i][L] = −DCP_i`.

use nalgebra::DMatrix;

use super::blocks::{axpy, mul_acc, mul_t_acc, transpose_into, BlockSquare};
use super::{
    advect_square, check_blow_up, column0, CorrelationTable, FilterGains, FilterTables,
    ForwardCovarianceTable, FullCorrelation, KernelOptions, KernelTable, LagSlice,
};
use crate::error::{Error, Result};
use crate::linalg::MatTable;
use crate::noise::{grid_schedule, DelayWeights};
use crate::problem::{Case, NoiseModel, ProblemSpec, TimeGrid};
use crate::riccati::step_forward_p;

pub fn solve_kernels_case3_with(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    opts: KernelOptions,
) -> Result<FilterTables> {
    let NoiseModel::Case3 { d, schedule } = spec.noise() else {
        return Err(Error::Unsupported(
            "the delayed-noise solver needs a delayed-noise problem".into(),
        ));
    };
    let weights = DelayWeights::new(&grid_schedule(schedule, grid), grid)?;
    solve_with_weights(spec, grid, d, |i, l| weights.get(i, l), opts)
}

/// Core loop; `omega(i, l)` is the share of observation cell `i` read by plant step `i + l`.
pub(crate) fn solve_with_weights(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    d: &DMatrix<f64>,
    omega: impl Fn(usize, usize) -> f64,
    opts: KernelOptions,
) -> Result<FilterTables> {
    let (n, _, k) = spec.dims();
    let (steps, cells, dt) = (grid.n, grid.lag_steps + 1, grid.dt);
    let (a, c) = (spec.a(), spec.c());
    let a_t = a.transpose();
    // Cᵀ Dᵀ, so that Q_l Cᵀ Dᵀ is one product
    let cd_t = c.transpose() * d.transpose();

    let mut q = LagSlice::zeros(cells, n, n);
    let mut q_next = q.clone();
    let mut r = BlockSquare::zeros(cells, n, n);
    let mut r_next = r.clone();
    let mut xs = LagSlice::zeros(cells, n, k);
    let mut qcd = LagSlice::zeros(cells, n, n);

    let mut p_table = Vec::with_capacity(steps + 1);
    let mut q_table = MatTable::zeros(steps + 1, cells, n, n);
    let mut r0 = MatTable::zeros(steps + 1, cells, n, n);
    let mut full = opts.store_full.then(Vec::new);
    let mut psi_gain = MatTable::zeros(steps, cells, n, k);
    let mut injection = MatTable::zeros(steps, cells, n, k);
    let mut state_gain = Vec::with_capacity(steps);

    let mut p = spec.initial_cov().clone();
    p_table.push(p.clone());
    for i in 0..steps {
        let w: Vec<f64> = (0..cells).map(|l| omega(i, l)).collect();
        inject(&mut q, &mut r, &mut qcd, &w, &(c * &p), d, &cd_t);
        for l in 0..cells {
            injection.view_mut(i, l).copy_from(&(d * w[l]));
        }
        q.store(&mut q_table, i);
        column0(&r, &mut r0, i);
        if let Some(f) = full.as_mut() {
            f.push(r.clone());
        }

        let cp = c * &p;
        for l in 0..cells {
            let x = xs.cell_mut(l);
            x.iter_mut().for_each(|v| *v = 0.0);
            mul_t_acc(x, q.cell(l), c.as_slice(), n, n, k, 1.0);
            psi_gain.block_mut(i, l).copy_from_slice(x);
        }
        state_gain.push(&p * c.transpose());

        q_next.cell_mut(cells - 1).iter_mut().for_each(|v| *v = 0.0);
        for l in 1..cells {
            let dst = q_next.cell_mut(l - 1);
            dst.copy_from_slice(q.cell(l));
            mul_acc(dst, q.cell(l), a_t.as_slice(), n, n, n, dt);
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
    }
    let w: Vec<f64> = (0..cells).map(|l| omega(steps, l)).collect();
    inject(&mut q, &mut r, &mut qcd, &w, &(c * &p), d, &cd_t);
    q.store(&mut q_table, steps);
    column0(&r, &mut r0, steps);
    if let Some(f) = full.as_mut() {
        f.push(r.clone());
    }

    Ok(FilterTables {
        case: Case::Three,
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
            injection: Some(injection),
        },
    })
}

/// Boundary injection at one node: `R[l][m] += w_m·Q_l CᵀDᵀ + w_l·(Q_m CᵀDᵀ)ᵀ − w_l w_m·DCPCᵀDᵀ`
/// from the pre-injection `Q`, then `Q_l −= w_l·DCP`.
fn inject(
    q: &mut LagSlice,
    r: &mut BlockSquare,
    qcd: &mut LagSlice,
    w: &[f64],
    cp: &DMatrix<f64>,
    d: &DMatrix<f64>,
    cd_t: &DMatrix<f64>,
) {
    let cells = w.len();
    let n = cp.ncols();
    let active: Vec<usize> = (0..cells).filter(|&l| w[l] != 0.0).collect();
    if active.is_empty() {
        return;
    }
    let dcp = d * cp;
    let boundary = &dcp * cd_t;
    for l in 0..cells {
        let blk = qcd.cell_mut(l);
        blk.iter_mut().for_each(|v| *v = 0.0);
        mul_acc(blk, q.cell(l), cd_t.as_slice(), n, n, n, 1.0);
    }
    for &m in &active {
        for l in 0..cells {
            axpy(r.block_mut(l, m), qcd.cell(l), w[m]);
        }
    }
    let mut qcd_t = vec![0.0; n * n];
    for &l in &active {
        for m in 0..cells {
            transpose_into(&mut qcd_t, qcd.cell(m), n, n);
            axpy(r.block_mut(l, m), &qcd_t, w[l]);
        }
        for &m in &active {
            axpy(r.block_mut(l, m), boundary.as_slice(), -w[l] * w[m]);
        }
    }
    for &l in &active {
        axpy(q.cell_mut(l), dcp.as_slice(), -w[l]);
    }
}
