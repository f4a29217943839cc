//! State and observation noise: `Q`, `M`, `R`, `N`, `S` share the gain factor `CP + M₀` and
//! the brackets `X = QCᵀ + Λ¹² − S₀`, `Y = MCᵀ + Λ²² − N₀`.

use nalgebra::DMatrix;

use super::blocks::{axpy, mul_acc, mul_t_acc, transpose_into, BlockSquare};
use super::{
    advect_square, check_blow_up, column0, row0, CorrelationTable, FilterGains, FilterTables,
    ForwardCovarianceTable, FullCorrelation, KernelOptions, KernelTable, LagSlice,
};
use crate::error::{Error, Result};
use crate::linalg::MatTable;
use crate::noise::ProblemKernels;
use crate::problem::{Case, ProblemSpec, TimeGrid};
use crate::riccati::step_forward_p;

pub fn solve_kernels_case2_with(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    opts: KernelOptions,
) -> Result<FilterTables> {
    let ProblemKernels::Case2 {
        lambda11,
        lambda22,
        lambda12,
    } = ProblemKernels::new(spec, grid)
    else {
        return Err(Error::Unsupported(
            "the two-noise solver needs a state-and-observation noise problem".into(),
        ));
    };
    let (n, _, k) = spec.dims();
    let (steps, cells, dt) = (grid.n, grid.lag_steps + 1, grid.dt);
    let (a, c) = (spec.a(), spec.c());
    let a_t = a.transpose();

    let mut q = LagSlice::zeros(cells, n, n);
    let mut q_next = q.clone();
    let mut m = LagSlice::zeros(cells, k, n);
    let mut m_next = m.clone();
    let mut r = BlockSquare::zeros(cells, n, n);
    let mut r_next = r.clone();
    let mut nn = BlockSquare::zeros(cells, k, k);
    let mut nn_next = nn.clone();
    let mut s = BlockSquare::zeros(cells, n, k);
    let mut s_next = s.clone();
    let mut xs = LagSlice::zeros(cells, n, k);
    let mut ys = LagSlice::zeros(cells, k, k);
    let mut scratch_t = vec![0.0; n * k];

    let mut p_table = Vec::with_capacity(steps + 1);
    let mut q_table = MatTable::zeros(steps + 1, cells, n, n);
    let mut m_table = MatTable::zeros(steps + 1, cells, k, n);
    let mut r0 = MatTable::zeros(steps + 1, cells, n, n);
    let mut n0 = MatTable::zeros(steps + 1, cells, k, k);
    let mut s0 = MatTable::zeros(steps + 1, cells, n, k);
    let mut s_row0 = MatTable::zeros(steps + 1, cells, n, k);
    let mut full = opts.store_full.then(|| FullCorrelation {
        r: vec![r.clone()],
        n: vec![nn.clone()],
        s: vec![s.clone()],
    });
    let psi_dim = n + k;
    let mut psi_gain = MatTable::zeros(steps, cells, psi_dim, k);
    let mut state_gain = Vec::with_capacity(steps);

    let mut p = spec.initial_cov().clone();
    p_table.push(p.clone());
    for i in 0..steps {
        for l in 0..cells {
            let x = xs.cell_mut(l);
            x.copy_from_slice(lambda12.values.block(i, l));
            axpy(x, s.block(l, 0), -1.0);
            mul_t_acc(x, q.cell(l), c.as_slice(), n, n, k, 1.0);
            let y = ys.cell_mut(l);
            y.copy_from_slice(lambda22.values.block(i, l));
            axpy(y, nn.block(l, 0), -1.0);
            mul_t_acc(y, m.cell(l), c.as_slice(), k, n, k, 1.0);
            let g = psi_gain.block_mut(i, l);
            for col in 0..k {
                g[col * psi_dim..col * psi_dim + n]
                    .copy_from_slice(&xs.cell(l)[col * n..(col + 1) * n]);
                g[col * psi_dim + n..(col + 1) * psi_dim]
                    .copy_from_slice(&ys.cell(l)[col * k..(col + 1) * k]);
            }
        }
        let m0 = DMatrix::from_column_slice(k, n, m.cell(0));
        let gain = c * &p + &m0;
        state_gain.push(gain.transpose());

        q_next.cell_mut(cells - 1).iter_mut().for_each(|v| *v = 0.0);
        m_next.cell_mut(cells - 1).iter_mut().for_each(|v| *v = 0.0);
        for l in 1..cells {
            let dq = q_next.cell_mut(l - 1);
            dq.copy_from_slice(q.cell(l));
            mul_acc(dq, q.cell(l), a_t.as_slice(), n, n, n, dt);
            axpy(dq, lambda11.values.block(i, l), dt);
            axpy(dq, r.block(l, 0), -dt);
            mul_acc(dq, xs.cell(l), gain.as_slice(), n, k, n, -dt);

            let dm = m_next.cell_mut(l - 1);
            dm.copy_from_slice(m.cell(l));
            mul_acc(dm, m.cell(l), a_t.as_slice(), k, n, n, dt);
            transpose_into(&mut scratch_t, lambda12.values.block(i, l), n, k);
            axpy(dm, &scratch_t, dt);
            transpose_into(&mut scratch_t, s.block(0, l), n, k);
            axpy(dm, &scratch_t, -dt);
            mul_acc(dm, ys.cell(l), gain.as_slice(), k, k, n, -dt);
        }
        advect_square(&r, &mut r_next, &xs, &xs, k, dt);
        advect_square(&nn, &mut nn_next, &ys, &ys, k, dt);
        advect_square(&s, &mut s_next, &xs, &ys, k, dt);

        let q0 = DMatrix::from_column_slice(n, n, q.cell(0));
        p = step_forward_p(&p, a, c, &q0, Some(&m0), dt, grid.t(i))?;
        std::mem::swap(&mut q, &mut q_next);
        std::mem::swap(&mut m, &mut m_next);
        std::mem::swap(&mut r, &mut r_next);
        std::mem::swap(&mut nn, &mut nn_next);
        std::mem::swap(&mut s, &mut s_next);
        check_blow_up(&q.data, grid.t(i + 1))?;
        check_blow_up(&m.data, grid.t(i + 1))?;

        p_table.push(p.clone());
        q.store(&mut q_table, i + 1);
        m.store(&mut m_table, i + 1);
        column0(&r, &mut r0, i + 1);
        column0(&nn, &mut n0, i + 1);
        column0(&s, &mut s0, i + 1);
        row0(&s, &mut s_row0, i + 1);
        if let Some(f) = full.as_mut() {
            f.r.push(r.clone());
            f.n.push(nn.clone());
            f.s.push(s.clone());
        }
    }

    Ok(FilterTables {
        case: Case::Two,
        dt,
        lag_steps: grid.lag_steps,
        p: ForwardCovarianceTable { p: p_table },
        kernels: KernelTable {
            q: q_table,
            m: Some(m_table),
        },
        corr: CorrelationTable {
            r0,
            n0: Some(n0),
            s0: Some(s0),
            s_row0: Some(s_row0),
            full,
        },
        gains: FilterGains {
            psi_dim,
            psi_gain,
            state_gain,
            injection: None,
        },
    })
}
