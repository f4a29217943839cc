//! Relaxing functions and covariances of the filter-generated noises, read off the solved tables.

use nalgebra::DMatrix;

use super::FilterTables;
use crate::linalg::MatTable;
use crate::noise::ProblemKernels;
use crate::problem::Case;

/// All tables are `(N+1) × (L+1)`; entry `[i][l]` belongs to time `t_i` and lag `l·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedNoiseStats {
    pub case: Case,
    /// Relaxing function of `ψ_{t,0}` (of `ψ¹_{t,0}` in Case 2), filter index convention:
    /// the gain that carried the innovation at `t_{i−l}` into `ψ_{t_i,0}`.
    pub psi: MatTable,
    /// Case 2: relaxing function of `ψ²_{t,0}`, same convention.
    pub psi2: Option<MatTable>,
    /// Case 2: `Ψ¹` with the cross kernel read at `(t_i + l·dt, l)` and `S` at `(t_i, l)`.
    pub psi1_shifted: Option<MatTable>,
    pub psi2_shifted: Option<MatTable>,
    /// Autocovariance of `ψ_{t,0}` (of `ψ¹_{t,0}` in Case 2): `R[i][l][0]`.
    pub sigma: MatTable,
    pub sigma22: Option<MatTable>,
    pub sigma12: Option<MatTable>,
}

pub fn derive_noise_stats(
    tables: &FilterTables,
    kernels: &ProblemKernels,
    c: &DMatrix<f64>,
) -> DerivedNoiseStats {
    let q = &tables.kernels.q;
    let (rows_i, cells) = q.dims();
    let last = rows_i - 1;
    let (n, _) = q.shape();
    let k = c.nrows();
    let back = |table: &MatTable, i: usize, l: usize| {
        i.checked_sub(l).map(|j| table.get(j, l) * c.transpose())
    };

    let mut psi = MatTable::zeros(rows_i, cells, n, k);
    for i in 0..rows_i {
        for l in 0..cells {
            if let Some(v) = back(q, i, l) {
                psi.set(i, l, &v);
            }
        }
    }
    let mut stats = DerivedNoiseStats {
        case: tables.case,
        psi,
        psi2: None,
        psi1_shifted: None,
        psi2_shifted: None,
        sigma: tables.corr.r0.clone(),
        sigma22: tables.corr.n0.clone(),
        sigma12: tables.corr.s0.clone(),
    };

    if let (
        ProblemKernels::Case2 {
            lambda22, lambda12, ..
        },
        Some(m),
        Some(n0),
        Some(s0),
    ) = (
        kernels,
        tables.kernels.m.as_ref(),
        tables.corr.n0.as_ref(),
        tables.corr.s0.as_ref(),
    ) {
        let mut psi2 = MatTable::zeros(rows_i, cells, k, k);
        let mut psi1_shifted = MatTable::zeros(rows_i, cells, n, k);
        let mut psi2_shifted = MatTable::zeros(rows_i, cells, k, k);
        for i in 0..rows_i {
            for l in 0..cells {
                let ahead = (i + l).min(last);
                let q_part = back(q, i, l).unwrap_or_else(|| DMatrix::zeros(n, k));
                let m_part = back(m, i, l).unwrap_or_else(|| DMatrix::zeros(k, k));
                if let Some(j) = i.checked_sub(l) {
                    let v1 = &q_part + lambda12.values.get(j, l) - s0.get(j, l);
                    stats.psi.set(i, l, &v1);
                    psi2.set(i, l, &(&m_part + lambda22.values.get(j, l) - n0.get(j, l)));
                }
                psi1_shifted.set(
                    i,
                    l,
                    &(&q_part + lambda12.values.get(ahead, l) - s0.get(i, l)),
                );
                psi2_shifted.set(
                    i,
                    l,
                    &(&m_part + lambda22.values.get(ahead, l) - n0.get(i, l)),
                );
            }
        }
        stats.psi2 = Some(psi2);
        stats.psi1_shifted = Some(psi1_shifted);
        stats.psi2_shifted = Some(psi2_shifted);
    }
    stats
}
