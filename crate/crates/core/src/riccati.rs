//! Backward control Riccati equation, closed-loop propagators and the forward filter Riccati step.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, symmetrize_in_place, MatTable};
use crate::problem::{ProblemSpec, TimeGrid};

const BLOW_UP: f64 = 1e12;

fn rk4<F: Fn(&DMatrix<f64>, usize) -> DMatrix<f64>>(
    y: &DMatrix<f64>,
    h: f64,
    f: F,
) -> DMatrix<f64> {
    // stage index: 0 = start, 1 = midpoint, 2 = end
    let k1 = f(y, 0);
    let k2 = f(&(y + &k1 * (0.5 * h)), 1);
    let k3 = f(&(y + &k2 * (0.5 * h)), 1);
    let k4 = f(&(y + &k3 * h), 2);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// `K` at every node and every step midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardGainTable {
    pub k: Vec<DMatrix<f64>>,
    /// `K(t_j + dt/2)`, `j ∈ 0..N`.
    pub k_mid: Vec<DMatrix<f64>>,
}

/// Integrate `−K' = KA + AᵀK + F − K B G⁻¹ Bᵀ K`, `K_T = H`, with classical RK4 on half steps.
pub fn solve_backward_riccati(spec: &ProblemSpec, grid: &TimeGrid) -> Result<BackwardGainTable> {
    let (a, f) = (spec.a(), spec.f());
    let s = spec.b() * spec.g_inv() * spec.b().transpose();
    let rhs = |k: &DMatrix<f64>, _: usize| {
        let ka = k * a;
        &ka + ka.transpose() + f - k * &s * k
    };
    let h = grid.dt / 2.0;
    let mut k = vec![DMatrix::zeros(0, 0); grid.n + 1];
    let mut k_mid = vec![DMatrix::zeros(0, 0); grid.n];
    k[grid.n] = spec.h().clone();
    let mut cur = spec.h().clone();
    for j in (0..grid.n).rev() {
        for half in 0..2 {
            cur = rk4(&cur, h, rhs);
            symmetrize_in_place(&mut cur);
            let norm = inf_norm(&cur);
            if !(norm <= BLOW_UP) {
                return Err(Error::BlowUp {
                    t: grid.t(j) + h * (1 - half) as f64,
                    norm,
                });
            }
            if half == 0 {
                k_mid[j] = cur.clone();
            }
        }
        k[j] = cur.clone();
    }
    Ok(BackwardGainTable { k, k_mid })
}

/// One-step transition matrices `U_{t_{j+1}, t_j}` of `A − B G⁻¹ Bᵀ K_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorTable {
    pub step: Vec<DMatrix<f64>>,
}

impl PropagatorTable {
    /// `U_{t_to, t_from}` by composition, `from ≤ to`.
    pub fn between(&self, to: usize, from: usize) -> DMatrix<f64> {
        assert!(from <= to, "propagator needs from <= to");
        let n = self.step.first().map_or(0, |m| m.nrows());
        let mut u = DMatrix::identity(n, n);
        for j in from..to {
            u = &self.step[j] * u;
        }
        u
    }
}

pub fn build_propagators(
    spec: &ProblemSpec,
    gains: &BackwardGainTable,
    grid: &TimeGrid,
) -> PropagatorTable {
    let s = spec.b() * spec.g_inv() * spec.b().transpose();
    let closed = |k: &DMatrix<f64>| spec.a() - &s * k;
    let n = spec.dims().0;
    let eye = DMatrix::identity(n, n);
    let step = (0..grid.n)
        .map(|j| {
            let m = [
                closed(&gains.k[j]),
                closed(&gains.k_mid[j]),
                closed(&gains.k[j + 1]),
            ];
            rk4(&eye, grid.dt, |u, stage| &m[stage] * u)
        })
        .collect();
    PropagatorTable { step }
}

/// Quadrature weights of the anticipating correction: `W[i][l] = U_{t_{i+l}, t_i}ᵀ K_{t_{i+l}}`,
/// `l < min(L, N − i)`, so that `α̂_i = dt·Σ_l W[i][l]·ψ_{t_i, −l·dt}`.
pub fn alpha_weights(
    gains: &BackwardGainTable,
    props: &PropagatorTable,
    grid: &TimeGrid,
) -> MatTable {
    let n = gains.k[0].nrows();
    let mut w = MatTable::zeros(grid.n + 1, grid.lag_steps, n, n);
    for i in 0..grid.n {
        let mut u = DMatrix::identity(n, n);
        for l in 0..grid.lag_steps.min(grid.n - i) {
            if l > 0 {
                u = &props.step[i + l - 1] * u;
            }
            w.set(i, l, &(u.transpose() * &gains.k[i + l]));
        }
    }
    w
}

/// One RK4 step of `P' = AP + PAᵀ + Q₀ + Q₀ᵀ − (CP + M₀)ᵀ(CP + M₀)` with `Q₀`, `M₀` frozen.
///
/// `m0 = None` is the single-observation-noise form.
pub fn step_forward_p(
    p: &DMatrix<f64>,
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q0: &DMatrix<f64>,
    m0: Option<&DMatrix<f64>>,
    dt: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let drift = q0 + q0.transpose();
    let rhs = |p: &DMatrix<f64>, _: usize| {
        let ap = a * p;
        let mut gain = c * p;
        if let Some(m0) = m0 {
            gain += m0;
        }
        &ap + ap.transpose() + &drift - gain.transpose() * gain
    };
    let mut next = rk4(p, dt, rhs);
    symmetrize_in_place(&mut next);
    let norm = inf_norm(&next);
    if !(norm <= BLOW_UP) {
        return Err(Error::BlowUp { t: t + dt, norm });
    }
    Ok(next)
}
