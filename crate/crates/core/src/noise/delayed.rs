use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::matvec_acc;
use crate::problem::{DelaySchedule, TimeGrid};

/// The schedule actually realized on `grid`: a fixed lag is snapped to whole cells.
pub fn grid_schedule(schedule: &DelaySchedule, grid: &TimeGrid) -> DelaySchedule {
    if schedule.snaps() {
        schedule.with_eps(grid.eps)
    } else {
        schedule.clone()
    }
}

/// Overlap weights `ω(i, i+l) = |{s ∈ [t_{i+l}, t_{i+l+1}) : λ_s ∈ (t_i, t_{i+1}]}| / dt`.
///
/// With `w'` constant on each observation cell, step `j` of the delayed noise integrates to
/// `D·Σ_i ω(i, j)·ΔW_i`. Times with `λ_s ≤ 0` carry no noise. Steps past the horizon
/// (up to `L` of them) are included so that every observation cell sees its full lag window, and
/// the cell `(T, T + dt]` is kept as row `N` so that boundary values at the horizon are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayWeights {
    n: usize,
    lags: usize,
    /// `w[i*(lags+1) + l]`
    w: Vec<f64>,
}

impl DelayWeights {
    pub fn new(schedule: &DelaySchedule, grid: &TimeGrid) -> Result<Self> {
        if schedule.lambda(grid.horizon) > grid.horizon * (1.0 + 1e-12) {
            return Err(Error::ScheduleOutOfRange(format!(
                "lambda(T) = {} exceeds T",
                schedule.lambda(grid.horizon)
            )));
        }
        let (n, lags, dt) = (grid.n, grid.lag_steps, grid.dt);
        let mut w = vec![0.0; (n + 1) * (lags + 1)];
        let node = |j: usize| if j <= n { grid.t(j) } else { j as f64 * dt };
        for j in 0..=n + lags {
            let (s0, s1) = (node(j), node(j + 1));
            let (u0, u1) = (schedule.lambda(s0).max(0.0), schedule.lambda(s1).max(0.0));
            if u1 <= u0 {
                continue;
            }
            let first = ((u0 / dt).floor() as usize).min(n);
            for i in first..=n {
                let (c0, c1) = (node(i), node(i + 1));
                if c0 >= u1 {
                    break;
                }
                let (a, b) = (u0.max(c0), u1.min(c1));
                if b <= a {
                    continue;
                }
                let len = schedule.lambda_inv(b).min(s1) - schedule.lambda_inv(a).max(s0);
                let omega = len / dt;
                if omega <= 1e-12 {
                    continue;
                }
                let Some(l) = j.checked_sub(i).filter(|l| *l <= lags) else {
                    if j >= n {
                        continue;
                    }
                    return Err(Error::ScheduleOutOfRange(format!(
                        "step {j} reads observation cell {i}, beyond the lag window"
                    )));
                };
                w[i * (lags + 1) + l] = if (omega - 1.0).abs() <= 1e-12 {
                    1.0
                } else {
                    omega
                };
            }
        }
        Ok(Self { n, lags, w })
    }

    /// `ω(i, i + l)`, `i ∈ 0..=N`.
    #[inline]
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.w[i * (self.lags + 1) + l]
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn lag_steps(&self) -> usize {
        self.lags
    }

    /// Plant-noise increments `D·Σ_i ω(i, j)·ΔW_i` for every step `j` (row-major `N × n`).
    pub fn plant_increments(&self, d: &DMatrix<f64>, cells: &[f64]) -> Vec<f64> {
        let (n_state, k) = d.shape();
        let mut out = vec![0.0; self.n * n_state];
        for i in 0..self.n {
            let dw = &cells[i * k..(i + 1) * k];
            for l in 0..=self.lags.min(self.n - 1 - i) {
                let om = self.get(i, l);
                if om != 0.0 {
                    let j = i + l;
                    matvec_acc(
                        &mut out[j * n_state..(j + 1) * n_state],
                        d.as_slice(),
                        n_state,
                        k,
                        dw,
                        om,
                    );
                }
            }
        }
        out
    }
}

/// Pointwise samples `D·(w_{u+δ} − w_u)/δ`, `u = max(0, λ(t_k))`, read from the refined path
/// (`δ = dt/ρ`); row-major `(N+1) × n`.
pub fn generate_delayed_wn(
    d: &DMatrix<f64>,
    schedule: &DelaySchedule,
    master_w: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    let (n_state, k) = d.shape();
    let subs = grid.n * grid.rho;
    if master_w.len() != subs * k {
        return Err(Error::DimensionMismatch(format!(
            "master path has {} entries, expected {}",
            master_w.len(),
            subs * k
        )));
    }
    if schedule.lambda(grid.horizon) > grid.horizon * (1.0 + 1e-12) {
        return Err(Error::ScheduleOutOfRange(format!(
            "lambda(T) = {} exceeds T",
            schedule.lambda(grid.horizon)
        )));
    }
    let delta = grid.dt / grid.rho as f64;
    let mut out = vec![0.0; (grid.n + 1) * n_state];
    for kk in 0..=grid.n {
        let u = schedule.lambda(grid.t(kk)).max(0.0);
        // snap to the node when λ lands on it up to rounding
        let idx = (((u / delta) + 1e-9).floor() as usize).min(subs - 1);
        let dw = &master_w[idx * k..(idx + 1) * k];
        matvec_acc(
            &mut out[kk * n_state..(kk + 1) * n_state],
            d.as_slice(),
            n_state,
            k,
            dw,
            1.0 / delta,
        );
    }
    Ok(out)
}
