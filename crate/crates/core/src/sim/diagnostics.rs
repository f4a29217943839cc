use nalgebra::DMatrix;

use super::design::DesignTables;
use super::engine::TrajectoryBundle;
use crate::linalg::{matvec_acc, matvec_t_acc};
use crate::noise::PathNoise;
use crate::problem::ProblemSpec;

/// Pathwise quantities of the extended separation principle, all `(N+1) × n` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    /// `y_t = −e^{Aᵀ(T−t)} H x_T − ∫_t^T e^{Aᵀ(s−t)} F x_s ds`.
    pub y: Vec<f64>,
    /// Anticipating `α_t = Σ_{s ≥ t} U_{s,t}ᵀ K_s · (state noise over step s)`.
    pub alpha: Vec<f64>,
    /// `r_t = y_t + K_t x_t + α_t`; conditionally mean zero given the observations up to any earlier time.
    pub residual: Vec<f64>,
    /// Innovative noise increments, `N × n`.
    pub innovative: Vec<f64>,
}

pub fn lemma_diagnostics(
    traj: &TrajectoryBundle,
    noise: &PathNoise,
    design: &DesignTables,
    spec: &ProblemSpec,
) -> DiagnosticsRecord {
    let (n, _, _) = spec.dims();
    let steps = traj.steps();
    let dt = design.grid.dt;
    let decay = (spec.a().transpose() * dt).exp();
    let mut y = vec![0.0; (steps + 1) * n];
    let mut alpha = vec![0.0; (steps + 1) * n];
    matvec_acc(
        &mut y[steps * n..],
        spec.h().as_slice(),
        n,
        n,
        traj.x_at(steps),
        -1.0,
    );
    for i in (0..steps).rev() {
        let (head, tail) = y.split_at_mut((i + 1) * n);
        let yi = &mut head[i * n..];
        matvec_acc(yi, decay.as_slice(), n, n, &tail[..n], 1.0);
        matvec_acc(yi, spec.f().as_slice(), n, n, traj.x_at(i), -dt);

        let (head, tail) = alpha.split_at_mut((i + 1) * n);
        let ai = &mut head[i * n..];
        matvec_t_acc(
            ai,
            design.propagators.step[i].as_slice(),
            n,
            n,
            &tail[..n],
            1.0,
        );
        matvec_acc(
            ai,
            design.control.k[i].as_slice(),
            n,
            n,
            &noise.state_incr[i * n..(i + 1) * n],
            1.0,
        );
    }
    let mut residual = vec![0.0; (steps + 1) * n];
    for i in 0..=steps {
        let r = &mut residual[i * n..(i + 1) * n];
        for j in 0..n {
            r[j] = y[i * n + j] + alpha[i * n + j];
        }
        matvec_acc(r, design.control.k[i].as_slice(), n, n, traj.x_at(i), 1.0);
    }
    DiagnosticsRecord {
        y,
        alpha,
        residual,
        innovative: innovative_noise(traj, noise, spec),
    }
}

/// `φ′` increments: the state noise over each step minus `BG⁻¹Bᵀ α̂_t dt`.
pub fn innovative_noise(
    traj: &TrajectoryBundle,
    noise: &PathNoise,
    spec: &ProblemSpec,
) -> Vec<f64> {
    let (n, _, _) = spec.dims();
    let steps = traj.steps();
    let dt = spec.horizon() / steps as f64;
    let s: DMatrix<f64> = spec.b() * spec.g_inv() * spec.b().transpose();
    let mut out = noise.state_incr.clone();
    for i in 0..steps {
        matvec_acc(
            &mut out[i * n..(i + 1) * n],
            s.as_slice(),
            n,
            n,
            &traj.alpha_hat[i * n..(i + 1) * n],
            -dt,
        );
    }
    out
}
