use nalgebra::DMatrix;

use super::design::DesignTables;
use super::policy::Policy;
use crate::error::{Error, Result};
use crate::linalg::{matvec_acc, psd_sqrt};
use crate::noise::PathNoise;
use crate::problem::{Case, ProblemSpec};

/// One realization on the grid nodes `0..=N` (per-step quantities on `0..N`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub path: u64,
    pub dims: (usize, usize, usize),
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u: Vec<f64>,
    /// `ψ_{t_i,0}` before any injection at step `i`; `n` or `n + k` wide.
    pub psi0: Vec<f64>,
    pub psi_dim: usize,
    pub alpha_hat: Vec<f64>,
    /// Observation increments `dz_i`, `N × k`.
    pub dz: Vec<f64>,
    /// Innovation increments `dz̄_i`, `N × k`.
    pub innovation: Vec<f64>,
    /// `⟨x, Fx⟩ + ⟨u, Gu⟩` at every node.
    pub running_cost: Vec<f64>,
}

impl TrajectoryBundle {
    pub fn steps(&self) -> usize {
        self.running_cost.len() - 1
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        let n = self.dims.0;
        &self.x[i * n..(i + 1) * n]
    }

    /// Cumulative observation `z_{t_i}`, `(N+1) × k`.
    pub fn z(&self) -> Vec<f64> {
        let k = self.dims.2;
        let mut out = vec![0.0; (self.steps() + 1) * k];
        for i in 0..self.steps() {
            for b in 0..k {
                out[(i + 1) * k + b] = out[i * k + b] + self.dz[i * k + b];
            }
        }
        out
    }
}

/// Closed-loop stepper bound to one problem and one design.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    spec: &'a ProblemSpec,
    design: &'a DesignTables,
    /// `G⁻¹Bᵀ`
    g_inv_bt: DMatrix<f64>,
    init_root: DMatrix<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a ProblemSpec, design: &'a DesignTables) -> Result<Self> {
        let (n, _, k) = spec.dims();
        let f = &design.filter;
        let g = &design.grid;
        if f.steps() != g.n || f.lag_steps != g.lag_steps || design.control.k.len() != g.n + 1 {
            return Err(Error::GridMismatch(
                "design tables were built on a different grid".into(),
            ));
        }
        if f.gains
            .state_gain
            .first()
            .is_some_and(|m| m.shape() != (n, k))
        {
            return Err(Error::GridMismatch(
                "filter gains do not match the problem dimensions".into(),
            ));
        }
        if f.case == Case::Three && f.gains.injection.is_none() {
            return Err(Error::MissingTables("delayed-noise injection weights"));
        }
        Ok(Self {
            spec,
            design,
            g_inv_bt: spec.g_inv() * spec.b().transpose(),
            init_root: psd_sqrt(spec.initial_cov()),
        })
    }

    pub fn run(&self, noise: &PathNoise, policy: &Policy, path: u64) -> Result<TrajectoryBundle> {
        let spec = self.spec;
        let d = self.design;
        let grid = &d.grid;
        let (n, m, k) = spec.dims();
        let (steps, cells, dt) = (grid.n, grid.lag_steps + 1, grid.dt);
        let gains = &d.filter.gains;
        let psi_dim = gains.psi_dim;
        let case = d.filter.case;
        if noise.state_incr.len() != steps * n
            || noise.obs_incr.len() != steps * k
            || noise.xi.len() != n
        {
            return Err(Error::GridMismatch(
                "noise path does not match the grid".into(),
            ));
        }
        if let Policy::Linear { gain } = policy {
            if gain.shape() != (m, n) {
                return Err(Error::DimensionMismatch(format!(
                    "linear policy gain is {:?}, expected {m}x{n}",
                    gain.shape()
                )));
            }
        }
        let (a, b, c) = (
            spec.a().as_slice(),
            spec.b().as_slice(),
            spec.c().as_slice(),
        );
        let (f_cost, g_cost) = (spec.f(), spec.g());

        let nodes = steps + 1;
        let mut out = TrajectoryBundle {
            path,
            dims: (n, m, k),
            x: vec![0.0; nodes * n],
            xhat: vec![0.0; nodes * n],
            u0: vec![0.0; nodes * m],
            u1: vec![0.0; nodes * m],
            u: vec![0.0; nodes * m],
            psi0: vec![0.0; nodes * psi_dim],
            psi_dim,
            alpha_hat: vec![0.0; nodes * n],
            dz: vec![0.0; steps * k],
            innovation: vec![0.0; steps * k],
            running_cost: vec![0.0; nodes],
        };

        let mean = spec.initial_mean().as_slice();
        let mut x: Vec<f64> = mean.to_vec();
        matvec_acc(&mut x, self.init_root.as_slice(), n, n, &noise.xi, 1.0);
        let mut xhat: Vec<f64> = mean.to_vec();
        let mut psi = vec![0.0; cells * psi_dim];
        let mut psi_next = psi.clone();
        let mut alpha_hat = vec![0.0; n];
        let mut tmp_n = vec![0.0; n];
        let mut u0 = vec![0.0; m];
        let mut u1 = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut zbar = vec![0.0; k];

        for i in 0..=steps {
            // anticipating correction from the current lag slice
            alpha_hat.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..grid.lag_steps.min(steps - i) {
                let w = d.alpha_weights.block(i, l);
                matvec_acc(
                    &mut alpha_hat,
                    w,
                    n,
                    n,
                    &psi[l * psi_dim..l * psi_dim + n],
                    dt,
                );
            }

            u0.iter_mut().chain(u1.iter_mut()).for_each(|v| *v = 0.0);
            match policy {
                Policy::Optimal | Policy::GainScaled { .. } | Policy::DropAlpha => {
                    let gamma = if let Policy::GainScaled { gamma } = policy {
                        *gamma
                    } else {
                        1.0
                    };
                    tmp_n.iter_mut().for_each(|v| *v = 0.0);
                    matvec_acc(&mut tmp_n, d.control.k[i].as_slice(), n, n, &xhat, gamma);
                    matvec_acc(&mut u0, self.g_inv_bt.as_slice(), m, n, &tmp_n, -1.0);
                    if !matches!(policy, Policy::DropAlpha) {
                        matvec_acc(&mut u1, self.g_inv_bt.as_slice(), m, n, &alpha_hat, -1.0);
                    }
                }
                Policy::Zero => {}
                Policy::Linear { gain } => matvec_acc(&mut u0, gain.as_slice(), m, n, &xhat, -1.0),
            }
            for j in 0..m {
                u[j] = u0[j] + u1[j];
            }

            let xs = nalgebra::DVectorView::from_slice(&x, n);
            let us = nalgebra::DVectorView::from_slice(&u, m);
            out.running_cost[i] =
                (xs.transpose() * f_cost * xs)[(0, 0)] + (us.transpose() * g_cost * us)[(0, 0)];
            out.x[i * n..(i + 1) * n].copy_from_slice(&x);
            out.xhat[i * n..(i + 1) * n].copy_from_slice(&xhat);
            out.u0[i * m..(i + 1) * m].copy_from_slice(&u0);
            out.u1[i * m..(i + 1) * m].copy_from_slice(&u1);
            out.u[i * m..(i + 1) * m].copy_from_slice(&u);
            out.psi0[i * psi_dim..(i + 1) * psi_dim].copy_from_slice(&psi[..psi_dim]);
            out.alpha_hat[i * n..(i + 1) * n].copy_from_slice(&alpha_hat);
            if i == steps {
                break;
            }

            // observation and innovation
            let dz = &mut out.dz[i * k..(i + 1) * k];
            dz.copy_from_slice(&noise.obs_incr[i * k..(i + 1) * k]);
            matvec_acc(dz, c, k, n, &x, dt);
            zbar.copy_from_slice(dz);
            matvec_acc(&mut zbar, c, k, n, &xhat, -dt);
            if case == Case::Two {
                for bb in 0..k {
                    zbar[bb] -= psi[n + bb] * dt;
                }
            }
            out.innovation[i * k..(i + 1) * k].copy_from_slice(&zbar);

            if let Some(inj) = gains.injection.as_ref() {
                for l in 0..cells {
                    matvec_acc(
                        &mut psi[l * psi_dim..(l + 1) * psi_dim],
                        inj.block(i, l),
                        psi_dim,
                        k,
                        &zbar,
                        1.0 / dt,
                    );
                }
            }

            // estimator
            let mut xhat_next = xhat.clone();
            matvec_acc(&mut xhat_next, a, n, n, &xhat, dt);
            matvec_acc(&mut xhat_next, b, n, m, &u, dt);
            for j in 0..n {
                xhat_next[j] += psi[j] * dt;
            }
            matvec_acc(
                &mut xhat_next,
                gains.state_gain[i].as_slice(),
                n,
                k,
                &zbar,
                1.0,
            );

            // lag cells move one step toward θ = 0
            psi_next[(cells - 1) * psi_dim..]
                .iter_mut()
                .for_each(|v| *v = 0.0);
            for l in 0..cells - 1 {
                let dst = &mut psi_next[l * psi_dim..(l + 1) * psi_dim];
                dst.copy_from_slice(&psi[(l + 1) * psi_dim..(l + 2) * psi_dim]);
                matvec_acc(dst, gains.psi_gain.block(i, l + 1), psi_dim, k, &zbar, 1.0);
            }
            std::mem::swap(&mut psi, &mut psi_next);

            // plant
            let mut x_next = x.clone();
            matvec_acc(&mut x_next, a, n, n, &x, dt);
            matvec_acc(&mut x_next, b, n, m, &u, dt);
            for j in 0..n {
                x_next[j] += noise.state_incr[i * n + j];
            }
            x = x_next;
            xhat = xhat_next;
        }
        Ok(out)
    }
}

/// One closed-loop realization; see [`Simulator`] for repeated runs.
pub fn simulate_closed_loop(
    spec: &ProblemSpec,
    design: &DesignTables,
    noise: &PathNoise,
    policy: &Policy,
) -> Result<TrajectoryBundle> {
    Simulator::new(spec, design)?.run(noise, policy, 0)
}
