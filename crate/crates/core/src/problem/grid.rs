use serde::{Deserialize, Serialize};

use super::{NoiseModel, ProblemSpec};
use crate::error::{Error, Result};

/// Uniform time grid with lag cells aligned to the characteristics of the transport equations.
///
/// Time node `i` is `t_i = i·dt`; lag cell `l ∈ 0..=L` is `θ = −l·dt`. A characteristic moves one
/// lag cell per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub lag_steps: usize,
    /// Refinement factor of the master noise grid.
    pub rho: usize,
    pub eps_requested: f64,
    /// `lag_steps·dt` when the lag is snapped, the requested window otherwise.
    pub eps: f64,
}

impl TimeGrid {
    pub fn t(&self, i: usize) -> f64 {
        if i == self.n {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.t(i)).collect()
    }

    pub fn was_snapped(&self) -> bool {
        self.eps != self.eps_requested
    }

    /// Lag cells `0..=L` reachable from node `i` before the horizon, capped at `L`.
    pub fn lag_span(&self, i: usize) -> usize {
        self.lag_steps.min(self.n - i)
    }
}

/// Build the grid for `spec` with `n` steps and master-noise refinement `rho`.
///
/// `L = round(ε/dt)` (ties to even); a Case 3 schedule without a fixed lag covers its maximal lag
/// with `L = ceil(ε/dt)` instead.
pub fn make_grid(spec: &ProblemSpec, n: usize, rho: usize) -> Result<TimeGrid> {
    if n < 2 {
        return Err(Error::BadGrid(format!("N = {n} must be at least 2")));
    }
    if rho < 1 {
        return Err(Error::BadGrid("refinement rho must be at least 1".into()));
    }
    let horizon = spec.horizon();
    let dt = horizon / n as f64;
    let eps = spec.eps();
    let snaps = match spec.noise() {
        NoiseModel::Case3 { schedule, .. } => schedule.snaps(),
        _ => true,
    };
    let ratio = eps / dt;
    let lag_steps = if snaps {
        ratio.round_ties_even()
    } else {
        // guard against ceil(25.000000000004) = 26
        (ratio - 1e-9).ceil()
    };
    if lag_steps < 1.0 {
        return Err(Error::GridTooCoarse { eps, dt });
    }
    let lag_steps = (lag_steps as usize).min(n);
    let eps_eff = if snaps { lag_steps as f64 * dt } else { eps };
    Ok(TimeGrid {
        n,
        dt,
        horizon,
        lag_steps,
        rho,
        eps_requested: eps,
        eps: eps_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_problem, KernelShape, ProblemParams};
    use nalgebra::DMatrix;

    fn spec(eps: f64) -> ProblemSpec {
        let one = DMatrix::from_element(1, 1, 1.0);
        build_problem(ProblemParams {
            a: one.clone() * 0.0,
            b: one.clone(),
            c: one.clone(),
            f: one.clone(),
            g: one.clone(),
            h: one.clone(),
            horizon: 1.0,
            initial_cov: one.clone(),
            initial_mean: None,
            noise: NoiseModel::Case1 {
                lambda: KernelShape::Zero,
                eps,
            },
        })
        .unwrap()
    }

    #[test]
    fn exact_division() {
        let g = make_grid(&spec(0.25), 100, 1).unwrap();
        assert!((g.dt - 0.01).abs() < 1e-15);
        assert_eq!(g.lag_steps, 25);
        assert!((g.eps - 0.25).abs() < 1e-15);
    }

    #[test]
    fn snapping_rounds_to_nearest_cell() {
        let g = make_grid(&spec(0.333), 3, 1).unwrap();
        assert_eq!(g.lag_steps, 1);
        assert!((g.eps - 1.0 / 3.0).abs() < 1e-15);
        assert!(g.was_snapped());
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(
            make_grid(&spec(0.1), 2, 1),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(matches!(
            make_grid(&spec(0.25), 2, 1),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(matches!(
            make_grid(&spec(0.25), 1, 1),
            Err(Error::BadGrid(_))
        ));
        assert!(matches!(
            make_grid(&spec(0.25), 10, 0),
            Err(Error::BadGrid(_))
        ));
    }

    #[test]
    fn last_node_is_horizon() {
        let g = make_grid(&spec(0.25), 7, 1).unwrap();
        assert_eq!(g.t(7), 1.0);
        assert_eq!(g.times().len(), 8);
    }
}
