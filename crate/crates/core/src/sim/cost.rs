use nalgebra::DVectorView;

use super::engine::TrajectoryBundle;
use crate::problem::ProblemSpec;

/// Realized cost: trapezoid of the running cost over the nodes plus `⟨x_T, H x_T⟩`.
pub fn accumulate_cost(traj: &TrajectoryBundle, spec: &ProblemSpec) -> f64 {
    let steps = traj.steps();
    let dt = spec.horizon() / steps as f64;
    let rc = &traj.running_cost;
    let interior: f64 = rc[1..steps].iter().sum();
    let integral = dt * (0.5 * (rc[0] + rc[steps]) + interior);
    let xt = DVectorView::from_slice(traj.x_at(steps), spec.dims().0);
    integral + (xt.transpose() * spec.h() * xt)[(0, 0)]
}
