use nalgebra::DMatrix;

use super::{
    build_problem, make_grid, DelayKind, DelaySchedule, KernelShape, NoiseModel, ProblemParams,
    ProblemSpec, TimeGrid,
};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 5] = [
    "case1-default",
    "case2-sensor",
    "case3-lunar",
    "case3-voyager",
    "case3-mars-return",
];

fn s(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn scalar_base(a: f64, g: f64, noise: NoiseModel) -> ProblemParams {
    ProblemParams {
        a: s(a),
        b: s(1.0),
        c: s(1.0),
        f: s(1.0),
        g: s(g),
        h: s(1.0),
        horizon: 1.0,
        initial_cov: s(0.1),
        initial_mean: None,
        noise,
    }
}

/// Named scalar scenarios sized for desk-scale Monte Carlo, returned with their default grid.
pub fn scenario_preset(name: &str) -> Result<(ProblemSpec, TimeGrid)> {
    let (params, n) = preset_params(name)?;
    let spec = build_problem(params)?;
    let grid = make_grid(&spec, n, 1)?;
    Ok((spec, grid))
}

/// Raw parameters and default step count of a preset.
pub fn preset_params(name: &str) -> Result<(ProblemParams, usize)> {
    let horizon = 1.0;
    let schedule = |kind| DelaySchedule::new(kind, horizon);
    let params = match name {
        // wide-band disturbance σ·(w_t − w_{t−ε}) with σ² = 4
        "case1-default" => scalar_base(
            0.5,
            0.1,
            NoiseModel::Case1 {
                lambda: KernelShape::Triangular(s(4.0)),
                eps: 0.25,
            },
        ),
        // plant and sensor share the disturbance partially
        "case2-sensor" => scalar_base(
            0.5,
            0.1,
            NoiseModel::Case2 {
                lambda11: KernelShape::Triangular(s(4.0)),
                lambda22: KernelShape::Triangular(s(1.0)),
                lambda12: KernelShape::Triangular(s(1.0)),
                eps: 0.25,
            },
        ),
        // round-trip light time roughly constant
        "case3-lunar" => scalar_base(
            0.3,
            0.5,
            NoiseModel::Case3 {
                d: s(1.0),
                schedule: schedule(DelayKind::ConstantLag { eps: 0.2 })?,
            },
        ),
        // receding probe: the lag grows in proportion to elapsed time
        "case3-voyager" => scalar_base(
            0.3,
            0.5,
            NoiseModel::Case3 {
                d: s(1.0),
                schedule: schedule(DelayKind::Proportional { c: 0.85 })?,
            },
        ),
        // approaching craft: the lag shrinks to zero at arrival
        "case3-mars-return" => scalar_base(
            0.3,
            0.5,
            NoiseModel::Case3 {
                d: s(1.0),
                schedule: schedule(DelayKind::ClosingApproach { c: 1.1, eps: 0.2 })?,
            },
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok((params, 200))
}
