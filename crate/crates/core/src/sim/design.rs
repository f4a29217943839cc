use crate::error::Result;
use crate::kernels::{solve_filter, FilterTables, KernelOptions};
use crate::linalg::MatTable;
use crate::problem::{ProblemSpec, TimeGrid};
use crate::riccati::{
    alpha_weights, build_propagators, solve_backward_riccati, BackwardGainTable, PropagatorTable,
};

/// Everything a closed-loop run reads that does not depend on the noise draw.
#[derive(Debug, Clone)]
pub struct DesignTables {
    pub grid: TimeGrid,
    pub control: BackwardGainTable,
    pub propagators: PropagatorTable,
    /// Quadrature weights of the anticipating correction.
    pub alpha_weights: MatTable,
    pub filter: FilterTables,
}

pub fn design(spec: &ProblemSpec, grid: &TimeGrid) -> Result<DesignTables> {
    design_with(spec, grid, KernelOptions::default())
}

pub fn design_with(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    opts: KernelOptions,
) -> Result<DesignTables> {
    let control = solve_backward_riccati(spec, grid)?;
    let propagators = build_propagators(spec, &control, grid);
    let alpha_weights = alpha_weights(&control, &propagators, grid);
    let filter = solve_filter(spec, grid, opts)?;
    Ok(DesignTables {
        grid: grid.clone(),
        control,
        propagators,
        alpha_weights,
        filter,
    })
}
