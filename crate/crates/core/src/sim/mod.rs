//! Closed-loop simulation: plant, filter with lag-cell propagation, anticipating correction,
//! control law, realized cost and pathwise diagnostics.

mod cost;
mod design;
mod diagnostics;
mod engine;
mod policy;
mod trace;

pub use cost::accumulate_cost;
pub use design::{design, design_with, DesignTables};
pub use diagnostics::{innovative_noise, lemma_diagnostics, DiagnosticsRecord};
pub use engine::{simulate_closed_loop, Simulator, TrajectoryBundle};
pub use policy::Policy;
pub use trace::write_trace;
