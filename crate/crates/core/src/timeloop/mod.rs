//! Steady-state initialization and implicit-midpoint transient integration.

mod integrate;
mod simulate;
mod solver;

pub use integrate::{
    integrate, project_algebraic, steady_state, step_midpoint, time_grid, RunStats, StepInfo, StepOutcome,
};
pub use simulate::{simulate, steady_solution, MassLedger, NetworkDae, Sample, Simulation, TimeSeries};
pub use solver::{inf_norm, newton_solve, scale_residual, NewtonStats, Pattern, SolverConfig};

use crate::error::Result;

/// A residual-form DAE `F(x, ż, t) = 0`. The first `n_differential`
/// entries of `x` are the differential states; `ż` covers only those.
pub trait DaeSystem {
    fn n_differential(&self) -> usize;

    fn n_unknowns(&self) -> usize;

    fn residual(&self, x: &[f64], zdot: &[f64], t: f64, out: &mut [f64]) -> Result<()>;

    /// Diagonal row scaling applied before the Newton norm is taken.
    fn row_scales(&self) -> Vec<f64>;

    /// Structural nonzeros of `∂F/∂x`, if known. `∂F/∂ż` must be diagonal.
    fn sparsity(&self) -> Option<Pattern> {
        None
    }
}
