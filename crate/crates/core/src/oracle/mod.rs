//! Reference solutions the solver is validated against.

pub mod manufactured;
pub mod neumann;
pub mod reference;

pub use manufactured::ManufacturedForcing;
pub use neumann::{solve_neumann, NeumannProblem, NeumannSolution};
pub use reference::{
    convergence_study, fine_grid_reference, neumann_comparison, scenario, ConvergenceReport, NeumannComparison,
    SCENARIOS, STIFF_RATES,
};
