//! One-dimensional two-phase Stefan problem with a kinetic condition at the
//! free boundary, together with theorem checkers, reference oracles and the
//! laminate geometry that the interface motion drives.

pub mod analysis;
pub mod config;
pub mod error;
pub mod grid;
pub mod interface;
pub mod io;
pub mod laminate;
pub mod mollifier;
pub mod oracle;
pub mod params;
pub mod solver;
pub mod tridiag;
pub mod velocity;

pub use analysis::{check_all, TheoremId, TheoremReport, Verdict};
pub use config::{InitialCondition, RunConfig};
pub use error::{Error, Result};
pub use grid::{rescale_temperature, Grid1D, TemperatureField};
pub use interface::{ExitSide, InterfaceState, InterfaceTrajectory, TrajectorySample};
pub use laminate::{extract_rank_one, LaminateSpec};
pub use mollifier::{KernelProfile, MollifiedDirac};
pub use params::{make_params, PhysicalParams};
pub use solver::{
    interpolate_at_interface, run, run_with_forcing, step, Coupling, DiffusionScheme, Forcing, SimulationResult,
    SolverConfig, SourceMode,
};
pub use velocity::{VelocityLaw, VelocityTable};
