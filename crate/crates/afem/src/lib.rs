//! Adaptive finite element experiments on top of `afem-core`: geometry
//! files, a sparse direct solver, the adaptive loops and their CSV output.

pub mod experiments;
pub mod geometry;
pub mod history;
pub mod solver;

pub use experiments::{ailfem, goafem, lshape, poisson, Linearization, LoopConfig, Run};
pub use geometry::{load_geometry, GeometryError};
pub use history::{ConvergenceHistory, Level, Timings};
pub use solver::DirectSolver;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] afem_core::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no convergence of the linearization on level {level} after {steps} steps")]
    InnerIteration { level: usize, steps: usize },
    #[error("damping must be positive, got {0}")]
    InvalidDamping(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
