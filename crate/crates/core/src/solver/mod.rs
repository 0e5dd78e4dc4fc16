//! Nuclear-norm regularized recovery of the video matrix.

pub mod batch;
pub mod config;
pub mod constrained;
pub mod fista;
pub mod svd;

pub use batch::solve_batched;
pub use config::{SolveReport, SolverConfig, SolverMode};
pub use constrained::{lambda_max, solve_constrained};
pub use fista::{lagrangian_objective, solve_lagrangian};
pub use svd::{full_svd, partial_svd, svt, Svd};

use crate::error::Result;
use crate::measurement::MeasurementSet;
use crate::operators::forward::ForwardModel;
use crate::video::VideoMatrix;

/// Dispatch on the configured mode.
pub fn solve(y: &MeasurementSet, model: &ForwardModel, config: &SolverConfig) -> Result<(VideoMatrix, SolveReport)> {
    match config.mode {
        SolverMode::Lagrangian { .. } => solve_lagrangian(y, model, config),
        SolverMode::Constrained { .. } => solve_constrained(y, model, config),
    }
}
