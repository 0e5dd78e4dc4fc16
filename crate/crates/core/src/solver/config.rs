use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverMode {
    /// `min ||A(X) - Y||_F^2 + lambda ||X||_*`.
    Lagrangian { lambda: f64 },
    /// `min ||X||_* + (mu/2)||X - X0||_F^2` subject to `||A(X) - Y||_F <= epsilon`.
    Constrained { epsilon: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_scale: f64,
    pub svd_rank_cap: Option<usize>,
    pub seed: u64,
    /// Constrained mode only: re-solve with the previous solution as `X0`.
    pub continuation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::Lagrangian { lambda: 1e-3 },
            max_iters: 500,
            rel_tol: 1e-4,
            step_scale: 0.99,
            svd_rank_cap: None,
            seed: 0,
            continuation: false,
        }
    }
}

impl SolverConfig {
    pub fn lagrangian(lambda: f64) -> Self {
        SolverConfig {
            mode: SolverMode::Lagrangian { lambda },
            ..Default::default()
        }
    }

    pub fn constrained(epsilon: f64, mu: f64) -> Self {
        SolverConfig {
            mode: SolverMode::Constrained { epsilon, mu },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            SolverMode::Lagrangian { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                return Err(NoraError::Config(format!("lambda must be positive, got {lambda}")))
            }
            SolverMode::Constrained { epsilon, mu }
                if !(epsilon > 0.0 && epsilon.is_finite() && mu >= 0.0 && mu.is_finite()) =>
            {
                return Err(NoraError::Config(format!(
                    "constrained mode needs epsilon > 0 and mu >= 0, got {epsilon}, {mu}"
                )))
            }
            _ => {}
        }
        if self.max_iters == 0 {
            return Err(NoraError::Config("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(NoraError::Config(format!("rel_tol must be in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(NoraError::Config(format!(
                "step_scale must be in (0, 1], got {}",
                self.step_scale
            )));
        }
        if self.svd_rank_cap == Some(0) {
            return Err(NoraError::Config("svd_rank_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations_run: usize,
    pub objective_per_iter: Vec<f64>,
    /// `||A(X_hat) - Y||_F`.
    pub final_data_residual: f64,
    pub final_nuclear_norm: f64,
    /// Singular values above `1e-8 * sigma_1`.
    pub solution_rank: usize,
    pub converged: bool,
    /// Regularization weight of the final solve.
    pub lambda: f64,
    pub step_size: f64,
    pub operator_norm_sq: f64,
    pub momentum_restarts: usize,
    /// Constrained mode: every `(lambda, residual)` the search visited.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_trace: Vec<(f64, f64)>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
