//! Accelerated proximal gradient (FISTA) for nuclear-norm regularized least
//! squares, with function-value momentum restart.

use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::forward::ForwardModel;
use crate::operators::norm::estimate_operator_norm_converged;
use crate::solver::config::{SolveReport, SolverConfig, SolverMode};
use crate::solver::svd::svt_capped;
use crate::video::VideoMatrix;

/// A fixed instance `(A, Y)` with its operator-norm estimate cached, so that
/// repeated solves (lambda searches, continuation) do not redo the power
/// iteration.
pub struct Problem<'a> {
    pub model: &'a ForwardModel,
    pub y: &'a DMatrix<f64>,
    pub operator_norm_sq: f64,
}

/// One regularized solve:
/// `min ||A(X) - Y||^2 + (smoothing/2)||X - anchor||^2 + lambda ||X||_*`.
pub struct SolveSpec<'a> {
    pub lambda: f64,
    pub smoothing: f64,
    pub anchor: Option<&'a DMatrix<f64>>,
    pub init: Option<&'a DMatrix<f64>>,
}

impl<'a> Problem<'a> {
    pub fn new(model: &'a ForwardModel, y: &'a DMatrix<f64>, seed: u64) -> Result<Self> {
        if y.nrows() != model.plan.measurements_per_frame() || y.ncols() != model.frames() {
            return Err(NoraError::Shape(format!(
                "measurements are {}x{}, model expects {}x{}",
                y.nrows(),
                y.ncols(),
                model.plan.measurements_per_frame(),
                model.frames()
            )));
        }
        let operator_norm_sq = estimate_operator_norm_converged(model, 1e-9, 1000, seed)?;
        Ok(Problem {
            model,
            y,
            operator_norm_sq,
        })
    }

    fn residual(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.model.apply(x)? - self.y)
    }

    fn smooth_value(&self, x: &DMatrix<f64>, spec: &SolveSpec) -> Result<(f64, f64)> {
        let data = self.residual(x)?.norm_squared();
        let smooth = if spec.smoothing > 0.0 {
            let dist = match spec.anchor {
                Some(a) => (x - a).norm_squared(),
                None => x.norm_squared(),
            };
            0.5 * spec.smoothing * dist
        } else {
            0.0
        };
        Ok((data, smooth))
    }

    pub fn solve(&self, spec: &SolveSpec, config: &SolverConfig) -> Result<(DMatrix<f64>, SolveReport)> {
        let n = self.model.grid.pixels();
        let t = self.model.frames();
        let lipschitz = 2.0 * self.operator_norm_sq + spec.smoothing;
        let step = if lipschitz > 0.0 {
            config.step_scale / lipschitz
        } else {
            config.step_scale
        };
        let threshold = spec.lambda * step;

        let mut x = match spec.init {
            Some(init) => init.clone(),
            None => DMatrix::zeros(n, t),
        };
        let mut x_nuclear = if spec.init.is_some() {
            crate::solver::svd::nuclear_norm(&x)
        } else {
            0.0
        };
        let mut x_singular: Vec<f64> = Vec::new();
        if spec.init.is_some() {
            x_singular = crate::solver::svd::full_svd(&x)?.singular_values.iter().copied().collect();
        }
        let (d0, s0) = self.smooth_value(&x, spec)?;
        let mut objective = d0 + s0 + spec.lambda * x_nuclear;
        let mut z = x.clone();
        let mut theta = 1.0f64;
        let mut trace = Vec::with_capacity(config.max_iters);
        let mut converged = false;
        let mut restarts = 0;
        let mut iterations = 0;

        for k in 0..config.max_iters {
            iterations = k + 1;
            let mut grad = self.model.adjoint(&self.residual(&z)?)? * 2.0;
            if spec.smoothing > 0.0 {
                match spec.anchor {
                    Some(a) => grad += (&z - a) * spec.smoothing,
                    None => grad += &z * spec.smoothing,
                }
            }
            let point = &z - grad * step;
            let prox = svt_capped(&point, threshold, config.svd_rank_cap, config.seed ^ k as u64)?;
            let (data, smooth) = self.smooth_value(&prox.matrix, spec)?;
            let candidate = data + smooth + spec.lambda * prox.nuclear_norm();
            if !candidate.is_finite() {
                return Err(NoraError::Divergence {
                    iteration: iterations,
                    objective: candidate,
                });
            }

            if candidate > objective && theta > 1.0 {
                // Momentum overshoot: restart from the last accepted iterate.
                restarts += 1;
                theta = 1.0;
                z = x.clone();
                trace.push(objective);
                continue;
            }

            let diff = (&prox.matrix - &x).norm();
            let base = x.norm();
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let momentum = (theta - 1.0) / theta_next;
            z = &prox.matrix + (&prox.matrix - &x) * momentum;
            x = prox.matrix;
            x_nuclear = prox.singular_values.iter().sum();
            x_singular = prox.singular_values;
            theta = theta_next;
            objective = candidate;
            trace.push(objective);

            if diff == 0.0 || (base > 0.0 && diff / base < config.rel_tol) {
                converged = true;
                break;
            }
        }

        let residual = self.residual(&x)?.norm();
        let top = x_singular.first().copied().unwrap_or(0.0);
        let report = SolveReport {
            iterations_run: iterations,
            objective_per_iter: trace,
            final_data_residual: residual,
            final_nuclear_norm: x_nuclear,
            solution_rank: x_singular.iter().filter(|&&s| s > 1e-8 * top && s > 0.0).count(),
            converged,
            lambda: spec.lambda,
            step_size: step,
            operator_norm_sq: self.operator_norm_sq,
            momentum_restarts: restarts,
            lambda_trace: Vec::new(),
        };
        Ok((x, report))
    }
}

/// Nuclear-norm regularized recovery with a fixed `lambda`.
pub fn solve_lagrangian(
    y: &MeasurementSet,
    model: &ForwardModel,
    config: &SolverConfig,
) -> Result<(VideoMatrix, SolveReport)> {
    config.validate()?;
    let lambda = match config.mode {
        SolverMode::Lagrangian { lambda } => lambda,
        SolverMode::Constrained { .. } => {
            return Err(NoraError::Config("solve_lagrangian needs Lagrangian mode".into()))
        }
    };
    check_plan(y, model)?;
    let problem = Problem::new(model, &y.data, config.seed)?;
    let spec = SolveSpec {
        lambda,
        smoothing: 0.0,
        anchor: None,
        init: None,
    };
    let (x, report) = problem.solve(&spec, config)?;
    Ok((VideoMatrix { grid: model.grid, data: x }, report))
}

pub(crate) fn check_plan(y: &MeasurementSet, model: &ForwardModel) -> Result<()> {
    if y.plan.line_indices != model.plan.line_indices {
        return Err(NoraError::Shape("measurement plan does not match model plan".into()));
    }
    Ok(())
}

/// Objective `||A(X) - Y||^2 + lambda ||X||_*` at `x`.
pub fn lagrangian_objective(model: &ForwardModel, y: &DMatrix<f64>, x: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let r = model.apply(x)? - y;
    Ok(r.norm_squared() + lambda * crate::solver::svd::nuclear_norm(x))
}
