//! Noise-constrained recovery via the discrepancy principle.
//!
//! The constrained problem
//! `min ||X||_* + (mu/2)||X - X0||^2  s.t.  ||A(X) - Y||_F <= epsilon`
//! has, for the active constraint, the same minimizer as the penalized
//! problem `||A(X) - Y||^2 + lambda (||X||_* + (mu/2)||X - X0||^2)` at the
//! `lambda` whose residual equals `epsilon`. The residual grows with
//! `lambda`, so `lambda` is found by bisection in log space.

use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::forward::ForwardModel;
use crate::solver::config::{SolveReport, SolverConfig, SolverMode};
use crate::solver::fista::{check_plan, Problem, SolveSpec};
use crate::video::VideoMatrix;

/// Accepted residual band is `[epsilon, (1 + DISCREPANCY_SLACK) * epsilon]`.
pub const DISCREPANCY_SLACK: f64 = 0.05;
const MAX_BISECTIONS: usize = 40;
const MAX_DECADES: usize = 14;
const MAX_CONTINUATION_ROUNDS: usize = 5;

/// Smallest `lambda` for which `X = 0` solves the penalized problem:
/// `2 ||A^T(Y)||_2`.
pub fn lambda_max(model: &ForwardModel, y: &DMatrix<f64>) -> Result<f64> {
    let aty = model.adjoint(y)?;
    Ok(2.0 * crate::solver::svd::spectral_norm(&aty))
}

pub fn solve_constrained(
    y: &MeasurementSet,
    model: &ForwardModel,
    config: &SolverConfig,
) -> Result<(VideoMatrix, SolveReport)> {
    config.validate()?;
    let (epsilon, mu) = match config.mode {
        SolverMode::Constrained { epsilon, mu } => (epsilon, mu),
        SolverMode::Lagrangian { .. } => {
            return Err(NoraError::Config("solve_constrained needs Constrained mode".into()))
        }
    };
    check_plan(y, model)?;
    let problem = Problem::new(model, &y.data, config.seed)?;
    let upper = (1.0 + DISCREPANCY_SLACK) * epsilon;
    let y_norm = y.data.norm();
    let lam_max = lambda_max(model, &y.data)?;

    let zero_report = |lambda: f64| SolveReport {
        iterations_run: 0,
        objective_per_iter: vec![],
        final_data_residual: y_norm,
        final_nuclear_norm: 0.0,
        solution_rank: 0,
        converged: true,
        lambda,
        step_size: 0.0,
        operator_norm_sq: problem.operator_norm_sq,
        momentum_restarts: 0,
        lambda_trace: vec![(lambda, y_norm)],
    };
    let zero = || VideoMatrix::zeros(model.grid, model.frames());
    if y_norm <= upper || lam_max == 0.0 {
        // X = 0 is feasible, and it minimizes the nuclear norm.
        return Ok((zero(), zero_report(lam_max)));
    }

    let mut trace: Vec<(f64, f64)> = vec![(lam_max, y_norm)];
    let mut warm: Option<DMatrix<f64>> = None;
    let solve_at = |lambda: f64, warm: &Option<DMatrix<f64>>| -> Result<(DMatrix<f64>, SolveReport)> {
        let spec = SolveSpec {
            lambda,
            smoothing: lambda * mu,
            anchor: None,
            init: warm.as_ref(),
        };
        problem.solve(&spec, config)
    };

    // Walk down in decades until the residual drops below the band's top.
    let mut hi = lam_max;
    let mut lo = None;
    let mut best: Option<(DMatrix<f64>, SolveReport)> = None;
    let mut lambda = lam_max / 10.0;
    for _ in 0..MAX_DECADES {
        let (x, report) = solve_at(lambda, &warm)?;
        let r = report.final_data_residual;
        trace.push((lambda, r));
        warm = Some(x.clone());
        if r <= upper {
            let in_band = r >= epsilon;
            best = Some((x, report));
            if in_band {
                lo = Some(lambda);
                hi = lambda;
            } else {
                lo = Some(lambda);
            }
            break;
        }
        hi = lambda;
        lambda /= 10.0;
    }
    let Some(mut lo) = lo else {
        let residual = trace.last().map(|p| p.1).unwrap_or(y_norm);
        return Err(NoraError::Infeasible { epsilon, residual });
    };

    let mut found = best.as_ref().map(|(_, r)| r.final_data_residual >= epsilon).unwrap_or(false);
    let mut steps = 0;
    while !found && steps < MAX_BISECTIONS {
        steps += 1;
        let mid = (lo * hi).sqrt();
        let (x, report) = solve_at(mid, &warm)?;
        let r = report.final_data_residual;
        trace.push((mid, r));
        warm = Some(x.clone());
        if r > upper {
            hi = mid;
        } else {
            lo = mid;
            found = r >= epsilon;
            best = Some((x, report));
        }
    }
    if !found {
        return Err(NoraError::NotBracketed { trace });
    }
    let (mut x, mut report) = best.expect("bracketed solution");

    if config.continuation {
        let lambda = report.lambda;
        for _ in 0..MAX_CONTINUATION_ROUNDS {
            let anchor = x.clone();
            let spec = SolveSpec {
                lambda,
                smoothing: lambda * mu,
                anchor: Some(&anchor),
                init: Some(&anchor),
            };
            let (next, next_report) = problem.solve(&spec, config)?;
            trace.push((lambda, next_report.final_data_residual));
            let change = (&next - &anchor).norm() / anchor.norm().max(f64::MIN_POSITIVE);
            x = next;
            report = next_report;
            if change < config.rel_tol {
                break;
            }
        }
    }

    report.lambda_trace = trace;
    Ok((VideoMatrix { grid: model.grid, data: x }, report))
}
