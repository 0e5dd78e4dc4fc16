use nalgebra::DMatrix;
use nora_core::container::Container;
use nora_core::operators::ForwardModel;
use nora_core::solver::{lambda_max, solve, SolveReport, SolverConfig, SolverMode};
use nora_core::{MeasurementSet, VideoMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_out_dir, read_object, write_object, write_text, wrong_kind, AcquireSummary, Manifest};
use crate::config::{scale_preset, RunConfig, SolverChoice};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub start_frame: usize,
    pub end_frame: usize,
    pub mode: SolverMode,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructSummary {
    pub batches: Vec<BatchReport>,
    /// Root-sum-square of the per-batch epsilons, in constrained mode.
    pub epsilon_total: Option<f64>,
}

/// Batch-wise recovery of the video from its measurements.
pub fn cmd_reconstruct(config: &RunConfig) -> CliResult<(Manifest, ReconstructSummary)> {
    let y_path = config.resolve(&config.paths.measurements);
    let y = match read_object(&y_path)? {
        Container::Measurements(m) => m,
        _ => return Err(wrong_kind(&y_path, "measurements")),
    };
    let grid = y.plan.grid;
    let model = ForwardModel::new(config.psf()?, y.plan.clone(), grid)?;
    let modes = batch_modes(config, &y, &model)?;
    let base = config.solver_base();

    let results: Vec<(BatchReport, Option<DMatrix<f64>>)> = modes
        .par_iter()
        .map(|&((s, e), mode)| {
            let cfg = SolverConfig { mode, ..base.clone() };
            let outcome = solve(&y.slice_frames(s, e), &model.slice_frames(s, e), &cfg);
            let (report, x, error) = match outcome {
                Ok((x, r)) if x.data.iter().all(|v| v.is_finite()) => (Some(r), Some(x.data), None),
                Ok((_, r)) => (Some(r), None, Some("solution is not finite".to_string())),
                Err(err) => (None, None, Some(err.to_string())),
            };
            let batch = BatchReport {
                start_frame: s,
                end_frame: e,
                mode,
                report,
                error,
            };
            (batch, x)
        })
        .collect();

    let epsilon_total = modes
        .iter()
        .map(|(_, m)| match m {
            SolverMode::Constrained { epsilon, .. } => Some(epsilon * epsilon),
            SolverMode::Lagrangian { .. } => None,
        })
        .sum::<Option<f64>>()
        .map(f64::sqrt);
    let mut data = DMatrix::zeros(grid.pixels(), y.frames());
    let mut batches = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (batch, x) in results {
        match x {
            Some(x) => data.columns_mut(batch.start_frame, x.ncols()).copy_from(&x),
            None => failures.push(format!(
                "frames {}..{}: {}",
                batch.start_frame,
                batch.end_frame,
                batch.error.as_deref().unwrap_or("failed")
            )),
        }
        batches.push(batch);
    }
    let summary = ReconstructSummary { batches, epsilon_total };

    ensure_out_dir(config)?;
    let mut manifest = Manifest::new("reconstruct", config);
    manifest.seeds.insert("solver".into(), base.seed);
    let report_json = serde_json::to_string_pretty(&summary).expect("report serializes");
    let report_path = config.out_dir.join("reconstruct.report.json");
    write_text(&mut manifest, "solve_report", &report_path, &report_json)?;
    if !failures.is_empty() {
        manifest.write(config)?;
        return Err(CliError::Numerical(format!(
            "reconstruction failed ({}); see {}",
            failures.join("; "),
            report_path.display()
        )));
    }
    let video = VideoMatrix::new(grid, data)?;
    write_object(&mut manifest, "reconstruction", &config.resolve(&config.paths.reconstruction), &Container::Video(video))?;
    manifest.details = serde_json::json!({ "epsilon_total": epsilon_total });
    manifest.write(config)?;
    Ok((manifest, summary))
}

/// Frame ranges of the batches and the solver mode of each.
fn batch_modes(config: &RunConfig, y: &MeasurementSet, model: &ForwardModel) -> CliResult<Vec<((usize, usize), SolverMode)>> {
    let t = y.frames();
    let bounds: Vec<(usize, usize)> = (0..t)
        .step_by(config.batch_size_frames)
        .map(|s| (s, (s + config.batch_size_frames).min(t)))
        .collect();
    let per_frame = y.plan.measurements_per_frame();
    let mu = config.solver.mu;
    // Whole-video noise norms split across batches in proportion to their samples.
    let share = |total_eps: f64, (s, e): (usize, usize)| total_eps * ((e - s) as f64 / t as f64).sqrt();
    let mode_for = match config.solver_choice()? {
        SolverChoice::Lambda(lambda) => Mode::Lambda(lambda),
        SolverChoice::LambdaRel(rel) => Mode::Lambda(rel * lambda_max(model, &y.data)?),
        SolverChoice::Epsilon(eps) => Mode::Shared(eps),
        SolverChoice::Preset { base, speedup, .. } => Mode::Preset(base, speedup),
        SolverChoice::AcquiredNoise => Mode::Shared(acquired_noise_norm(config)?),
    };
    let mode_for = |b: (usize, usize)| -> CliResult<SolverMode> {
        Ok(match mode_for {
            Mode::Lambda(lambda) => SolverMode::Lagrangian { lambda },
            Mode::Shared(eps) => SolverMode::Constrained {
                epsilon: share(eps, b),
                mu,
            },
            Mode::Preset(base, speedup) => SolverMode::Constrained {
                epsilon: scale_preset(base, speedup, (b.1 - b.0) * per_frame),
                mu,
            },
        })
    };
    bounds.into_iter().map(|b| Ok((b, mode_for(b)?))).collect()
}

#[derive(Clone, Copy)]
enum Mode {
    Lambda(f64),
    /// Whole-video epsilon.
    Shared(f64),
    /// Base epsilon and speedup.
    Preset(f64, f64),
}

fn acquired_noise_norm(config: &RunConfig) -> CliResult<f64> {
    let missing = || {
        CliError::Config(
            "constrained mode needs solver.epsilon, solver.preset, or a noisy acquisition manifest".into(),
        )
    };
    let manifest = Manifest::read(config, "acquire")?.ok_or_else(missing)?;
    let summary: AcquireSummary = serde_json::from_value(manifest.details).map_err(|_| missing())?;
    summary.expected_noise_norm.ok_or_else(missing)
}
