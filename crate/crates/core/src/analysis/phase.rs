//! Empirical recovery phase diagrams over (rank, lines per frame).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::metrics::relative_error;
use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::forward::ForwardModel;
use crate::operators::plan::{generate_plan, SamplingStrategy};
use crate::operators::blur::convolve_into;
use crate::operators::psf::{Psf, DEFAULT_TRUNCATION_SIGMAS};
use crate::solver::config::{SolverConfig, SolverMode};
use crate::solver::constrained::lambda_max;
use crate::solver::fista::solve_lagrangian;
use crate::video::FrameGrid;

/// Success fraction at which a cell counts as recovered when locating the
/// boundary.
pub const BOUNDARY_SUCCESS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub grid: FrameGrid,
    pub frames: usize,
    pub ranks: Vec<usize>,
    pub lines_per_frame: Vec<usize>,
    pub trials: usize,
    /// Relative Frobenius error at or below which a trial succeeds.
    pub success_threshold: f64,
    pub psf: Psf,
    pub strategy: SamplingStrategy,
    /// Iteration limits and tolerances; the mode's lambda is ignored.
    pub solver: SolverConfig,
    /// Width of the isotropic Gaussian used to smooth the instance's spatial
    /// factors; 0 leaves them white.
    pub instance_smoothing_px: f64,
    /// Lambda as a fraction of the instance's zero-solution threshold.
    pub lambda_rel: f64,
    pub seed: u64,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let min_dim = self.grid.pixels().min(self.frames);
        if self.trials == 0 {
            return Err(NoraError::Config("trials must be >= 1".into()));
        }
        if self.ranks.iter().any(|&r| r == 0 || r > min_dim) {
            return Err(NoraError::Config(format!("ranks must be in [1, {min_dim}]")));
        }
        let h = self.grid.height_lines;
        if self.lines_per_frame.iter().any(|&l| l == 0 || l > h) {
            return Err(NoraError::Config(format!("lines per frame must be in [1, {h}]")));
        }
        if !(self.instance_smoothing_px >= 0.0) {
            return Err(NoraError::Config("instance smoothing must be >= 0".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(NoraError::Config("success threshold must be positive".into()));
        }
        if !(self.lambda_rel > 0.0 && self.lambda_rel < 1.0) {
            return Err(NoraError::Config("lambda_rel must be in (0, 1)".into()));
        }
        let mut solver = self.solver.clone();
        solver.mode = SolverMode::Lagrangian { lambda: 1.0 };
        solver.validate()
    }

    pub fn trial_seed(&self, rank: usize, lines: usize, trial: usize) -> u64 {
        crate::rng::derive_seed(self.seed, &[rank as u64, lines as u64, trial as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    /// `None` when the solve failed.
    pub rel_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub rank: usize,
    pub lines_per_frame: usize,
    pub trials: Vec<TrialOutcome>,
    pub success_fraction: f64,
    /// Mean over trials that produced a solution; NaN if none did.
    pub mean_rel_error: f64,
}

impl PhaseCell {
    fn from_trials(rank: usize, lines_per_frame: usize, trials: Vec<TrialOutcome>, threshold: f64) -> Self {
        let errors: Vec<f64> = trials.iter().filter_map(|t| t.rel_error).collect();
        let successes = errors.iter().filter(|&&e| e <= threshold).count();
        let mean_rel_error = if errors.is_empty() {
            f64::NAN
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        };
        PhaseCell {
            rank,
            lines_per_frame,
            success_fraction: successes as f64 / trials.len() as f64,
            mean_rel_error,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramResult {
    pub cells: Vec<PhaseCell>,
    pub success_threshold: f64,
    pub seed: u64,
}

impl PhaseDiagramResult {
    pub fn cell(&self, rank: usize, lines: usize) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.rank == rank && c.lines_per_frame == lines)
    }

    /// Smallest lines-per-frame whose success fraction reaches
    /// [`BOUNDARY_SUCCESS`] at this rank.
    pub fn boundary(&self, rank: usize) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.rank == rank && c.success_fraction >= BOUNDARY_SUCCESS)
            .map(|c| c.lines_per_frame)
            .min()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cells.iter().map(|c| c.rank).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// `R,Lprime,success_fraction,mean_rel_error`, sorted by rank then lines.
    pub fn to_csv(&self) -> String {
        let mut cells: Vec<&PhaseCell> = self.cells.iter().collect();
        cells.sort_by_key(|c| (c.rank, c.lines_per_frame));
        let mut s = String::from("R,Lprime,success_fraction,mean_rel_error\n");
        for c in cells {
            s.push_str(&format!(
                "{},{},{},{}\n",
                c.rank, c.lines_per_frame, c.success_fraction, c.mean_rel_error
            ));
        }
        s
    }
}

/// Random rank-`rank` `N x T` matrix with unit-RMS entries. The spatial
/// factors are white Gaussian, optionally smoothed by a circular Gaussian of
/// width `smoothing_px`.
pub fn low_rank_instance(grid: FrameGrid, frames: usize, rank: usize, smoothing_px: f64, seed: u64) -> Result<DMatrix<f64>> {
    let pixels = grid.pixels();
    let mut rng = crate::rng::seeded(seed);
    let mut left = DMatrix::<f64>::from_fn(pixels, rank, |_, _| StandardNormal.sample(&mut rng));
    if smoothing_px > 0.0 {
        let kernel = Psf::gaussian(smoothing_px, smoothing_px, DEFAULT_TRUNCATION_SIGMAS)?;
        let mut out = vec![0.0; pixels];
        for mut col in left.column_iter_mut() {
            convolve_into(col.as_slice(), &grid, &kernel, &mut out);
            col.copy_from_slice(&out);
        }
    }
    let right = DMatrix::<f64>::from_fn(rank, frames, |_, _| StandardNormal.sample(&mut rng));
    let x: DMatrix<f64> = left * right;
    let rms = x.norm() / ((pixels * frames) as f64).sqrt();
    Ok(if rms > 0.0 { x / rms } else { x })
}

/// One noiseless trial: generate, acquire, solve, score.
pub fn run_trial(config: &PhaseConfig, rank: usize, lines: usize, trial: usize) -> TrialOutcome {
    let seed = config.trial_seed(rank, lines, trial);
    match trial_error(config, rank, lines, seed) {
        Ok(e) => TrialOutcome {
            seed,
            rel_error: Some(e),
            error: None,
        },
        Err(e) => TrialOutcome {
            seed,
            rel_error: None,
            error: Some(e.to_string()),
        },
    }
}

fn trial_error(config: &PhaseConfig, rank: usize, lines: usize, seed: u64) -> Result<f64> {
    let grid = config.grid;
    let x = low_rank_instance(grid, config.frames, rank, config.instance_smoothing_px, seed)?;
    let plan = generate_plan(grid, config.frames, lines, config.strategy, crate::rng::derive_seed(seed, &[1]))?;
    let model = ForwardModel::new(config.psf.clone(), plan.clone(), grid)?;
    let y = MeasurementSet::new(plan, model.apply(&x)?)?;
    let lambda = config.lambda_rel * lambda_max(&model, &y.data)?;
    let mut solver = config.solver.clone();
    solver.mode = SolverMode::Lagrangian { lambda };
    solver.seed = crate::rng::derive_seed(seed, &[2]);
    let (x_hat, _) = solve_lagrangian(&y, &model, &solver)?;
    relative_error(&x_hat.data, &x)
}

/// All trials of one cell, in parallel.
pub fn run_cell(config: &PhaseConfig, rank: usize, lines: usize) -> PhaseCell {
    let trials: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, rank, lines, trial))
        .collect();
    PhaseCell::from_trials(rank, lines, trials, config.success_threshold)
}

/// Every `(rank, lines, trial)` task runs in parallel; failed solves are
/// recorded in their cell rather than aborting the scan.
pub fn phase_diagram(config: &PhaseConfig) -> Result<PhaseDiagramResult> {
    config.validate()?;
    let tasks: Vec<(usize, usize, usize)> = config
        .ranks
        .iter()
        .flat_map(|&r| {
            config
                .lines_per_frame
                .iter()
                .flat_map(move |&l| (0..config.trials).map(move |k| (r, l, k)))
        })
        .collect();
    let outcomes: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|&(r, l, k)| run_trial(config, r, l, k))
        .collect();
    let cells = outcomes
        .chunks(config.trials)
        .zip(tasks.chunks(config.trials))
        .map(|(chunk, keys)| PhaseCell::from_trials(keys[0].0, keys[0].1, chunk.to_vec(), config.success_threshold))
        .collect();
    Ok(PhaseDiagramResult {
        cells,
        success_threshold: config.success_threshold,
        seed: config.seed,
    })
}
