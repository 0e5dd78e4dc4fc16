use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::forward::ForwardModel;
use crate::solver::config::{SolveReport, SolverConfig};
use crate::video::VideoMatrix;

/// Default frames per independently solved batch.
pub const DEFAULT_BATCH_FRAMES: usize = 500;

/// Split the frames into consecutive batches of at most `batch_frames`,
/// solve each independently (in parallel), and concatenate.
pub fn solve_batched(
    y: &MeasurementSet,
    model: &ForwardModel,
    config: &SolverConfig,
    batch_frames: usize,
) -> Result<(VideoMatrix, Vec<SolveReport>)> {
    if batch_frames == 0 {
        return Err(NoraError::Config("batch size must be >= 1".into()));
    }
    let t = model.frames();
    let bounds: Vec<(usize, usize)> = (0..t)
        .step_by(batch_frames)
        .map(|s| (s, (s + batch_frames).min(t)))
        .collect();
    let results: Vec<Result<(VideoMatrix, SolveReport)>> = bounds
        .par_iter()
        .map(|&(s, e)| {
            let sub_y = y.slice_frames(s, e);
            let sub_model = model.slice_frames(s, e);
            crate::solver::solve(&sub_y, &sub_model, config)
        })
        .collect();
    let mut data = DMatrix::zeros(model.grid.pixels(), t);
    let mut reports = Vec::with_capacity(bounds.len());
    for (&(s, e), result) in bounds.iter().zip(results) {
        let (x, report) = result?;
        data.columns_mut(s, e - s).copy_from(&x.data);
        reports.push(report);
    }
    Ok((VideoMatrix { grid: model.grid, data }, reports))
}
