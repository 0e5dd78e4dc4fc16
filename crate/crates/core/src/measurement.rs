use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::operators::plan::SamplingPlan;

/// Observed measurements `Y` (`L'*W` by `T`), tied to the plan that made them.
///
/// Column `t` stacks the `W` pixels of each sampled line of frame `t` in
/// ascending line order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub plan: SamplingPlan,
    pub data: DMatrix<f64>,
}

impl MeasurementSet {
    pub fn new(plan: SamplingPlan, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != plan.measurements_per_frame() || data.ncols() != plan.frames() {
            return Err(NoraError::Shape(format!(
                "measurements are {}x{}, plan expects {}x{}",
                data.nrows(),
                data.ncols(),
                plan.measurements_per_frame(),
                plan.frames()
            )));
        }
        Ok(MeasurementSet { plan, data })
    }

    pub fn zeros(plan: SamplingPlan) -> Self {
        let data = DMatrix::zeros(plan.measurements_per_frame(), plan.frames());
        MeasurementSet { plan, data }
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    /// Total scalar samples `M = T * L' * W`.
    pub fn total_samples(&self) -> usize {
        self.data.len()
    }

    pub fn slice_frames(&self, start: usize, end: usize) -> MeasurementSet {
        MeasurementSet {
            plan: self.plan.slice_frames(start, end),
            data: self.data.columns(start, end - start).into_owned(),
        }
    }
}
