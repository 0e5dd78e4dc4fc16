use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::phantom::scene::Scene;
use crate::video::VideoMatrix;

/// `X[:, t] = sum_k footprint_k * trace_k[t] + background`; rank at most `K + 1`.
pub fn render_clean(scene: &Scene, traces: &DMatrix<f64>) -> Result<VideoMatrix> {
    if traces.nrows() != scene.cells() {
        return Err(NoraError::Shape(format!(
            "{} traces for {} cells",
            traces.nrows(),
            scene.cells()
        )));
    }
    let mut data = &scene.footprints * traces;
    for mut col in data.column_iter_mut() {
        col += &scene.background;
    }
    VideoMatrix::new(scene.grid, data)
}
