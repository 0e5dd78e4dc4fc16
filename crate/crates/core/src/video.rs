//! Frame grids, the pixels-by-time video matrix, and the vectorization
//! convention shared by every operator.
//!
//! A frame of `H` slow-scan lines by `W` fast-scan pixels is flattened
//! line-major: pixel `(line, pixel)` lands at index `line * W + pixel`, so a
//! scanned line is one contiguous block of the frame vector.

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGrid {
    /// Number of slow-scan lines (`H`).
    pub height_lines: usize,
    /// Number of fast-scan pixels per line (`W`).
    pub width_pixels: usize,
    pub pixel_pitch_um: f64,
    pub frame_rate_hz: f64,
}

impl FrameGrid {
    pub fn new(
        height_lines: usize,
        width_pixels: usize,
        pixel_pitch_um: f64,
        frame_rate_hz: f64,
    ) -> Result<Self> {
        let grid = FrameGrid {
            height_lines,
            width_pixels,
            pixel_pitch_um,
            frame_rate_hz,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// A grid with unit pitch and a 30 Hz frame rate.
    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side, 1.0, 30.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height_lines == 0 || self.width_pixels == 0 {
            return Err(NoraError::Argument(format!(
                "frame grid must be at least 1x1, got {}x{}",
                self.height_lines, self.width_pixels
            )));
        }
        if !(self.pixel_pitch_um > 0.0 && self.pixel_pitch_um.is_finite()) {
            return Err(NoraError::Argument(format!(
                "pixel pitch must be positive, got {}",
                self.pixel_pitch_um
            )));
        }
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return Err(NoraError::Argument(format!(
                "frame rate must be positive, got {}",
                self.frame_rate_hz
            )));
        }
        Ok(())
    }

    /// Pixels per frame, `N = H * W`.
    #[inline]
    pub fn pixels(&self) -> usize {
        self.height_lines * self.width_pixels
    }

    #[inline]
    pub fn index(&self, line: usize, pixel: usize) -> usize {
        line * self.width_pixels + pixel
    }

    /// True when the two grids describe the same pixel lattice.
    pub fn same_shape(&self, other: &FrameGrid) -> bool {
        self.height_lines == other.height_lines && self.width_pixels == other.width_pixels
    }
}

/// Flatten an `H x W` frame into a length-`N` vector, line-major.
pub fn frame_to_vector(frame: &DMatrix<f64>, grid: &FrameGrid) -> Result<DVector<f64>> {
    if frame.nrows() != grid.height_lines || frame.ncols() != grid.width_pixels {
        return Err(NoraError::Shape(format!(
            "frame is {}x{}, grid is {}x{}",
            frame.nrows(),
            frame.ncols(),
            grid.height_lines,
            grid.width_pixels
        )));
    }
    // nalgebra is column-major, so the transpose's storage is line-major.
    Ok(DVector::from_column_slice(frame.transpose().as_slice()))
}

/// Inverse of [`frame_to_vector`].
pub fn vector_to_frame(vector: &[f64], grid: &FrameGrid) -> Result<DMatrix<f64>> {
    if vector.len() != grid.pixels() {
        return Err(NoraError::Shape(format!(
            "vector has {} entries, grid has {} pixels",
            vector.len(),
            grid.pixels()
        )));
    }
    Ok(DMatrix::from_row_slice(
        grid.height_lines,
        grid.width_pixels,
        vector,
    ))
}

/// The pixels-by-time matrix `X`: column `t` is frame `t` vectorized.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoMatrix {
    pub grid: FrameGrid,
    pub data: DMatrix<f64>,
}

impl VideoMatrix {
    pub fn new(grid: FrameGrid, data: DMatrix<f64>) -> Result<Self> {
        grid.validate()?;
        if data.nrows() != grid.pixels() {
            return Err(NoraError::Shape(format!(
                "video has {} rows, grid has {} pixels",
                data.nrows(),
                grid.pixels()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NoraError::Argument("video contains non-finite entries".into()));
        }
        Ok(VideoMatrix { grid, data })
    }

    pub fn zeros(grid: FrameGrid, frames: usize) -> Self {
        VideoMatrix {
            grid,
            data: DMatrix::zeros(grid.pixels(), frames),
        }
    }

    /// Build from a list of `H x W` frames.
    pub fn from_frames(grid: FrameGrid, frames: &[DMatrix<f64>]) -> Result<Self> {
        let mut data = DMatrix::zeros(grid.pixels(), frames.len());
        for (t, frame) in frames.iter().enumerate() {
            data.set_column(t, &frame_to_vector(frame, &grid)?);
        }
        VideoMatrix::new(grid, data)
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    pub fn frame(&self, t: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            self.grid.height_lines,
            self.grid.width_pixels,
            self.data.column(t).as_slice(),
        )
    }

    pub fn frame_slice(&self, t: usize) -> &[f64] {
        let n = self.grid.pixels();
        &self.data.as_slice()[t * n..(t + 1) * n]
    }

    /// Frames `start..end` as a new video.
    pub fn slice_frames(&self, start: usize, end: usize) -> VideoMatrix {
        VideoMatrix {
            grid: self.grid,
            data: self.data.columns(start, end - start).into_owned(),
        }
    }

    pub fn view(&self) -> DMatrixView<'_, f64> {
        self.data.as_view()
    }

    pub fn check_same_shape(&self, other: &VideoMatrix) -> Result<()> {
        if !self.grid.same_shape(&other.grid) || self.frames() != other.frames() {
            return Err(NoraError::Shape(format!(
                "videos differ: {}x{}x{} vs {}x{}x{}",
                self.grid.height_lines,
                self.grid.width_pixels,
                self.frames(),
                other.grid.height_lines,
                other.grid.width_pixels,
                other.frames()
            )));
        }
        Ok(())
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(matrix: &DMatrix<f64>, rel_tol: f64) -> usize {
    if matrix.is_empty() {
        return 0;
    }
    let Ok(sv) = crate::solver::svd::singular_values(matrix) else {
        return 0;
    };
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_is_row_major() {
        let grid = FrameGrid::new(2, 2, 1.0, 30.0).unwrap();
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = frame_to_vector(&f, &grid).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zero_frame() {
        let grid = FrameGrid::new(3, 5, 1.0, 30.0).unwrap();
        let v = frame_to_vector(&DMatrix::zeros(3, 5), &grid).unwrap();
        assert_eq!(v.len(), 15);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_frame_is_shape_error() {
        let grid = FrameGrid::new(3, 5, 1.0, 30.0).unwrap();
        let err = frame_to_vector(&DMatrix::zeros(5, 3), &grid).unwrap_err();
        assert!(matches!(err, NoraError::Shape(_)));
        assert!(vector_to_frame(&[0.0; 14], &grid).is_err());
    }

    #[test]
    fn invalid_grids() {
        assert!(FrameGrid::new(0, 4, 1.0, 30.0).is_err());
        assert!(FrameGrid::new(4, 4, 0.0, 30.0).is_err());
        assert!(FrameGrid::new(4, 4, 1.0, -1.0).is_err());
    }

    #[test]
    fn frame_accessor_matches_columns() {
        let grid = FrameGrid::new(2, 3, 1.0, 30.0).unwrap();
        let frames = vec![
            DMatrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64),
            DMatrix::from_fn(2, 3, |i, j| -((i * 3 + j) as f64)),
        ];
        let video = VideoMatrix::from_frames(grid, &frames).unwrap();
        assert_eq!(video.frame(1), frames[1]);
        assert_eq!(video.frame_slice(0), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    proptest::proptest! {
        #[test]
        fn vectorization_round_trips(h in 1usize..9, w in 1usize..9, seed in 0u64..1000) {
            let grid = FrameGrid::new(h, w, 1.0, 30.0).unwrap();
            let f = DMatrix::from_fn(h, w, |i, j| ((i * 31 + j * 17) as u64 ^ seed) as f64 * 0.25);
            let v = frame_to_vector(&f, &grid).unwrap();
            for i in 0..h {
                for j in 0..w {
                    proptest::prop_assert_eq!(v[i * w + j], f[(i, j)]);
                }
            }
            proptest::prop_assert_eq!(vector_to_frame(v.as_slice(), &grid).unwrap(), f);
        }
    }
}
