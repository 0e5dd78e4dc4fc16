//! The acquisition operator `A(X) = S(B X)` and its adjoint.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::blur::{convolve_line, scatter_line};
use crate::operators::plan::SamplingPlan;
use crate::operators::psf::Psf;
use crate::video::{FrameGrid, VideoMatrix};

/// Blur with `psf`, then keep the lines listed in `plan` for each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModel {
    pub psf: Psf,
    pub plan: SamplingPlan,
    pub grid: FrameGrid,
}

impl ForwardModel {
    pub fn new(psf: Psf, plan: SamplingPlan, grid: FrameGrid) -> Result<Self> {
        grid.validate()?;
        if !plan.grid.same_shape(&grid) {
            return Err(NoraError::Config(format!(
                "plan grid {}x{} does not match model grid {}x{}",
                plan.grid.height_lines, plan.grid.width_pixels, grid.height_lines, grid.width_pixels
            )));
        }
        if psf.rows() > grid.height_lines || psf.cols() > grid.width_pixels {
            return Err(NoraError::Config(format!(
                "PSF kernel {}x{} does not fit in a {}x{} frame",
                psf.rows(),
                psf.cols(),
                grid.height_lines,
                grid.width_pixels
            )));
        }
        plan.validate()?;
        Ok(ForwardModel { psf, plan, grid })
    }

    pub fn frames(&self) -> usize {
        self.plan.frames()
    }

    /// Model restricted to frames `start..end`.
    pub fn slice_frames(&self, start: usize, end: usize) -> ForwardModel {
        ForwardModel {
            plan: self.plan.slice_frames(start, end),
            ..self.clone()
        }
    }

    /// `A(X)` on a raw `N x T` matrix.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.grid.pixels();
        if x.nrows() != n || x.ncols() != self.frames() {
            return Err(NoraError::Shape(format!(
                "operator expects {}x{}, got {}x{}",
                n,
                self.frames(),
                x.nrows(),
                x.ncols()
            )));
        }
        let w = self.grid.width_pixels;
        let mf = self.plan.measurements_per_frame();
        let mut out = DMatrix::zeros(mf, self.frames());
        if mf == 0 || self.frames() == 0 {
            return Ok(out);
        }
        out.as_mut_slice()
            .par_chunks_mut(mf)
            .zip(x.as_slice().par_chunks(n))
            .zip(self.plan.line_indices.par_iter())
            .for_each(|((column, frame), lines)| {
                for (slot, &line) in column.chunks_mut(w).zip(lines) {
                    convolve_line(frame, &self.grid, &self.psf, line, slot);
                }
            });
        Ok(out)
    }

    /// `A^T(Y)` on a raw `L'W x T` matrix.
    pub fn adjoint(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.grid.pixels();
        let mf = self.plan.measurements_per_frame();
        if y.nrows() != mf || y.ncols() != self.frames() {
            return Err(NoraError::Shape(format!(
                "adjoint expects {}x{}, got {}x{}",
                mf,
                self.frames(),
                y.nrows(),
                y.ncols()
            )));
        }
        let w = self.grid.width_pixels;
        let mut out = DMatrix::zeros(n, self.frames());
        if self.frames() == 0 {
            return Ok(out);
        }
        out.as_mut_slice()
            .par_chunks_mut(n)
            .zip(y.as_slice().par_chunks(mf.max(1)))
            .zip(self.plan.line_indices.par_iter())
            .for_each(|((frame, column), lines)| {
                for (values, &line) in column.chunks(w).zip(lines) {
                    scatter_line(values, &self.grid, &self.psf, line, frame);
                }
            });
        Ok(out)
    }

    /// `A^T(A(X))`.
    pub fn normal(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.adjoint(&self.apply(x)?)
    }

    /// Explicit `(L'W) x N` matrix of `S_t B` for frame `t`; small problems only.
    pub fn dense_frame_operator(&self, t: usize) -> DMatrix<f64> {
        let n = self.grid.pixels();
        let mf = self.plan.measurements_per_frame();
        let w = self.grid.width_pixels;
        let mut dense = DMatrix::zeros(mf, n);
        let mut basis = vec![0.0; n];
        let mut line_out = vec![0.0; w];
        for col in 0..n {
            basis[col] = 1.0;
            for (r, &line) in self.plan.line_indices[t].iter().enumerate() {
                convolve_line(&basis, &self.grid, &self.psf, line, &mut line_out);
                for (p, &v) in line_out.iter().enumerate() {
                    dense[(r * w + p, col)] = v;
                }
            }
            basis[col] = 0.0;
        }
        dense
    }

    fn check_video(&self, x: &VideoMatrix) -> Result<()> {
        if !x.grid.same_shape(&self.grid) {
            return Err(NoraError::Shape("video grid does not match model grid".into()));
        }
        if x.frames() != self.frames() {
            return Err(NoraError::Shape(format!(
                "video has {} frames, plan has {}",
                x.frames(),
                self.frames()
            )));
        }
        Ok(())
    }
}

/// Noise-free acquisition: blur each frame, then gather its planned lines.
pub fn forward_apply(x: &VideoMatrix, model: &ForwardModel) -> Result<MeasurementSet> {
    model.check_video(x)?;
    MeasurementSet::new(model.plan.clone(), model.apply(&x.data)?)
}

/// Exact adjoint of [`forward_apply`].
pub fn adjoint_apply(y: &MeasurementSet, model: &ForwardModel) -> Result<VideoMatrix> {
    if y.plan.line_indices != model.plan.line_indices {
        return Err(NoraError::Shape("measurement plan does not match model plan".into()));
    }
    Ok(VideoMatrix {
        grid: model.grid,
        data: model.adjoint(&y.data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::plan::{generate_plan, SamplingStrategy};
    use crate::testutil::gaussian_matrix;

    fn model(h: usize, w: usize, t: usize, l: usize, psf: Psf) -> ForwardModel {
        let grid = FrameGrid::new(h, w, 1.0, 30.0).unwrap();
        let plan = generate_plan(grid, t, l, SamplingStrategy::UniformRandom, 3).unwrap();
        ForwardModel::new(psf, plan, grid).unwrap()
    }

    #[test]
    fn full_plan_delta_psf_is_identity() {
        let m = model(6, 5, 3, 6, Psf::delta());
        let x = gaussian_matrix(30, 3, 1);
        // all lines sorted ascending, so the permutation is the identity
        assert_eq!(m.apply(&x).unwrap(), x);
        assert_eq!(m.normal(&x).unwrap(), x);
    }

    #[test]
    fn zero_in_zero_out() {
        let m = model(8, 8, 4, 2, Psf::gaussian(0.5, 1.0, 3.0).unwrap());
        assert!(m.apply(&DMatrix::zeros(64, 4)).unwrap().iter().all(|&v| v == 0.0));
        assert!(m.adjoint(&DMatrix::zeros(16, 4)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_dense_operator() {
        let kernel = DMatrix::from_column_slice(3, 1, &[0.25, 0.5, 0.25]);
        let m = model(8, 8, 4, 2, Psf::from_kernel(kernel).unwrap());
        let x = gaussian_matrix(64, 4, 2);
        let y = m.apply(&x).unwrap();
        for t in 0..4 {
            let want = m.dense_frame_operator(t) * x.column(t);
            let err = (y.column(t) - &want).norm() / want.norm();
            assert!(err <= 1e-12, "frame {t}: {err}");
        }
    }

    #[test]
    fn rejects_oversized_kernel_and_mismatched_plan() {
        let grid = FrameGrid::new(4, 4, 1.0, 30.0).unwrap();
        let plan = generate_plan(grid, 2, 2, SamplingStrategy::UniformRandom, 0).unwrap();
        let big = Psf::gaussian(0.0, 2.0, 4.0).unwrap();
        assert!(matches!(ForwardModel::new(big, plan.clone(), grid), Err(NoraError::Config(_))));
        let other = FrameGrid::new(5, 4, 1.0, 30.0).unwrap();
        assert!(ForwardModel::new(Psf::delta(), plan, other).is_err());
    }

    #[test]
    fn shape_errors() {
        let m = model(4, 4, 2, 1, Psf::delta());
        assert!(m.apply(&DMatrix::zeros(16, 3)).is_err());
        assert!(m.adjoint(&DMatrix::zeros(5, 2)).is_err());
    }
}
