//! Circular 2D convolution on line-major frames.
//!
//! Boundaries wrap, so the blur is a block-circulant operator: it commutes
//! with circular shifts and its adjoint is correlation with the same kernel.

use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::operators::psf::Psf;
use crate::video::FrameGrid;

/// Convolve an `H x W` frame with the PSF kernel, wrapping at the edges.
pub fn blur_frame(frame: &DMatrix<f64>, psf: &Psf) -> Result<DMatrix<f64>> {
    let grid = frame_grid(frame)?;
    let input = crate::video::frame_to_vector(frame, &grid)?;
    let mut out = vec![0.0; grid.pixels()];
    convolve_into(input.as_slice(), &grid, psf, &mut out);
    crate::video::vector_to_frame(&out, &grid)
}

/// Correlate an `H x W` frame with the PSF kernel (the adjoint of [`blur_frame`]).
pub fn correlate_frame(frame: &DMatrix<f64>, psf: &Psf) -> Result<DMatrix<f64>> {
    let grid = frame_grid(frame)?;
    let input = crate::video::frame_to_vector(frame, &grid)?;
    let mut out = vec![0.0; grid.pixels()];
    correlate_into(input.as_slice(), &grid, psf, &mut out);
    crate::video::vector_to_frame(&out, &grid)
}

fn frame_grid(frame: &DMatrix<f64>) -> Result<FrameGrid> {
    if frame.is_empty() {
        return Err(NoraError::Shape("empty frame".into()));
    }
    FrameGrid::new(frame.nrows(), frame.ncols(), 1.0, 1.0)
}

/// Blurred values of one output line, written to `out` (length `W`).
pub(crate) fn convolve_line(input: &[f64], grid: &FrameGrid, psf: &Psf, line: usize, out: &mut [f64]) {
    let (h, w) = (grid.height_lines, grid.width_pixels);
    let (ch, cw) = psf.center();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..psf.rows() {
        let src_line = (line + h * (psf.rows() + 1) + ch - i) % h;
        let row = &input[src_line * w..(src_line + 1) * w];
        for j in 0..psf.cols() {
            let k = psf.kernel[(i, j)];
            if k == 0.0 {
                continue;
            }
            // out[p] += k * row[(p + cw - j) mod W]
            let shift = (w * (psf.cols() + 1) + cw - j) % w;
            let (head, tail) = row.split_at(shift);
            let (out_a, out_b) = out.split_at_mut(w - shift);
            for (o, &x) in out_a.iter_mut().zip(tail) {
                *o += k * x;
            }
            for (o, &x) in out_b.iter_mut().zip(head) {
                *o += k * x;
            }
        }
    }
}

/// Accumulate the adjoint of [`convolve_line`]: scatter `values` (one line)
/// back through the kernel into `out`.
pub(crate) fn scatter_line(values: &[f64], grid: &FrameGrid, psf: &Psf, line: usize, out: &mut [f64]) {
    let (h, w) = (grid.height_lines, grid.width_pixels);
    let (ch, cw) = psf.center();
    for i in 0..psf.rows() {
        let dst_line = (line + h * (psf.rows() + 1) + ch - i) % h;
        let row = &mut out[dst_line * w..(dst_line + 1) * w];
        for j in 0..psf.cols() {
            let k = psf.kernel[(i, j)];
            if k == 0.0 {
                continue;
            }
            // row[(p + cw - j) mod W] += k * values[p]
            let shift = (w * (psf.cols() + 1) + cw - j) % w;
            let (head, tail) = row.split_at_mut(shift);
            let (va, vb) = values.split_at(w - shift);
            for (o, &v) in tail.iter_mut().zip(va) {
                *o += k * v;
            }
            for (o, &v) in head.iter_mut().zip(vb) {
                *o += k * v;
            }
        }
    }
}

pub(crate) fn convolve_into(input: &[f64], grid: &FrameGrid, psf: &Psf, out: &mut [f64]) {
    let w = grid.width_pixels;
    for (line, chunk) in out.chunks_mut(w).enumerate() {
        convolve_line(input, grid, psf, line, chunk);
    }
}

pub(crate) fn correlate_into(input: &[f64], grid: &FrameGrid, psf: &Psf, out: &mut [f64]) {
    let (h, w) = (grid.height_lines, grid.width_pixels);
    let (ch, cw) = psf.center();
    out.iter_mut().for_each(|v| *v = 0.0);
    for line in 0..h {
        let dst = &mut out[line * w..(line + 1) * w];
        for i in 0..psf.rows() {
            // out[line, p] += k[i, j] * in[line + i - ch, p + j - cw]
            let src_line = (line + i + h * (psf.rows() + 1) - ch) % h;
            let row = &input[src_line * w..(src_line + 1) * w];
            for j in 0..psf.cols() {
                let k = psf.kernel[(i, j)];
                if k == 0.0 {
                    continue;
                }
                let shift = (j + w * (psf.cols() + 1) - cw) % w;
                let (head, tail) = row.split_at(shift);
                let (da, db) = dst.split_at_mut(w - shift);
                for (o, &x) in da.iter_mut().zip(tail) {
                    *o += k * x;
                }
                for (o, &x) in db.iter_mut().zip(head) {
                    *o += k * x;
                }
            }
        }
    }
}
