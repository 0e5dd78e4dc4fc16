use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::video::VideoMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionModel {
    /// Per-frame rigid shift standard deviation (both axes), pixels.
    pub rigid_sigma_px: f64,
    /// Per-line fast-scan jitter standard deviation, pixels.
    pub line_jitter_sigma_px: f64,
    pub seed: u64,
}

/// Circularly shift each frame by a rounded Gaussian rigid offset, then shift
/// each line along the fast axis by its own rounded Gaussian jitter.
///
/// Every step is a permutation of a frame's pixels, so per-frame sums are
/// preserved exactly.
pub fn apply_motion(x: &VideoMatrix, motion: &MotionModel) -> Result<VideoMatrix> {
    if !(motion.rigid_sigma_px >= 0.0 && motion.line_jitter_sigma_px >= 0.0) {
        return Err(NoraError::Argument("motion sigmas must be >= 0".into()));
    }
    let (h, w) = (x.grid.height_lines, x.grid.width_pixels);
    let mut rng = crate::rng::seeded(motion.seed);
    let mut draw = |sigma: f64| -> i64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        (sigma * z).round() as i64
    };
    let mut out = DMatrix::zeros(x.grid.pixels(), x.frames());
    for t in 0..x.frames() {
        let dy = draw(motion.rigid_sigma_px);
        let dx = draw(motion.rigid_sigma_px);
        let src = x.frame_slice(t);
        let mut dst = out.column_mut(t);
        for line in 0..h {
            let jitter = draw(motion.line_jitter_sigma_px);
            let src_line = (line as i64 - dy).rem_euclid(h as i64) as usize;
            for pixel in 0..w {
                let src_pixel = (pixel as i64 - dx - jitter).rem_euclid(w as i64) as usize;
                dst[line * w + pixel] = src[src_line * w + src_pixel];
            }
        }
    }
    Ok(VideoMatrix { grid: x.grid, data: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::gaussian_matrix;
    use crate::video::{numerical_rank, FrameGrid};

    fn video(seed: u64) -> VideoMatrix {
        let grid = FrameGrid::new(8, 6, 1.0, 30.0).unwrap();
        VideoMatrix::new(grid, gaussian_matrix(48, 5, seed)).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let v = video(1);
        assert_eq!(apply_motion(&v, &MotionModel::default()).unwrap(), v);
    }

    #[test]
    fn rigid_only_gives_exact_circular_shifts() {
        let v = video(2);
        let m = MotionModel {
            rigid_sigma_px: 3.0,
            line_jitter_sigma_px: 0.0,
            seed: 5,
        };
        let out = apply_motion(&v, &m).unwrap();
        for t in 0..v.frames() {
            let (src, dst) = (v.frame(t), out.frame(t));
            let found = (0..8).any(|dy| {
                (0..6).any(|dx| {
                    (0..8).all(|y| (0..6).all(|x| dst[(y, x)] == src[((y + 8 - dy) % 8, (x + 6 - dx) % 6)]))
                })
            });
            assert!(found, "frame {t} is not a circular shift");
        }
    }

    #[test]
    fn frame_sums_preserved() {
        let v = video(3);
        let m = MotionModel {
            rigid_sigma_px: 2.0,
            line_jitter_sigma_px: 1.5,
            seed: 8,
        };
        let out = apply_motion(&v, &m).unwrap();
        for t in 0..v.frames() {
            let mut a: Vec<f64> = v.frame_slice(t).to_vec();
            let mut b: Vec<f64> = out.frame_slice(t).to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn motion_raises_rank_of_low_rank_video() {
        let grid = FrameGrid::new(16, 16, 1.0, 30.0).unwrap();
        let mut raised = 0;
        for seed in 0..20 {
            let x = gaussian_matrix(256, 3, seed) * gaussian_matrix(3, 40, seed + 100);
            let v = VideoMatrix::new(grid, x).unwrap();
            let m = MotionModel {
                rigid_sigma_px: 1.0,
                line_jitter_sigma_px: 0.0,
                seed,
            };
            let moved = apply_motion(&v, &m).unwrap();
            if numerical_rank(&moved.data, 1e-8) > numerical_rank(&v.data, 1e-8) {
                raised += 1;
            }
        }
        assert!(raised >= 18, "rank increased on {raised}/20 seeds");
    }
}
