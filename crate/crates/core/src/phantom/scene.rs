use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::operators::blur::convolve_into;
use crate::operators::psf::Psf;
use crate::video::{FrameGrid, VideoMatrix};

/// Width of the Gaussian roll-off outside each ellipse, in pixels.
pub const EDGE_SOFTNESS_PX: f64 = 1.5;
/// Neuropil peak as a fraction of the footprint peak.
pub const BACKGROUND_PEAK: f64 = 0.1;
const PLACEMENT_TRIES: usize = 2000;

/// Spatial components of a synthetic field of view.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: FrameGrid,
    /// `N x K`, column `k` is footprint `k` vectorized; each has unit maximum.
    pub footprints: DMatrix<f64>,
    /// Length-`N` smooth neuropil map.
    pub background: DVector<f64>,
    pub seed: u64,
}

/// One placed cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center_line: f64,
    pub center_pixel: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub angle: f64,
}

impl Ellipse {
    fn extent(&self) -> f64 {
        self.semi_major.max(self.semi_minor)
    }

    /// Unit plateau inside, Gaussian roll-off outside.
    fn value(&self, line: f64, pixel: f64) -> f64 {
        let (dy, dx) = (line - self.center_line, pixel - self.center_pixel);
        let (s, c) = self.angle.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        let rho = ((u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2)).sqrt();
        if rho <= 1.0 {
            return 1.0;
        }
        let dist = (rho - 1.0) * 0.5 * (self.semi_major + self.semi_minor);
        if dist > 4.0 * EDGE_SOFTNESS_PX {
            return 0.0;
        }
        (-dist * dist / (2.0 * EDGE_SOFTNESS_PX * EDGE_SOFTNESS_PX)).exp()
    }
}

impl Scene {
    pub fn cells(&self) -> usize {
        self.footprints.ncols()
    }

    pub fn footprint(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            self.grid.height_lines,
            self.grid.width_pixels,
            self.footprints.column(k).as_slice(),
        )
    }

    pub fn background_frame(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            self.grid.height_lines,
            self.grid.width_pixels,
            self.background.as_slice(),
        )
    }

    /// Footprints followed by the background, as a `K+1`-frame video.
    pub fn to_video(&self) -> VideoMatrix {
        let k = self.cells();
        let mut data = DMatrix::zeros(self.grid.pixels(), k + 1);
        data.columns_mut(0, k).copy_from(&self.footprints);
        data.set_column(k, &self.background);
        VideoMatrix {
            grid: self.grid,
            data,
        }
    }

    /// Inverse of [`Scene::to_video`].
    pub fn from_video(video: &VideoMatrix, seed: u64) -> Result<Scene> {
        if video.frames() == 0 {
            return Err(NoraError::Shape("scene video needs a background frame".into()));
        }
        let k = video.frames() - 1;
        Ok(Scene {
            grid: video.grid,
            footprints: video.data.columns(0, k).into_owned(),
            background: video.data.column(k).into_owned(),
            seed,
        })
    }
}

/// Place `cells` soft-edged ellipses with non-overlapping cores and add a
/// smooth neuropil background.
pub fn gen_scene(grid: FrameGrid, cells: usize, radius_px_range: (f64, f64), seed: u64) -> Result<Scene> {
    grid.validate()?;
    let (r_min, r_max) = radius_px_range;
    let limit = grid.height_lines.min(grid.width_pixels) as f64 / 2.0;
    if !(r_min > 0.0 && r_min <= r_max && r_max < limit) {
        return Err(NoraError::Argument(format!(
            "radius range ({r_min}, {r_max}) must satisfy 0 < min <= max < {limit}"
        )));
    }
    let mut rng = crate::rng::seeded(seed);
    let (h, w) = (grid.height_lines as f64, grid.width_pixels as f64);
    let mut placed: Vec<Ellipse> = Vec::with_capacity(cells);
    for k in 0..cells {
        let mut ok = false;
        for _ in 0..PLACEMENT_TRIES {
            let a = rng.random_range(r_min..=r_max);
            let b = rng.random_range(r_min..=r_max);
            let e = Ellipse {
                center_line: rng.random_range(r_max..=(h - 1.0 - r_max).max(r_max)),
                center_pixel: rng.random_range(r_max..=(w - 1.0 - r_max).max(r_max)),
                semi_major: a.max(b),
                semi_minor: a.min(b),
                angle: rng.random_range(0.0..std::f64::consts::PI),
            };
            let clear = placed.iter().all(|o| {
                let d = ((o.center_line - e.center_line).powi(2) + (o.center_pixel - e.center_pixel).powi(2)).sqrt();
                d >= o.extent() + e.extent()
            });
            if clear {
                placed.push(e);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(NoraError::Capacity(format!(
                "placed {k} of {cells} cells on a {}x{} grid before running out of room",
                grid.height_lines, grid.width_pixels
            )));
        }
    }

    let n = grid.pixels();
    let mut footprints = DMatrix::zeros(n, cells);
    for (k, e) in placed.iter().enumerate() {
        let mut col = footprints.column_mut(k);
        for line in 0..grid.height_lines {
            for pixel in 0..grid.width_pixels {
                col[grid.index(line, pixel)] = e.value(line as f64, pixel as f64);
            }
        }
    }

    let background = smooth_background(&grid, &mut rng)?;
    Ok(Scene {
        grid,
        footprints,
        background,
        seed,
    })
}

fn smooth_background(grid: &FrameGrid, rng: &mut impl Rng) -> Result<DVector<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let n = grid.pixels();
    let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let sigma = grid.height_lines.max(grid.width_pixels) as f64 / 8.0;
    let lowpass = Psf::gaussian(sigma, sigma, 3.0)?;
    let mut smooth = vec![0.0; n];
    convolve_into(&noise, grid, &lowpass, &mut smooth);
    let lo = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let bg = if span > 0.0 {
        smooth.iter().map(|v| (v - lo) / span * BACKGROUND_PEAK).collect()
    } else {
        vec![BACKGROUND_PEAK; n]
    };
    Ok(DVector::from_vec(bg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn components_above(frame: &DMatrix<f64>, level: f64) -> usize {
        let (h, w) = frame.shape();
        let mut seen = vec![false; h * w];
        let mut count = 0;
        for start in 0..h * w {
            if seen[start] || frame[(start / w, start % w)] <= level {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(p) = stack.pop() {
                let (y, x) = ((p / w) as i64, (p % w) as i64);
                for (dy, dx) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if !seen[q] && frame[(ny as usize, nx as usize)] > level {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn background_only_scene() {
        let s = gen_scene(FrameGrid::square(16).unwrap(), 0, (2.0, 3.0), 1).unwrap();
        assert_eq!(s.cells(), 0);
        assert!(s.background.iter().all(|&v| (0.0..=BACKGROUND_PEAK + 1e-15).contains(&v)));
        assert!((s.background.max() - BACKGROUND_PEAK).abs() < 1e-15);
    }

    #[test]
    fn one_cell_one_component() {
        let s = gen_scene(FrameGrid::square(32).unwrap(), 1, (3.0, 3.0), 7).unwrap();
        let f = s.footprint(0);
        assert_eq!(components_above(&f, 0.5), 1);
        assert!((f.max() - 1.0).abs() < 1e-15);
        assert!(f.min() >= 0.0);
    }

    #[test]
    fn deterministic() {
        let g = FrameGrid::square(24).unwrap();
        assert_eq!(gen_scene(g, 4, (2.0, 4.0), 3).unwrap(), gen_scene(g, 4, (2.0, 4.0), 3).unwrap());
        assert_ne!(gen_scene(g, 4, (2.0, 4.0), 3).unwrap(), gen_scene(g, 4, (2.0, 4.0), 4).unwrap());
    }

    #[test]
    fn capacity_error_when_crowded() {
        let err = gen_scene(FrameGrid::square(16).unwrap(), 40, (3.0, 3.5), 0).unwrap_err();
        assert!(matches!(err, NoraError::Capacity(_)));
    }

    #[test]
    fn radius_validation() {
        let g = FrameGrid::square(16).unwrap();
        assert!(gen_scene(g, 1, (0.0, 2.0), 0).is_err());
        assert!(gen_scene(g, 1, (3.0, 2.0), 0).is_err());
        assert!(gen_scene(g, 1, (2.0, 8.0), 0).is_err());
    }

    #[test]
    fn video_round_trip() {
        let s = gen_scene(FrameGrid::square(16).unwrap(), 3, (2.0, 3.0), 2).unwrap();
        assert_eq!(Scene::from_video(&s.to_video(), 2).unwrap(), s);
    }
}
