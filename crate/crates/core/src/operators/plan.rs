//! Per-frame line-subsampling plans.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::video::FrameGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Independent uniform draw of distinct lines for every frame.
    UniformRandom,
    /// Evenly spaced lines whose common offset advances by one line per frame.
    RotatingEvenlySpaced,
}

impl SamplingStrategy {
    pub fn code(self) -> u64 {
        match self {
            SamplingStrategy::UniformRandom => 1,
            SamplingStrategy::RotatingEvenlySpaced => 2,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            1 => Some(SamplingStrategy::UniformRandom),
            2 => Some(SamplingStrategy::RotatingEvenlySpaced),
            _ => None,
        }
    }
}

impl std::str::FromStr for SamplingStrategy {
    type Err = NoraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_random" | "uniform" | "UniformRandom" => Ok(SamplingStrategy::UniformRandom),
            "rotating_evenly_spaced" | "rotating" | "RotatingEvenlySpaced" => {
                Ok(SamplingStrategy::RotatingEvenlySpaced)
            }
            other => Err(NoraError::Config(format!("unknown sampling strategy `{other}`"))),
        }
    }
}

/// Which slow-scan lines are acquired at each frame.
///
/// Each list is sorted ascending; that order fixes the layout of the
/// measurement columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub grid: FrameGrid,
    pub lines_per_frame: usize,
    pub line_indices: Vec<Vec<usize>>,
    pub strategy: SamplingStrategy,
    pub seed: u64,
    /// Absolute index of the first frame; non-zero for batch slices.
    pub frame_offset: usize,
}

impl SamplingPlan {
    #[inline]
    pub fn frames(&self) -> usize {
        self.line_indices.len()
    }

    /// Scalar measurements per frame, `L' * W`.
    #[inline]
    pub fn measurements_per_frame(&self) -> usize {
        self.lines_per_frame * self.grid.width_pixels
    }

    /// Total scalar measurements over the whole plan.
    pub fn total_measurements(&self) -> usize {
        self.measurements_per_frame() * self.frames()
    }

    /// Frames `start..end` as a standalone plan.
    pub fn slice_frames(&self, start: usize, end: usize) -> SamplingPlan {
        SamplingPlan {
            line_indices: self.line_indices[start..end].to_vec(),
            frame_offset: self.frame_offset + start,
            ..self.clone()
        }
    }

    /// Regenerate from the recorded strategy, seed and dimensions.
    pub fn regenerate(&self) -> Result<SamplingPlan> {
        let full = generate_plan(
            self.grid,
            self.frame_offset + self.frames(),
            self.lines_per_frame,
            self.strategy,
            self.seed,
        )?;
        Ok(full.slice_frames(self.frame_offset, self.frame_offset + self.frames()))
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.grid.height_lines;
        for (t, lines) in self.line_indices.iter().enumerate() {
            if lines.len() != self.lines_per_frame {
                return Err(NoraError::Argument(format!(
                    "frame {t} has {} lines, expected {}",
                    lines.len(),
                    self.lines_per_frame
                )));
            }
            if lines.windows(2).any(|w| w[0] >= w[1]) || lines.iter().any(|&l| l >= h) {
                return Err(NoraError::Argument(format!(
                    "frame {t} lines must be strictly ascending and below {h}"
                )));
            }
        }
        Ok(())
    }
}

/// Build a plan of `frames` frames with `lines_per_frame` lines each.
///
/// `RotatingEvenlySpaced` places line `j` at `floor(j*H/L') + o_t` with
/// `o_t = t mod ceil(H/L')`. When `L'` divides `H` this is the plain
/// `o_t + j*(H/L')` comb; otherwise the floor spacing still keeps every
/// line in range and covers all `H` lines every `ceil(H/L')` frames.
pub fn generate_plan(
    grid: FrameGrid,
    frames: usize,
    lines_per_frame: usize,
    strategy: SamplingStrategy,
    seed: u64,
) -> Result<SamplingPlan> {
    grid.validate()?;
    let h = grid.height_lines;
    if lines_per_frame == 0 || lines_per_frame > h {
        return Err(NoraError::Argument(format!(
            "lines per frame must be in [1, {h}], got {lines_per_frame}"
        )));
    }
    let line_indices = match strategy {
        SamplingStrategy::UniformRandom => uniform_random_lines(h, frames, lines_per_frame, seed),
        SamplingStrategy::RotatingEvenlySpaced => rotating_lines(h, frames, lines_per_frame),
    };
    Ok(SamplingPlan {
        grid,
        lines_per_frame,
        line_indices,
        strategy,
        seed,
        frame_offset: 0,
    })
}

fn rotating_lines(h: usize, frames: usize, l: usize) -> Vec<Vec<usize>> {
    let period = h.div_ceil(l);
    (0..frames)
        .map(|t| {
            let offset = t % period;
            (0..l).map(|j| j * h / l + offset).collect()
        })
        .collect()
}

fn uniform_random_lines(h: usize, frames: usize, l: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut draw = || {
            let mut lines = index::sample(&mut rng, h, l).into_vec();
            lines.sort_unstable();
            lines
        };
        let mut lines = draw();
        if l < h {
            if let Some(prev) = out.last() {
                let mut tries = 0;
                while &lines == prev && tries < 64 {
                    lines = draw();
                    tries += 1;
                }
                if &lines == prev {
                    let mut shifted: Vec<usize> = lines.iter().map(|&x| (x + 1) % h).collect();
                    shifted.sort_unstable();
                    lines = shifted;
                }
            }
        }
        out.push(lines);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn grid(h: usize) -> FrameGrid {
        FrameGrid::new(h, 4, 1.0, 30.0).unwrap()
    }

    #[test]
    fn rotating_h8_l2() {
        let p = generate_plan(grid(8), 4, 2, SamplingStrategy::RotatingEvenlySpaced, 0).unwrap();
        assert_eq!(p.line_indices[0], vec![0, 4]);
        assert_eq!(p.line_indices[1], vec![1, 5]);
        let union: BTreeSet<usize> = p.line_indices.iter().flatten().copied().collect();
        assert_eq!(union, (0..8).collect());
    }

    #[test]
    fn rotating_coverage_when_lines_do_not_divide_height() {
        for (h, l) in [(32usize, 3usize), (8, 3), (8, 5), (17, 4), (10, 7), (16, 16), (5, 1)] {
            let period = h.div_ceil(l);
            let p =
                generate_plan(grid(h), 3 * period, l, SamplingStrategy::RotatingEvenlySpaced, 0)
                    .unwrap();
            p.validate().unwrap();
            for start in 0..period {
                let union: BTreeSet<usize> = p.line_indices[start..start + period]
                    .iter()
                    .flatten()
                    .copied()
                    .collect();
                assert_eq!(union.len(), h, "h={h} l={l}");
            }
            if l < h {
                for w in p.line_indices.windows(2) {
                    assert_ne!(w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn uniform_is_deterministic_and_valid() {
        let a = generate_plan(grid(64), 100, 6, SamplingStrategy::UniformRandom, 1).unwrap();
        let b = generate_plan(grid(64), 100, 6, SamplingStrategy::UniformRandom, 1).unwrap();
        let c = generate_plan(grid(64), 100, 6, SamplingStrategy::UniformRandom, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.line_indices, c.line_indices);
        a.validate().unwrap();
    }

    #[test]
    fn uniform_consecutive_frames_differ_even_when_nearly_full() {
        let p = generate_plan(grid(4), 500, 3, SamplingStrategy::UniformRandom, 9).unwrap();
        for w in p.line_indices.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn out_of_range_lines_per_frame() {
        assert!(generate_plan(grid(8), 4, 0, SamplingStrategy::UniformRandom, 0).is_err());
        assert!(generate_plan(grid(8), 4, 9, SamplingStrategy::UniformRandom, 0).is_err());
    }

    #[test]
    fn slices_regenerate() {
        let p = generate_plan(grid(16), 40, 3, SamplingStrategy::UniformRandom, 5).unwrap();
        let s = p.slice_frames(10, 25);
        assert_eq!(s.regenerate().unwrap(), s);
        assert_eq!(s.line_indices[0], p.line_indices[10]);
    }
}
