use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{NoraError, Result};
use crate::video::VideoMatrix;

/// Median over a `(lines, pixels, frames)` box around every voxel, with
/// edge-replicated borders.
pub fn median_filter_3d(x: &VideoMatrix, window: (usize, usize, usize)) -> Result<VideoMatrix> {
    let (wh, ww, wt) = window;
    if wh % 2 == 0 || ww % 2 == 0 || wt % 2 == 0 {
        return Err(NoraError::Argument(format!(
            "window dimensions must be odd, got {wh}x{ww}x{wt}"
        )));
    }
    let (h, w, t) = (x.grid.height_lines, x.grid.width_pixels, x.frames());
    let n = x.grid.pixels();
    let (rh, rw, rt) = ((wh / 2) as i64, (ww / 2) as i64, (wt / 2) as i64);
    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
    let src = x.data.as_slice();
    let mut out = DMatrix::zeros(n, t);
    if t == 0 {
        return Ok(VideoMatrix { grid: x.grid, data: out });
    }
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(f, dst)| {
            let mut buf = Vec::with_capacity(wh * ww * wt);
            for line in 0..h {
                for pixel in 0..w {
                    buf.clear();
                    for df in -rt..=rt {
                        let ff = clamp(f as i64 + df, t);
                        let frame = &src[ff * n..(ff + 1) * n];
                        for dl in -rh..=rh {
                            let ll = clamp(line as i64 + dl, h);
                            for dp in -rw..=rw {
                                let pp = clamp(pixel as i64 + dp, w);
                                buf.push(frame[ll * w + pp]);
                            }
                        }
                    }
                    let mid = buf.len() / 2;
                    let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
                    dst[line * w + pixel] = *m;
                }
            }
        });
    Ok(VideoMatrix { grid: x.grid, data: out })
}
