//! Coherence of a video's left singular subspace with shifted PSF copies.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::operators::blur::correlate_into;
use crate::operators::psf::Psf;
use crate::solver::svd::full_svd;
use crate::video::VideoMatrix;

/// Singular values below this fraction of the largest count as zero when
/// checking the requested rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `(N/R) max_n ||U^T b_n||^2` where `U` holds the top `rank` left singular
/// vectors of `x` and `b_n` is the PSF kernel centered at pixel `n`.
///
/// The kernel is used as stored; [`coherence_report`] evaluates both the
/// unit-sum and unit-energy normalizations.
pub fn coherence_mu_b(x: &VideoMatrix, psf: &Psf, rank: usize) -> Result<f64> {
    let u = leading_subspace(x, rank)?;
    Ok(coherence_of_basis(&u, x, psf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub rank: usize,
    pub mu_b2_unit_sum: f64,
    pub mu_b2_unit_energy: f64,
    /// Squared norm of the unit-sum kernel.
    pub eta: f64,
}

pub fn coherence_report(x: &VideoMatrix, psf: &Psf, rank: usize) -> Result<CoherenceReport> {
    let u = leading_subspace(x, rank)?;
    let sum = psf.kernel.sum();
    let unit_sum = Psf::from_kernel(&psf.kernel / sum)?;
    let unit_energy = psf.unit_energy();
    Ok(CoherenceReport {
        rank,
        mu_b2_unit_sum: coherence_of_basis(&u, x, &unit_sum),
        mu_b2_unit_energy: coherence_of_basis(&u, x, &unit_energy),
        eta: unit_sum.eta,
    })
}

fn leading_subspace(x: &VideoMatrix, rank: usize) -> Result<DMatrix<f64>> {
    let svd = full_svd(&x.data)?;
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let numerical = svd.singular_values.iter().filter(|&&s| s > RANK_TOLERANCE * top).count();
    if rank == 0 || rank > numerical {
        return Err(NoraError::Argument(format!(
            "rank must be in [1, {numerical}] (numerical rank), got {rank}"
        )));
    }
    Ok(svd.u.columns(0, rank).into_owned())
}

fn coherence_of_basis(u: &DMatrix<f64>, x: &VideoMatrix, psf: &Psf) -> f64 {
    let grid = x.grid;
    let n = grid.pixels();
    // correlating u_r with the kernel yields <u_r, b_n> for every n at once
    let mut energy = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for col in u.column_iter() {
        let col: Vec<f64> = col.iter().copied().collect();
        correlate_into(&col, &grid, psf, &mut buf);
        for (e, v) in energy.iter_mut().zip(&buf) {
            *e += v * v;
        }
    }
    let max = energy.iter().copied().fold(0.0, f64::max);
    n as f64 / u.ncols() as f64 * max
}
