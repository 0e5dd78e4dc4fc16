//! Thin SVDs with a deterministic sign convention, a randomized partial SVD,
//! and singular value thresholding.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NoraError, Result};

/// Oversampling used by the randomized range finder.
pub const OVERSAMPLING: usize = 8;
/// Subspace (power) iterations used by the randomized range finder.
pub const POWER_ITERATIONS: usize = 2;
/// At or below this smaller dimension [`partial_svd`] computes a full SVD.
pub const FULL_SVD_CUTOFF: usize = 64;

/// `M ~= U diag(s) V^T` with `U: m x r`, `V: n x r`, `s` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        scaled_product(&self.u, self.singular_values.as_slice(), &self.v)
    }

    fn truncate(self, r: usize) -> Svd {
        let r = r.min(self.rank());
        Svd {
            u: self.u.columns(0, r).into_owned(),
            singular_values: self.singular_values.rows(0, r).into_owned(),
            v: self.v.columns(0, r).into_owned(),
        }
    }

    /// Flip each triplet so the largest-magnitude entry of its left vector is
    /// positive (first such entry on ties).
    fn fix_signs(mut self) -> Svd {
        for k in 0..self.rank() {
            let col = self.u.column(k);
            let mut best = 0;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < 0.0 {
                self.u.column_mut(k).neg_mut();
                self.v.column_mut(k).neg_mut();
            }
        }
        self
    }
}

/// `U diag(s) V^T`, skipping zero weights.
fn scaled_product(u: &DMatrix<f64>, s: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] != 0.0).collect();
    if keep.is_empty() {
        return DMatrix::zeros(u.nrows(), v.nrows());
    }
    let us = DMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])] * s[keep[j]]);
    let vk = v.select_columns(&keep);
    us * vk.transpose()
}

fn svd_error(m: &DMatrix<f64>) -> NoraError {
    NoraError::Svd {
        rows: m.nrows(),
        cols: m.ncols(),
        max_abs: m.amax(),
    }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD of `m`, singular values descending, signs fixed.
pub fn full_svd(m: &DMatrix<f64>) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(svd_error(m));
    }
    let svd = to_faer(m).thin_svd().map_err(|_| svd_error(m))?;
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u = from_faer(svd.U());
    let v = from_faer(svd.V());
    Ok(Svd {
        u: u.select_columns(&order),
        singular_values: DVector::from_iterator(order.len(), order.iter().map(|&k| s[k])),
        v: v.select_columns(&order),
    }
    .fix_signs())
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(svd_error(m));
    }
    let mut s = to_faer(m).singular_values().map_err(|_| svd_error(m))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Leading `rank_cap` singular triplets.
///
/// Uses a randomized range finder ([`OVERSAMPLING`] extra columns,
/// [`POWER_ITERATIONS`] subspace iterations) unless the smaller dimension is
/// at most [`FULL_SVD_CUTOFF`], in which case it truncates a full SVD.
pub fn partial_svd(m: &DMatrix<f64>, rank_cap: usize, seed: u64) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let min_dim = rows.min(cols);
    if rank_cap == 0 || rank_cap > min_dim {
        return Err(NoraError::Argument(format!(
            "rank cap must be in [1, {min_dim}], got {rank_cap}"
        )));
    }
    if min_dim <= FULL_SVD_CUTOFF || rank_cap + OVERSAMPLING >= min_dim {
        return Ok(full_svd(m)?.truncate(rank_cap));
    }
    let width = rank_cap + OVERSAMPLING;
    let mut rng = crate::rng::seeded(seed);
    let omega = DMatrix::from_fn(cols, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(m * omega);
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormal_basis(m.tr_mul(&q));
        q = orthonormal_basis(m * z);
    }
    let b = q.tr_mul(m);
    let inner = full_svd(&b)?;
    let svd = Svd {
        u: q * inner.u,
        ..inner
    };
    Ok(svd.truncate(rank_cap).fix_signs())
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Result of a thresholding step: the matrix and its surviving singular values.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl Thresholded {
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }

    /// Count of singular values above `1e-8 * sigma_1`.
    pub fn rank(&self) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > 1e-8 * top && s > 0.0).count()
    }
}

/// Soft-threshold singular values, optionally through a rank-capped SVD.
pub fn svt_capped(m: &DMatrix<f64>, tau: f64, rank_cap: Option<usize>, seed: u64) -> Result<Thresholded> {
    if !(tau >= 0.0) {
        return Err(NoraError::Argument(format!("threshold must be >= 0, got {tau}")));
    }
    let min_dim = m.nrows().min(m.ncols());
    let svd = match rank_cap {
        Some(cap) if cap < min_dim => partial_svd(m, cap.max(1), seed)?,
        _ => full_svd(m)?,
    };
    let shrunk: Vec<f64> = svd.singular_values.iter().map(|&s| (s - tau).max(0.0)).collect();
    let matrix = scaled_product(&svd.u, &shrunk, &svd.v);
    let singular_values = shrunk.into_iter().filter(|&s| s > 0.0).collect();
    Ok(Thresholded {
        matrix,
        singular_values,
    })
}

/// Proximal map of `tau * ||.||_*`: `U max(S - tau, 0) V^T`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau == 0.0 {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(svd_error(m));
        }
        return Ok(m.clone());
    }
    Ok(svt_capped(m, tau, None, 0)?.matrix)
}

/// Sum of singular values; NaN if the decomposition fails.
pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).map(|s| s.iter().sum()).unwrap_or(f64::NAN)
}

/// Largest singular value; NaN if the decomposition fails.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m)
        .map(|s| s.first().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN)
}
