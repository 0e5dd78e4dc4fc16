//! Profile-assisted least squares: per-frame projection of a video onto
//! known spatial footprints.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::phantom::scene::Scene;
use crate::video::VideoMatrix;

/// Ridge weight, relative to `trace(P^T P)`, used when `P` is rank deficient.
pub const PALS_RIDGE: f64 = 1e-8;

/// `K x T` activity traces with cell identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub traces: DMatrix<f64>,
    pub cell_ids: Vec<usize>,
    pub frame_rate_hz: f64,
}

impl TraceSet {
    pub fn new(traces: DMatrix<f64>, frame_rate_hz: f64) -> Result<Self> {
        if traces.iter().any(|v| !v.is_finite()) {
            return Err(NoraError::Argument("traces must be finite".into()));
        }
        let cell_ids = (0..traces.nrows()).collect();
        Ok(TraceSet {
            traces,
            cell_ids,
            frame_rate_hz,
        })
    }

    pub fn cells(&self) -> usize {
        self.traces.nrows()
    }

    pub fn frames(&self) -> usize {
        self.traces.ncols()
    }

    /// CSV with header `cell_id,t0,t1,...`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell_id");
        for t in 0..self.frames() {
            s.push_str(&format!(",t{t}"));
        }
        s.push('\n');
        for (k, id) in self.cell_ids.iter().enumerate() {
            s.push_str(&id.to_string());
            for v in self.traces.row(k).iter() {
                s.push(',');
                s.push_str(&format!("{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Least-squares footprint and background coefficients per frame; returns the
/// `K` footprint rows.
pub fn pals_traces(x_hat: &VideoMatrix, scene: &Scene) -> Result<TraceSet> {
    if !x_hat.grid.same_shape(&scene.grid) {
        return Err(NoraError::Shape("video grid does not match scene grid".into()));
    }
    let k = scene.cells();
    let n = scene.grid.pixels();
    let mut profiles = DMatrix::zeros(n, k + 1);
    profiles.columns_mut(0, k).copy_from(&scene.footprints);
    profiles.set_column(k, &scene.background);

    let gram = profiles.tr_mul(&profiles);
    let rhs = profiles.tr_mul(&x_hat.data);
    let coeffs = match well_conditioned_cholesky(&gram) {
        Some(chol) => chol.solve(&rhs),
        None => {
            log::warn!("profile matrix is rank deficient; using a ridge-regularized solve");
            let ridge = PALS_RIDGE * gram.trace().max(f64::MIN_POSITIVE);
            let reg = &gram + DMatrix::identity(k + 1, k + 1) * ridge;
            Cholesky::new(reg)
                .ok_or_else(|| NoraError::Argument("profile matrix is degenerate".into()))?
                .solve(&rhs)
        }
    };
    TraceSet::new(coeffs.rows(0, k).into_owned(), x_hat.grid.frame_rate_hz)
}

fn well_conditioned_cholesky(gram: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(gram.clone())?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    // squared ratio of Cholesky pivots bounds the conditioning from below
    if hi == 0.0 || (lo / hi).powi(2) < 1e-12 {
        None
    } else {
        Some(chol)
    }
}
