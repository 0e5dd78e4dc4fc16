//! Sample-complexity and error-bound formulas for nuclear-norm recovery
//! through shifted-PSF measurements.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremInputs {
    /// Pixels per frame.
    pub pixels: usize,
    pub frames: usize,
    /// Number of scalar measurements.
    pub measurements: usize,
    pub rank: usize,
    pub mu_b2: f64,
    /// Per-entry noise level.
    pub eps_noise: f64,
    pub beta: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub sample_requirement: f64,
    pub error_bound: f64,
}

/// `C beta R (T mu + N) ln^2(N T)`.
pub fn sample_requirement(pixels: usize, frames: usize, rank: usize, mu_b2: f64, beta: f64, constant: f64) -> f64 {
    let (n, t) = (pixels as f64, frames as f64);
    constant * beta * rank as f64 * (t * mu_b2 + n) * (n * t).ln().powi(2)
}

/// `4 sqrt(min(T, N) (2 N T + M) / M) eps`.
pub fn error_bound(pixels: usize, frames: usize, measurements: usize, eps_noise: f64) -> f64 {
    let (n, t, m) = (pixels as f64, frames as f64, measurements as f64);
    4.0 * (n.min(t) * (2.0 * n * t + m) / m).sqrt() * eps_noise
}

pub fn theorem_bounds(inputs: &TheoremInputs) -> TheoremBounds {
    TheoremBounds {
        sample_requirement: sample_requirement(
            inputs.pixels,
            inputs.frames,
            inputs.rank,
            inputs.mu_b2,
            inputs.beta,
            inputs.constant,
        ),
        error_bound: error_bound(inputs.pixels, inputs.frames, inputs.measurements, inputs.eps_noise),
    }
}
