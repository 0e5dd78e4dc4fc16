//! Elongated Gaussian point-spread functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};

/// `2 * sqrt(2 ln 2)`, the FWHM of a unit-sigma Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Default truncation radius, in standard deviations.
pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 4.0;

/// A sampled 2D blur kernel.
///
/// Rows run along the slow-scan axis, columns along the fast-scan axis. Both
/// dimensions are odd and the kernel's center tap is at `(rows/2, cols/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psf {
    pub kernel: DMatrix<f64>,
    pub sigma_fast_px: f64,
    pub sigma_slow_px: f64,
    pub sum_normalized: bool,
    /// Squared Euclidean norm of the kernel.
    pub eta: f64,
}

impl Psf {
    /// The 1x1 identity kernel.
    pub fn delta() -> Self {
        Psf {
            kernel: DMatrix::from_element(1, 1, 1.0),
            sigma_fast_px: 0.0,
            sigma_slow_px: 0.0,
            sum_normalized: true,
            eta: 1.0,
        }
    }

    /// Gaussian kernel from per-axis standard deviations in pixels.
    ///
    /// A zero sigma collapses that axis to a single tap.
    pub fn gaussian(sigma_fast_px: f64, sigma_slow_px: f64, truncation_sigmas: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma_fast_px", sigma_fast_px),
            ("sigma_slow_px", sigma_slow_px),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NoraError::Argument(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(truncation_sigmas > 0.0 && truncation_sigmas.is_finite()) {
            return Err(NoraError::Argument(format!(
                "truncation must be positive, got {truncation_sigmas}"
            )));
        }
        let slow = gaussian_taps(sigma_slow_px, truncation_sigmas);
        let fast = gaussian_taps(sigma_fast_px, truncation_sigmas);
        let mut kernel = DMatrix::from_fn(slow.len(), fast.len(), |i, j| slow[i] * fast[j]);
        let total = kernel.sum();
        kernel /= total;
        Ok(Psf::from_parts(kernel, sigma_fast_px, sigma_slow_px, true))
    }

    /// Wrap an arbitrary nonnegative, odd-sized kernel.
    pub fn from_kernel(kernel: DMatrix<f64>) -> Result<Self> {
        if kernel.nrows() % 2 == 0 || kernel.ncols() % 2 == 0 {
            return Err(NoraError::Argument(format!(
                "kernel dimensions must be odd, got {}x{}",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        if kernel.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(NoraError::Argument("kernel entries must be finite and >= 0".into()));
        }
        if kernel.iter().all(|&v| v == 0.0) {
            return Err(NoraError::Argument("kernel is identically zero".into()));
        }
        let sum_normalized = (kernel.sum() - 1.0).abs() < 1e-12;
        Ok(Psf::from_parts(kernel, f64::NAN, f64::NAN, sum_normalized))
    }

    fn from_parts(kernel: DMatrix<f64>, sigma_fast_px: f64, sigma_slow_px: f64, sum_normalized: bool) -> Self {
        let eta = kernel.norm_squared();
        Psf {
            kernel,
            sigma_fast_px,
            sigma_slow_px,
            sum_normalized,
            eta,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.kernel.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.kernel.ncols()
    }

    #[inline]
    pub fn center(&self) -> (usize, usize) {
        (self.kernel.nrows() / 2, self.kernel.ncols() / 2)
    }

    /// The same shape rescaled to unit Euclidean norm.
    pub fn unit_energy(&self) -> Psf {
        let kernel = &self.kernel / self.eta.sqrt();
        Psf {
            eta: 1.0,
            sum_normalized: false,
            kernel,
            ..*self
        }
    }

    pub fn is_delta(&self) -> bool {
        self.rows() == 1 && self.cols() == 1
    }
}

/// Build a PSF from physical FWHMs along the fast and slow axes.
pub fn make_gaussian_psf(
    fwhm_fast_um: f64,
    fwhm_slow_um: f64,
    pixel_pitch_um: f64,
    truncation_sigmas: f64,
) -> Result<Psf> {
    if !(pixel_pitch_um > 0.0 && pixel_pitch_um.is_finite()) {
        return Err(NoraError::Argument(format!(
            "pixel pitch must be positive, got {pixel_pitch_um}"
        )));
    }
    if !(fwhm_fast_um >= 0.0 && fwhm_slow_um >= 0.0) {
        return Err(NoraError::Argument(format!(
            "FWHM must be >= 0, got fast {fwhm_fast_um}, slow {fwhm_slow_um}"
        )));
    }
    Psf::gaussian(
        fwhm_to_sigma_px(fwhm_fast_um, pixel_pitch_um),
        fwhm_to_sigma_px(fwhm_slow_um, pixel_pitch_um),
        truncation_sigmas,
    )
}

#[inline]
pub fn fwhm_to_sigma_px(fwhm_um: f64, pixel_pitch_um: f64) -> f64 {
    fwhm_um / FWHM_PER_SIGMA / pixel_pitch_um
}

fn gaussian_taps(sigma: f64, truncation_sigmas: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let half = (truncation_sigmas * sigma).ceil() as i64;
    (-half..=half)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn slow_sigma_from_fwhm() {
        let psf = make_gaussian_psf(1.15, 3.35, 1.0, 4.0).unwrap();
        let expected = 3.35 / (2.0 * (2.0 * 2f64.ln()).sqrt());
        assert!(close(psf.sigma_slow_px, expected, 1e-14));
        assert!(close(psf.sigma_slow_px, 1.4227, 1e-4));
        // ceil(4 * 1.4227) = 6 taps either side.
        assert_eq!(psf.rows(), 13);
    }

    #[test]
    fn unit_sigma_from_matching_fwhm() {
        let psf = make_gaussian_psf(2.0 * FWHM_PER_SIGMA, 2.0 * FWHM_PER_SIGMA, 2.0, 4.0).unwrap();
        assert!(close(psf.sigma_fast_px, 1.0, 1e-15));
        assert!(close(psf.sigma_slow_px, 1.0, 1e-15));
        assert_eq!((psf.rows(), psf.cols()), (9, 9));
    }

    #[test]
    fn zero_fwhm_is_delta() {
        let psf = make_gaussian_psf(0.0, 0.0, 1.0, 4.0).unwrap();
        assert!(psf.is_delta());
        assert_eq!(psf.kernel[(0, 0)], 1.0);
        assert_eq!(psf.eta, 1.0);
    }

    #[test]
    fn kernel_invariants() {
        let psf = Psf::gaussian(0.7, 2.1, 4.0).unwrap();
        assert!(psf.rows() % 2 == 1 && psf.cols() % 2 == 1);
        assert!(close(psf.kernel.sum(), 1.0, 1e-14));
        assert!(psf.kernel.iter().all(|&v| v >= 0.0));
        let (r, c) = (psf.rows(), psf.cols());
        for i in 0..r {
            for j in 0..c {
                assert!(close(psf.kernel[(i, j)], psf.kernel[(r - 1 - i, c - 1 - j)], 1e-17));
            }
        }
        assert!(close(psf.eta, psf.kernel.norm_squared(), 0.0));
        assert!(psf.eta > 0.0 && psf.eta < 1.0);
        assert!(close(psf.unit_energy().kernel.norm(), 1.0, 1e-14));
    }

    #[test]
    fn truncated_mass_is_negligible() {
        // Mass beyond 4 sigma of a continuous Gaussian is about 6e-5.
        let sigma: f64 = 1.5;
        let half = (4.0 * sigma).ceil() as i64;
        let wide: f64 = (-60i64..=60).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).sum();
        let kept: f64 = (-half..=half).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).sum();
        assert!((wide - kept) / wide < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_gaussian_psf(1.0, 1.0, 0.0, 4.0).is_err());
        assert!(make_gaussian_psf(-1.0, 1.0, 1.0, 4.0).is_err());
        assert!(Psf::from_kernel(DMatrix::from_element(2, 1, 0.5)).is_err());
        assert!(Psf::from_kernel(DMatrix::from_element(3, 1, -0.5)).is_err());
    }
}
