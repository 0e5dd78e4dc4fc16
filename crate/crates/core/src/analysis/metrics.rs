use nalgebra::DMatrix;

use crate::error::{NoraError, Result};

/// Peak signal-to-noise ratio in dB, peak taken from the reference.
///
/// Returns `f64::INFINITY` when the inputs are identical.
pub fn psnr(estimate: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != reference.shape() {
        return Err(NoraError::Shape(format!(
            "psnr inputs differ: {:?} vs {:?}",
            estimate.shape(),
            reference.shape()
        )));
    }
    if reference.is_empty() {
        return Err(NoraError::Shape("psnr of empty matrices".into()));
    }
    let mse = (estimate - reference).norm_squared() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// `||estimate - reference||_F / ||reference||_F`.
pub fn relative_error(estimate: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != reference.shape() {
        return Err(NoraError::Shape(format!(
            "inputs differ: {:?} vs {:?}",
            estimate.shape(),
            reference.shape()
        )));
    }
    let denom = reference.norm();
    let num = (estimate - reference).norm();
    Ok(if denom > 0.0 { num / denom } else if num == 0.0 { 0.0 } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::gaussian_matrix;

    #[test]
    fn identical_is_infinite() {
        let a = gaussian_matrix(4, 4, 0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn forty_db() {
        let mut reference = DMatrix::zeros(10, 10);
        reference[(0, 0)] = 1.0;
        // MSE = 1e-4 from a uniform 0.01 offset
        let estimate = reference.add_scalar(0.01);
        let p = psnr(&estimate, &reference).unwrap();
        assert!((p - 40.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn shifts_lower_psnr() {
        let reference = gaussian_matrix(16, 8, 2);
        let shifted = DMatrix::from_fn(16, 8, |i, j| reference[((i + 1) % 16, j)]);
        let noisy = &reference + gaussian_matrix(16, 8, 3) * 1e-3;
        assert!(psnr(&shifted, &reference).unwrap() < psnr(&noisy, &reference).unwrap());
        assert!(psnr(&shifted, &reference).unwrap().is_finite());
    }

    #[test]
    fn shape_mismatch() {
        assert!(psnr(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 3)).is_err());
    }
}
