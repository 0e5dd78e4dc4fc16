use nalgebra::DMatrix;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;

/// Poisson-Gaussian detector noise: `Poisson(gain * y) / gain + N(0, sigma^2) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Photon counts per fluorescence unit; zero disables shot noise and
    /// the signal itself.
    pub photon_gain: f64,
    pub gaussian_sigma: f64,
    pub offset: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// Split a target per-entry SNR (`mean_signal / noise_std`) evenly between
    /// shot-noise and read-noise variance at the mean signal level.
    pub fn for_snr(mean_signal: f64, snr: f64, seed: u64) -> Result<Self> {
        if !(mean_signal > 0.0 && snr > 0.0) {
            return Err(NoraError::Argument(format!(
                "need positive mean signal and SNR, got {mean_signal} and {snr}"
            )));
        }
        let total_var = (mean_signal / snr).powi(2);
        Ok(NoiseModel {
            photon_gain: mean_signal / (0.5 * total_var),
            gaussian_sigma: (0.5 * total_var).sqrt(),
            offset: 0.0,
            seed,
        })
    }

    /// Noise standard deviation at signal level `y`.
    pub fn std_at(&self, y: f64) -> f64 {
        let shot = if self.photon_gain > 0.0 {
            y.max(0.0) / self.photon_gain
        } else {
            0.0
        };
        (shot + self.gaussian_sigma.powi(2)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.photon_gain >= 0.0 && self.gaussian_sigma >= 0.0 && self.offset.is_finite()) {
            return Err(NoraError::Argument("noise gain and sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Noisy copy of `clean` plus the number of negative entries clamped to zero.
pub fn apply_noise_matrix(clean: &DMatrix<f64>, noise: &NoiseModel) -> Result<(DMatrix<f64>, usize)> {
    noise.validate()?;
    let mut rng = crate::rng::seeded(noise.seed);
    let mut clamped = 0;
    let mut out = clean.clone();
    for v in out.iter_mut() {
        let mut y = *v;
        if y < 0.0 {
            clamped += 1;
            y = 0.0;
        }
        let shot = if noise.photon_gain > 0.0 && y > 0.0 {
            let rate = noise.photon_gain * y;
            let dist = Poisson::new(rate).map_err(|e| NoraError::Argument(e.to_string()))?;
            let counts: f64 = dist.sample(&mut rng);
            counts / noise.photon_gain
        } else {
            0.0
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = shot + noise.gaussian_sigma * z + noise.offset;
    }
    Ok((out, clamped))
}

/// Add detector noise to clean measurements.
pub fn apply_noise(clean: &MeasurementSet, noise: &NoiseModel) -> Result<(MeasurementSet, usize)> {
    let (data, clamped) = apply_noise_matrix(&clean.data, noise)?;
    if clamped > 0 {
        log::warn!("clamped {clamped} negative clean measurements to zero before adding noise");
    }
    Ok((
        MeasurementSet {
            plan: clean.plan.clone(),
            data,
        },
        clamped,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 1, |i, _| (i % 10) as f64 * 0.1 + 0.05)
    }

    #[test]
    fn zero_gain_zero_sigma_gives_offset() {
        let m = NoiseModel {
            photon_gain: 0.0,
            gaussian_sigma: 0.0,
            offset: 2.5,
            seed: 0,
        };
        let (out, _) = apply_noise_matrix(&ramp(50), &m).unwrap();
        assert!(out.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn huge_gain_concentrates() {
        let gain = 1e6;
        let m = NoiseModel {
            photon_gain: gain,
            gaussian_sigma: 0.0,
            offset: 0.0,
            seed: 3,
        };
        let clean = ramp(10_000);
        let (out, _) = apply_noise_matrix(&clean, &m).unwrap();
        let mad = (&out - &clean).abs().mean();
        assert!(mad <= 3.0 * (clean.max() / gain).sqrt(), "{mad}");
    }

    #[test]
    fn gaussian_variance() {
        let m = NoiseModel {
            photon_gain: 0.0,
            gaussian_sigma: 1.0,
            offset: 0.0,
            seed: 9,
        };
        let (out, _) = apply_noise_matrix(&DMatrix::zeros(100_000, 1), &m).unwrap();
        let mean = out.mean();
        let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (out.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn preserves_expectation() {
        let m0 = NoiseModel {
            photon_gain: 50.0,
            gaussian_sigma: 0.2,
            offset: 0.3,
            seed: 0,
        };
        let clean = DMatrix::from_row_slice(3, 1, &[0.5, 1.0, 2.0]);
        let reps = 10_000;
        let mut acc = DMatrix::<f64>::zeros(3, 1);
        for r in 0..reps {
            let m = NoiseModel { seed: r, ..m0 };
            acc += apply_noise_matrix(&clean, &m).unwrap().0;
        }
        acc /= reps as f64;
        for i in 0..3 {
            let want = clean[i] + 0.3;
            assert!((acc[i] - want).abs() <= 0.01 * want, "{} vs {want}", acc[i]);
        }
    }

    #[test]
    fn negative_inputs_are_clamped_and_counted() {
        let m = NoiseModel {
            photon_gain: 0.0,
            gaussian_sigma: 0.0,
            offset: 0.0,
            seed: 0,
        };
        let clean = DMatrix::from_row_slice(3, 1, &[-1.0, 0.5, -0.1]);
        let (_, clamped) = apply_noise_matrix(&clean, &m).unwrap();
        assert_eq!(clamped, 2);
    }

    #[test]
    fn snr_calibration() {
        let m = NoiseModel::for_snr(0.4, 10.0, 1).unwrap();
        assert!((m.std_at(0.4) - 0.04).abs() < 1e-15);
        let (out, _) = apply_noise_matrix(&DMatrix::from_element(200_000, 1, 0.4), &m).unwrap();
        let mean = out.mean();
        let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / out.len() as f64).sqrt();
        assert!((mean / sd - 10.0).abs() < 0.2, "{}", mean / sd);
    }
}
