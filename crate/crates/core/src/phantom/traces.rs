//! Calcium-like activity traces: Poisson spike trains convolved with a
//! double-exponential indicator kernel.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NoraError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityModel {
    pub spike_rate_hz: f64,
    /// Rise time constant; zero gives an instantaneous rise.
    pub tau_rise_s: f64,
    pub tau_decay_s: f64,
    pub baseline: f64,
    /// Relative standard deviation of per-spike amplitudes.
    pub amplitude_jitter: f64,
    pub seed: u64,
}

impl Default for ActivityModel {
    fn default() -> Self {
        ActivityModel {
            spike_rate_hz: 0.2,
            tau_rise_s: 0.05,
            tau_decay_s: 0.4,
            baseline: 0.1,
            amplitude_jitter: 0.2,
            seed: 0,
        }
    }
}

impl ActivityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_decay_s > self.tau_rise_s && self.tau_rise_s >= 0.0) {
            return Err(NoraError::Argument(format!(
                "need tau_decay > tau_rise >= 0, got {} and {}",
                self.tau_decay_s, self.tau_rise_s
            )));
        }
        if !(self.spike_rate_hz >= 0.0 && self.spike_rate_hz.is_finite()) {
            return Err(NoraError::Argument(format!(
                "spike rate must be >= 0, got {}",
                self.spike_rate_hz
            )));
        }
        if !(self.amplitude_jitter >= 0.0) {
            return Err(NoraError::Argument("amplitude jitter must be >= 0".into()));
        }
        Ok(())
    }

    /// Kernel value at lag `t` seconds, scaled to unit peak.
    pub fn kernel(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let (r, d) = (self.tau_rise_s, self.tau_decay_s);
        if r == 0.0 {
            return (-t / d).exp();
        }
        let peak_t = (d / r).ln() * d * r / (d - r);
        let peak = (-peak_t / d).exp() - (-peak_t / r).exp();
        ((-t / d).exp() - (-t / r).exp()) / peak
    }
}

/// `K x T` nonnegative traces sampled at `frame_rate_hz`.
pub fn gen_traces(model: &ActivityModel, cells: usize, frames: usize, frame_rate_hz: f64) -> Result<DMatrix<f64>> {
    model.validate()?;
    if frames == 0 {
        return Err(NoraError::Argument("need at least one frame".into()));
    }
    if !(frame_rate_hz > 0.0) {
        return Err(NoraError::Argument("frame rate must be positive".into()));
    }
    // The tail past 20 decay constants is below 3e-9 of the peak.
    let kernel_len = ((20.0 * model.tau_decay_s * frame_rate_hz).ceil() as usize + 1).min(frames);
    let kernel: Vec<f64> = (0..kernel_len)
        .map(|m| model.kernel(m as f64 / frame_rate_hz))
        .collect();
    let per_frame = model.spike_rate_hz / frame_rate_hz;
    let poisson = if per_frame > 0.0 {
        Some(Poisson::new(per_frame).map_err(|e| NoraError::Argument(e.to_string()))?)
    } else {
        None
    };

    let mut rng = crate::rng::seeded(model.seed);
    let mut out = DMatrix::from_element(cells, frames, model.baseline);
    for k in 0..cells {
        let mut drive = vec![0.0; frames];
        if let Some(p) = &poisson {
            for slot in drive.iter_mut() {
                let count = p.sample(&mut rng) as usize;
                for _ in 0..count {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *slot += (1.0 + model.amplitude_jitter * z).max(0.0);
                }
            }
        }
        for (s, &amp) in drive.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            for (m, &kv) in kernel.iter().enumerate().take(frames - s) {
                out[(k, s + m)] += amp * kv;
            }
        }
    }
    Ok(out)
}

/// Spike-free variant used in tests: one unit spike at frame 0.
#[cfg(test)]
fn single_spike(model: &ActivityModel, frames: usize, fr: f64) -> Vec<f64> {
    (0..frames).map(|m| model.baseline + model.kernel(m as f64 / fr)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_constant_baseline() {
        let m = ActivityModel {
            spike_rate_hz: 0.0,
            baseline: 0.3,
            ..Default::default()
        };
        let tr = gen_traces(&m, 3, 50, 30.0).unwrap();
        assert!(tr.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn kernel_has_unit_peak() {
        let m = ActivityModel::default();
        let peak = (0..100_000).map(|i| m.kernel(i as f64 * 1e-5)).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-8);
        assert_eq!(m.kernel(0.0), 0.0);
    }

    #[test]
    fn instantaneous_rise_limit() {
        let fr = 30.0;
        let exact = ActivityModel {
            tau_rise_s: 0.0,
            tau_decay_s: 0.4,
            baseline: 0.2,
            ..Default::default()
        };
        let trace = single_spike(&exact, 40, fr);
        for (t, v) in trace.iter().enumerate() {
            let want = 0.2 + (-(t as f64) / fr / 0.4).exp();
            assert!((v - want).abs() < 1e-15);
        }
        // a tiny but nonzero rise converges to the same samples after lag 0
        let near = ActivityModel {
            tau_rise_s: 1e-6,
            ..exact
        };
        let approx = single_spike(&near, 40, fr);
        for t in 1..40 {
            assert!((approx[t] - trace[t]).abs() < 1e-4);
        }
    }

    #[test]
    fn deterministic_and_nonnegative() {
        let m = ActivityModel {
            spike_rate_hz: 4.0,
            amplitude_jitter: 2.0,
            seed: 11,
            ..Default::default()
        };
        let a = gen_traces(&m, 5, 300, 30.0).unwrap();
        assert_eq!(a, gen_traces(&m, 5, 300, 30.0).unwrap());
        assert!(a.iter().all(|&v| v >= 0.0));
        assert!(a.max() > m.baseline);
    }

    #[test]
    fn autocorrelation_decays_with_tau_decay() {
        let fr = 30.0;
        let m = ActivityModel {
            spike_rate_hz: 20.0,
            amplitude_jitter: 0.0,
            seed: 5,
            ..Default::default()
        };
        let tr = gen_traces(&m, 1, 100_000, fr).unwrap();
        let x: Vec<f64> = tr.row(0).iter().copied().collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let acf = |lag: usize| -> f64 {
            c.iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / (c.len() - lag) as f64
        };
        // least-squares slope of log autocorrelation over lags 3..=15 frames
        let pts: Vec<(f64, f64)> = (3..=15).map(|l| (l as f64 / fr, acf(l).ln())).collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let tau = -1.0 / slope;
        assert!((tau - 0.4).abs() <= 0.2 * 0.4, "fitted tau {tau}");
    }

    #[test]
    fn invalid_kinetics() {
        let m = ActivityModel {
            tau_rise_s: 0.5,
            tau_decay_s: 0.4,
            ..Default::default()
        };
        assert!(gen_traces(&m, 1, 10, 30.0).is_err());
        assert!(gen_traces(&ActivityModel::default(), 1, 0, 30.0).is_err());
    }
}
