use serde::{Deserialize, Serialize};

use crate::analysis::pals::TraceSet;
use crate::error::{NoraError, Result};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges spanning `[-1, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    /// Pearson r per cell; `None` when either trace is constant.
    pub per_cell: Vec<Option<f64>>,
    pub histogram: Histogram,
    /// Cells left out of the histogram because r is undefined.
    pub excluded: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Per-cell Pearson correlation of estimated against true traces.
pub fn trace_correlations(est: &TraceSet, truth: &TraceSet) -> Result<CorrelationSummary> {
    if est.traces.shape() != truth.traces.shape() {
        return Err(NoraError::Shape(format!(
            "trace sets differ: {:?} vs {:?}",
            est.traces.shape(),
            truth.traces.shape()
        )));
    }
    let per_cell: Vec<Option<f64>> = (0..est.cells())
        .map(|k| {
            let a: Vec<f64> = est.traces.row(k).iter().copied().collect();
            let b: Vec<f64> = truth.traces.row(k).iter().copied().collect();
            pearson(&a, &b)
        })
        .collect();
    let mut defined: Vec<f64> = per_cell.iter().flatten().copied().collect();
    let excluded = per_cell.len() - defined.len();

    let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
        .map(|i| -1.0 + 2.0 * i as f64 / HISTOGRAM_BINS as f64)
        .collect();
    let mut counts = vec![0; HISTOGRAM_BINS];
    for &r in &defined {
        let bin = (((r + 1.0) / 2.0) * HISTOGRAM_BINS as f64).floor() as usize;
        counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }

    defined.sort_by(f64::total_cmp);
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let median = (!defined.is_empty()).then(|| {
        let m = defined.len() / 2;
        if defined.len() % 2 == 1 {
            defined[m]
        } else {
            0.5 * (defined[m - 1] + defined[m])
        }
    });
    Ok(CorrelationSummary {
        per_cell,
        histogram: Histogram { edges, counts },
        excluded,
        mean,
        median,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::testutil::gaussian_matrix;

    fn set(m: DMatrix<f64>) -> TraceSet {
        TraceSet::new(m, 30.0).unwrap()
    }

    #[test]
    fn identical_and_negated() {
        let truth = set(gaussian_matrix(4, 50, 1));
        let s = trace_correlations(&truth, &truth).unwrap();
        assert!(s.per_cell.iter().all(|r| (r.unwrap() - 1.0).abs() < 1e-12));
        assert_eq!(s.histogram.counts[HISTOGRAM_BINS - 1], 4);
        let neg = set(-truth.traces.clone());
        let s = trace_correlations(&neg, &truth).unwrap();
        assert!(s.per_cell.iter().all(|r| (r.unwrap() + 1.0).abs() < 1e-12));
        assert_eq!(s.histogram.counts[0], 4);
    }

    #[test]
    fn constant_traces_are_excluded() {
        let mut m = gaussian_matrix(3, 20, 2);
        m.row_mut(1).fill(0.5);
        let s = trace_correlations(&set(m.clone()), &set(m)).unwrap();
        assert_eq!(s.per_cell[1], None);
        assert_eq!(s.excluded, 1);
        assert_eq!(s.histogram.counts.iter().sum::<usize>(), 2);
        assert!(s.mean.unwrap().is_finite());
    }

    #[test]
    fn noisy_copy_at_snr_ten() {
        // r = 1 / sqrt(1 + 1/SNR^2) ~= 0.995 for amplitude SNR 10
        let mut means = vec![];
        for seed in 0..50 {
            let truth = gaussian_matrix(10, 200, seed);
            let mut rng = crate::rng::seeded(seed + 1000);
            let est = truth.map(|v| v + 0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
            means.push(trace_correlations(&set(est), &set(truth)).unwrap().mean.unwrap());
        }
        let avg = means.iter().sum::<f64>() / means.len() as f64;
        assert!((0.90..=0.999).contains(&avg), "{avg}");
        let expected = 1.0 / (1.0f64 + 0.01).sqrt();
        assert!((avg - expected).abs() < 0.002);
    }

    #[test]
    fn shape_mismatch() {
        assert!(trace_correlations(&set(gaussian_matrix(2, 5, 0)), &set(gaussian_matrix(3, 5, 0))).is_err());
    }
}
