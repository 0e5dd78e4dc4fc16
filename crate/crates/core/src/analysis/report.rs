use serde::{Deserialize, Serialize};

use crate::analysis::coherence::CoherenceReport;
use crate::analysis::correlation::CorrelationSummary;

/// Evaluation summary written as JSON.
///
/// `psnr_db` is `null` when the reconstruction equals the reference, with
/// `psnr_infinite` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr_db: Option<f64>,
    pub psnr_infinite: bool,
    pub per_cell_correlation: Vec<Option<f64>>,
    pub mean_correlation: Option<f64>,
    pub median_correlation: Option<f64>,
    pub excluded_cells: usize,
    pub correlation_histogram: Vec<usize>,
    pub mu_b2: Option<f64>,
    pub coherence: Option<CoherenceReport>,
    pub theorem_error_bound: Option<f64>,
    pub measured_error: f64,
    pub relative_error: f64,
    /// Notes on how the bound inputs were interpreted.
    pub notes: Vec<String>,
}

impl MetricsReport {
    pub fn new(psnr: f64, correlations: &CorrelationSummary, measured_error: f64, relative_error: f64) -> Self {
        MetricsReport {
            psnr_db: psnr.is_finite().then_some(psnr),
            psnr_infinite: psnr == f64::INFINITY,
            per_cell_correlation: correlations.per_cell.clone(),
            mean_correlation: correlations.mean,
            median_correlation: correlations.median,
            excluded_cells: correlations.excluded,
            correlation_histogram: correlations.histogram.counts.clone(),
            mu_b2: None,
            coherence: None,
            theorem_error_bound: None,
            measured_error,
            relative_error,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::correlation::Histogram;

    #[test]
    fn infinite_psnr_is_null() {
        let corr = CorrelationSummary {
            per_cell: vec![Some(1.0), None],
            histogram: Histogram {
                edges: vec![],
                counts: vec![1],
            },
            excluded: 1,
            mean: Some(1.0),
            median: Some(1.0),
        };
        let r = MetricsReport::new(f64::INFINITY, &corr, 0.0, 0.0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["psnr_db"].is_null());
        assert_eq!(v["psnr_infinite"], true);
        assert!(v["per_cell_correlation"][1].is_null());
        let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
