//! Evaluation: image metrics, median filtering, trace extraction and
//! correlation, coherence, recovery bounds, and phase diagrams.

pub mod coherence;
pub mod correlation;
pub mod median;
pub mod metrics;
pub mod pals;
pub mod phase;
pub mod report;
pub mod theorem;

pub use coherence::{coherence_mu_b, coherence_report, CoherenceReport};
pub use correlation::{pearson, trace_correlations, CorrelationSummary};
pub use median::median_filter_3d;
pub use metrics::{psnr, relative_error};
pub use pals::{pals_traces, TraceSet};
pub use phase::{phase_diagram, PhaseConfig, PhaseDiagramResult};
pub use report::MetricsReport;
pub use theorem::{error_bound, sample_requirement, theorem_bounds, TheoremBounds, TheoremInputs};
