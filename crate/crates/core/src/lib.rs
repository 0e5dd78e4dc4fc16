//! Compressive line-scan video acquisition and low-rank recovery.
//!
//! Frames are acquired by scanning a few slow-scan lines per frame through a
//! PSF elongated along the slow axis; the pixels-by-time video matrix is then
//! recovered by nuclear-norm regularized least squares.
//!
//! * [`video`], [`measurement`], [`container`]: domain types and storage.
//! * [`operators`]: PSF, circular blur, sampling plans, `A` and `A^T`.
//! * [`solver`]: singular value thresholding and accelerated proximal gradient.
//! * [`phantom`]: synthetic low-rank fluorescence videos with noise and motion.
//! * [`analysis`]: metrics, trace extraction, coherence, recovery bounds and
//!   phase-transition experiments.

pub mod analysis;
pub mod container;
pub mod error;
pub mod measurement;
pub mod operators;
pub mod phantom;
pub mod rng;
pub mod solver;
pub mod video;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{NoraError, Result};
pub use measurement::MeasurementSet;
pub use operators::{ForwardModel, Psf, SamplingPlan, SamplingStrategy};
pub use video::{frame_to_vector, vector_to_frame, FrameGrid, VideoMatrix};
