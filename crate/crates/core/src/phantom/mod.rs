//! Synthetic ground truth: a low-rank fluorescence scene (cell footprints
//! times activity traces plus neuropil), rigid and line-jitter motion, and
//! Poisson-Gaussian detector noise.

pub mod motion;
pub mod noise;
pub mod render;
pub mod scene;
pub mod traces;

pub use motion::{apply_motion, MotionModel};
pub use noise::{apply_noise, apply_noise_matrix, NoiseModel};
pub use render::render_clean;
pub use scene::{gen_scene, Scene};
pub use traces::{gen_traces, ActivityModel};
