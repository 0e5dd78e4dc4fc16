//! The linear acquisition model: PSF construction, circular blur, line
//! sampling plans, the forward operator with its adjoint, and operator-norm
//! estimation.

pub mod blur;
pub mod forward;
pub mod norm;
pub mod plan;
pub mod psf;

pub use blur::{blur_frame, correlate_frame};
pub use forward::{adjoint_apply, forward_apply, ForwardModel};
pub use norm::{estimate_operator_norm, estimate_operator_norm_converged};
pub use plan::{generate_plan, SamplingPlan, SamplingStrategy};
pub use psf::{make_gaussian_psf, Psf, DEFAULT_TRUNCATION_SIGMAS};
