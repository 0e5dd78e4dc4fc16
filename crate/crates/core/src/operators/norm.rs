use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::operators::forward::ForwardModel;

/// Power iteration on `X -> A^T A X`; returns an estimate of `||A||^2`.
///
/// The estimate is the Rayleigh quotient `||A x_k||^2` of the normalized
/// iterate, which never exceeds the true value and does not decrease with
/// more iterations.
pub fn estimate_operator_norm(model: &ForwardModel, iterations: usize, seed: u64) -> Result<f64> {
    let n = model.grid.pixels();
    let t = model.frames();
    if n * t == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, t, |_, _| StandardNormal.sample(&mut rng));
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let ax = model.apply(&x)?;
        estimate = f64::max(estimate, ax.norm_squared());
        let next = model.adjoint(&ax)?;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        x = next / norm;
    }
    Ok(estimate)
}

/// Power iteration until the estimate stalls to `rel_tol`, capped at `max_iters`.
pub fn estimate_operator_norm_converged(
    model: &ForwardModel,
    rel_tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<f64> {
    let n = model.grid.pixels();
    let t = model.frames();
    if n * t == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, t, |_, _| StandardNormal.sample(&mut rng));
    x /= x.norm();
    let mut estimate: f64 = 0.0;
    for _ in 0..max_iters.max(1) {
        let ax = model.apply(&x)?;
        let next_estimate = ax.norm_squared();
        let stalled = (next_estimate - estimate).abs() <= rel_tol * next_estimate;
        estimate = estimate.max(next_estimate);
        let next = model.adjoint(&ax)?;
        let norm = next.norm();
        if norm == 0.0 || stalled {
            break;
        }
        x = next / norm;
    }
    Ok(estimate)
}
