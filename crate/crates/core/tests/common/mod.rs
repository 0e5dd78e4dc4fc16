#![allow(dead_code)]

use nalgebra::DMatrix;
use nora_core::operators::{generate_plan, ForwardModel, Psf, SamplingStrategy};
use nora_core::FrameGrid;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = nora_core::rng::seeded(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Rank-`r` matrix from Gaussian factors.
pub fn low_rank(rows: usize, cols: usize, r: usize, seed: u64) -> DMatrix<f64> {
    gaussian(rows, r, seed) * gaussian(r, cols, seed + 1)
}

/// A random model: random odd kernel that fits the frame, random plan.
pub fn random_model(h: usize, w: usize, t: usize, seed: u64) -> ForwardModel {
    let mut rng = nora_core::rng::seeded(seed);
    let grid = FrameGrid::new(h, w, 1.0, 30.0).unwrap();
    let kr = 2 * rng.random_range(0..=(h - 1) / 2) + 1;
    let kc = 2 * rng.random_range(0..=((w - 1) / 2).min(2)) + 1;
    let kernel = DMatrix::from_fn(kr, kc, |_, _| rng.random_range(0.0..1.0));
    let psf = Psf::from_kernel(kernel).unwrap();
    let lines = rng.random_range(1..=h);
    let strategy = if rng.random_bool(0.5) {
        SamplingStrategy::UniformRandom
    } else {
        SamplingStrategy::RotatingEvenlySpaced
    };
    let plan = generate_plan(grid, t, lines, strategy, seed).unwrap();
    ForwardModel::new(psf, plan, grid).unwrap()
}
