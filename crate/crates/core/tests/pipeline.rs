//! End-to-end: phantom, acquisition, recovery and trace evaluation.

use nora_core::analysis::{median_filter_3d, pals_traces, relative_error, trace_correlations, TraceSet};
use nora_core::operators::{forward_apply, generate_plan, ForwardModel, Psf, SamplingStrategy};
use nora_core::phantom::{apply_noise, gen_scene, gen_traces, render_clean, ActivityModel, NoiseModel};
use nora_core::solver::{solve, SolverConfig};
use nora_core::FrameGrid;

#[test]
fn noiseless_pipeline_recovers_traces() {
    let grid = FrameGrid::new(16, 16, 1.0, 30.0).unwrap();
    let frames = 64;
    let scene = gen_scene(grid, 3, (2.0, 3.0), 1).unwrap();
    let activity = ActivityModel {
        spike_rate_hz: 3.0,
        seed: 2,
        ..Default::default()
    };
    let traces = gen_traces(&activity, 3, frames, grid.frame_rate_hz).unwrap();
    let x = render_clean(&scene, &traces).unwrap();

    let psf = Psf::gaussian(0.5, 1.5, 3.0).unwrap();
    let plan = generate_plan(grid, frames, 6, SamplingStrategy::RotatingEvenlySpaced, 0).unwrap();
    let model = ForwardModel::new(psf, plan, grid).unwrap();
    let y = forward_apply(&x, &model).unwrap();

    let mut cfg = SolverConfig::lagrangian(1e-3 * nora_core::solver::lambda_max(&model, &y.data).unwrap());
    cfg.max_iters = 1500;
    cfg.rel_tol = 1e-7;
    let (x_hat, report) = solve(&y, &model, &cfg).unwrap();
    let err = relative_error(&x_hat.data, &x.data).unwrap();
    assert!(err < 0.1, "relative error {err}, {} iterations", report.iterations_run);

    let est = pals_traces(&x_hat, &scene).unwrap();
    let truth = TraceSet::new(traces, grid.frame_rate_hz).unwrap();
    let summary = trace_correlations(&est, &truth).unwrap();
    assert!(summary.median.unwrap() > 0.95, "{:?}", summary.per_cell);
}

#[test]
fn noisy_constrained_pipeline_runs() {
    let grid = FrameGrid::new(16, 16, 1.0, 30.0).unwrap();
    let frames = 48;
    let scene = gen_scene(grid, 3, (2.0, 3.0), 5).unwrap();
    let activity = ActivityModel {
        spike_rate_hz: 3.0,
        seed: 6,
        ..Default::default()
    };
    let traces = gen_traces(&activity, 3, frames, grid.frame_rate_hz).unwrap();
    let x = render_clean(&scene, &traces).unwrap();
    let psf = Psf::gaussian(0.5, 1.5, 3.0).unwrap();
    let plan = generate_plan(grid, frames, 4, SamplingStrategy::RotatingEvenlySpaced, 0).unwrap();
    let model = ForwardModel::new(psf, plan, grid).unwrap();
    let clean = forward_apply(&x, &model).unwrap();
    let noise = NoiseModel::for_snr(clean.data.mean(), 10.0, 7).unwrap();
    let (y, _) = apply_noise(&clean, &noise).unwrap();
    let eps = clean.data.iter().map(|&v| noise.std_at(v).powi(2)).sum::<f64>().sqrt();

    let mut cfg = SolverConfig::constrained(eps, 0.0);
    cfg.max_iters = 300;
    let (x_hat, report) = solve(&y, &model, &cfg).unwrap();
    assert!(report.final_data_residual < y.data.norm());
    let smoothed = median_filter_3d(&x_hat, (3, 3, 3)).unwrap();
    let est = pals_traces(&smoothed, &scene).unwrap();
    assert_eq!(est.cells(), 3);
    assert!(x_hat.data.iter().all(|v| v.is_finite()));
}
