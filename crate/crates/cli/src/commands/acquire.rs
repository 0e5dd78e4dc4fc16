use nora_core::container::Container;
use nora_core::operators::{forward_apply, generate_plan, ForwardModel};
use nora_core::phantom::{apply_motion, apply_noise, NoiseModel};
use serde::{Deserialize, Serialize};

use super::{ensure_out_dir, read_object, write_object, wrong_kind, Manifest};
use crate::config::{RunConfig, Stage};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquireSummary {
    pub lines_per_frame: usize,
    /// Scalar samples `T * L' * W`.
    pub total_samples: usize,
    pub motion_applied: bool,
    /// Expected Frobenius norm of the added noise; `None` when noise is off.
    pub expected_noise_norm: Option<f64>,
    /// Root-mean-square per-entry noise standard deviation.
    pub noise_std_rms: Option<f64>,
    pub negative_samples_clamped: usize,
}

/// Move (optional), blur, sample lines and add detector noise.
pub fn cmd_acquire(config: &RunConfig) -> CliResult<(Manifest, AcquireSummary)> {
    let grid = config.frame_grid()?;
    let clean_path = config.resolve(&config.paths.clean_video);
    let clean = match read_object(&clean_path)? {
        Container::Video(v) => v,
        _ => return Err(wrong_kind(&clean_path, "video")),
    };
    if !clean.grid.same_shape(&grid) {
        return Err(CliError::Config(format!(
            "clean video is {}x{}, config grid is {}x{}",
            clean.grid.height_lines, clean.grid.width_pixels, grid.height_lines, grid.width_pixels
        )));
    }

    let mut manifest = Manifest::new("acquire", config);
    let scanned = if config.motion_enabled() {
        let motion = config.motion_model();
        manifest.seeds.insert("motion".into(), motion.seed);
        apply_motion(&clean, &motion)?
    } else {
        clean
    };
    let lines = config.lines_per_frame()?;
    let plan_seed = config.derived_seed(Stage::Plan);
    manifest.seeds.insert("plan".into(), plan_seed);
    let plan = generate_plan(grid, scanned.frames(), lines, config.strategy()?, plan_seed)?;
    let model = ForwardModel::new(config.psf()?, plan.clone(), grid)?;
    let noiseless = forward_apply(&scanned, &model)?;

    let mut summary = AcquireSummary {
        lines_per_frame: lines,
        total_samples: noiseless.total_samples(),
        motion_applied: config.motion_enabled(),
        expected_noise_norm: None,
        noise_std_rms: None,
        negative_samples_clamped: 0,
    };
    let measured = if config.noise.enabled {
        let noise_seed = config.derived_seed(Stage::Noise);
        manifest.seeds.insert("noise".into(), noise_seed);
        let noise = NoiseModel::for_snr(noiseless.data.mean(), config.noise.snr, noise_seed)?;
        let variance: f64 = noiseless.data.iter().map(|&v| noise.std_at(v).powi(2)).sum();
        summary.expected_noise_norm = Some(variance.sqrt());
        summary.noise_std_rms = Some((variance / summary.total_samples as f64).sqrt());
        let (noisy, clamped) = apply_noise(&noiseless, &noise)?;
        summary.negative_samples_clamped = clamped;
        noisy
    } else {
        noiseless
    };

    ensure_out_dir(config)?;
    let paths = &config.paths;
    write_object(&mut manifest, "measurements", &config.resolve(&paths.measurements), &Container::Measurements(measured))?;
    write_object(&mut manifest, "plan", &config.resolve(&paths.plan), &Container::Plan(plan))?;
    manifest.details = serde_json::to_value(&summary).expect("summary serializes");
    manifest.write(config)?;
    Ok((manifest, summary))
}
