//! Run configuration: a TOML file with flat sections, overridden by
//! `--set section.key=value` flags.

use std::path::{Path, PathBuf};

use nora_core::operators::{Psf, SamplingStrategy};
use nora_core::phantom::{ActivityModel, MotionModel};
use nora_core::solver::SolverConfig;
use nora_core::FrameGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub batch_size_frames: usize,
    pub grid: GridSection,
    pub scene: SceneSection,
    pub activity: ActivitySection,
    pub noise: NoiseSection,
    pub motion: MotionSection,
    pub psf: PsfSection,
    pub plan: PlanSection,
    pub solver: SolverSection,
    pub evaluate: EvaluateSection,
    pub phase: PhaseSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("nora-out"),
            batch_size_frames: nora_core::solver::batch::DEFAULT_BATCH_FRAMES,
            grid: GridSection::default(),
            scene: SceneSection::default(),
            activity: ActivitySection::default(),
            noise: NoiseSection::default(),
            motion: MotionSection::default(),
            psf: PsfSection::default(),
            plan: PlanSection::default(),
            solver: SolverSection::default(),
            evaluate: EvaluateSection::default(),
            phase: PhaseSection::default(),
            paths: PathsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub height_lines: usize,
    pub width_pixels: usize,
    pub frames: usize,
    pub pixel_pitch_um: f64,
    pub frame_rate_hz: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            height_lines: 32,
            width_pixels: 32,
            frames: 256,
            pixel_pitch_um: 1.0,
            frame_rate_hz: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub cells: usize,
    pub radius_min_px: f64,
    pub radius_max_px: f64,
}

impl Default for SceneSection {
    fn default() -> Self {
        SceneSection {
            cells: 4,
            radius_min_px: 3.0,
            radius_max_px: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivitySection {
    pub spike_rate_hz: f64,
    pub tau_rise_s: f64,
    pub tau_decay_s: f64,
    pub baseline: f64,
    pub amplitude_jitter: f64,
}

impl Default for ActivitySection {
    fn default() -> Self {
        let d = ActivityModel::default();
        ActivitySection {
            spike_rate_hz: 3.0,
            tau_rise_s: d.tau_rise_s,
            tau_decay_s: d.tau_decay_s,
            baseline: d.baseline,
            amplitude_jitter: d.amplitude_jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    /// Per-entry SNR at the mean clean measurement.
    pub snr: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { enabled: true, snr: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSection {
    pub rigid_sigma_px: f64,
    pub line_jitter_sigma_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsfSection {
    /// Zero on both axes gives the delta kernel.
    pub sigma_fast_px: f64,
    pub sigma_slow_px: f64,
    pub truncation_sigmas: f64,
}

impl Default for PsfSection {
    fn default() -> Self {
        PsfSection {
            sigma_fast_px: 0.5,
            sigma_slow_px: 1.5,
            truncation_sigmas: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub strategy: String,
    /// Explicit lines per frame; takes precedence over `speedup`.
    pub lines_per_frame: Option<usize>,
    /// `H / L'`; `L' = max(1, round(H / speedup))`.
    pub speedup: Option<f64>,
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection {
            strategy: "rotating".into(),
            lines_per_frame: None,
            speedup: Some(10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// `lagrangian` or `constrained`; an explicit `lambda` forces Lagrangian.
    pub mode: String,
    pub lambda: Option<f64>,
    /// Lagrangian weight as a fraction of the zero-solution threshold, used
    /// when `lambda` is unset.
    pub lambda_rel: f64,
    pub epsilon: Option<f64>,
    /// Named noise level such as `10x` or `20x-motion`, scaled to the
    /// measurement count.
    pub preset: Option<String>,
    pub mu: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_scale: f64,
    pub svd_rank_cap: Option<usize>,
    pub continuation: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            mode: "lagrangian".into(),
            lambda: None,
            lambda_rel: 1e-3,
            epsilon: None,
            preset: None,
            mu: 0.1,
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
            step_scale: d.step_scale,
            svd_rank_cap: None,
            continuation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Median window `(lines, pixels, frames)` applied before trace
    /// extraction; `[1, 1, 1]` disables it.
    pub median_window: [usize; 3],
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection { median_window: [9, 9, 9] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub height_lines: usize,
    pub width_pixels: usize,
    pub frames: usize,
    pub ranks: Vec<usize>,
    /// Empty means every value from 1 to the frame height.
    pub lines_per_frame: Vec<usize>,
    pub trials: usize,
    pub success_threshold: f64,
    pub strategy: String,
    pub instance_smoothing_px: f64,
    pub lambda_rel: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            height_lines: 16,
            width_pixels: 16,
            frames: 64,
            ranks: vec![1, 2, 4, 8],
            lines_per_frame: Vec::new(),
            trials: 5,
            success_threshold: 0.05,
            strategy: "uniform".into(),
            instance_smoothing_px: 1.5,
            lambda_rel: 1e-3,
            max_iters: 500,
            rel_tol: 1e-6,
        }
    }
}

/// Artifact locations; relative paths resolve against `out_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub clean_video: PathBuf,
    pub scene: PathBuf,
    pub traces: PathBuf,
    pub measurements: PathBuf,
    pub plan: PathBuf,
    pub reconstruction: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            clean_video: "clean.nora".into(),
            scene: "scene.nora".into(),
            traces: "traces.nora".into(),
            measurements: "measurements.nora".into(),
            plan: "plan.nora".into(),
            reconstruction: "reconstruction.nora".into(),
        }
    }
}

/// Resolved solver mode.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    /// Absolute lambda.
    Lambda(f64),
    /// Lambda as a fraction of the zero-solution threshold.
    LambdaRel(f64),
    /// Absolute epsilon.
    Epsilon(f64),
    /// Unscaled preset epsilon.
    Preset { name: String, base: f64, speedup: f64 },
    /// Epsilon recorded by the acquisition step.
    AcquiredNoise,
}

/// Noise-level table for constrained reconstructions: `(speedup, no motion, motion)`.
pub const EPSILON_PRESETS: [(f64, f64, f64); 3] = [(10.0, 475.0, 475.0), (15.0, 375.0, 375.0), (20.0, 325.0, 340.0)];

/// Geometry the preset table refers to: frames per batch and a square frame side.
pub const PRESET_REFERENCE_FRAMES: usize = 500;
pub const PRESET_REFERENCE_SIDE: usize = 512;

/// Base epsilon and speedup for a preset name like `15x` or `20x-motion`.
pub fn preset_epsilon(name: &str) -> CliResult<(f64, f64)> {
    let (ratio, motion) = if let Some(r) = name.strip_suffix("-no-motion") {
        (r, false)
    } else if let Some(r) = name.strip_suffix("-motion") {
        (r, true)
    } else {
        (name, false)
    };
    let speedup: f64 = ratio
        .strip_suffix('x')
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| CliError::Config(format!("unknown epsilon preset `{name}`")))?;
    EPSILON_PRESETS
        .iter()
        .find(|(r, _, _)| *r == speedup)
        .map(|&(_, still, moving)| (if motion { moving } else { still }, speedup))
        .ok_or_else(|| CliError::Config(format!("no epsilon preset for speedup {speedup}")))
}

/// Scale a preset epsilon to a problem with `measurements` scalar samples,
/// assuming the noise norm grows with the square root of the sample count.
pub fn scale_preset(base: f64, speedup: f64, measurements: usize) -> f64 {
    let side = PRESET_REFERENCE_SIDE as f64;
    let lines = (side / speedup).round().max(1.0);
    let reference = PRESET_REFERENCE_FRAMES as f64 * side * lines;
    base * (measurements as f64 / reference).sqrt()
}

impl RunConfig {
    /// Read a config file (if any), then apply overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<RunConfig> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.frame_grid()?;
        if self.grid.frames == 0 {
            return Err(CliError::Config("grid.frames must be >= 1".into()));
        }
        if self.batch_size_frames == 0 {
            return Err(CliError::Config("batch_size_frames must be >= 1".into()));
        }
        self.strategy()?;
        self.lines_per_frame()?;
        self.psf()?;
        self.solver_choice()?;
        if self.evaluate.median_window.iter().any(|w| w % 2 == 0) {
            return Err(CliError::Config("evaluate.median_window entries must be odd".into()));
        }
        if !(self.scene.radius_min_px > 0.0 && self.scene.radius_min_px <= self.scene.radius_max_px) {
            return Err(CliError::Config("scene radii must satisfy 0 < min <= max".into()));
        }
        if self.noise.enabled && !(self.noise.snr > 0.0) {
            return Err(CliError::Config("noise.snr must be positive".into()));
        }
        self.activity_model().validate()?;
        Ok(())
    }

    pub fn frame_grid(&self) -> CliResult<FrameGrid> {
        let g = &self.grid;
        Ok(FrameGrid::new(g.height_lines, g.width_pixels, g.pixel_pitch_um, g.frame_rate_hz)?)
    }

    pub fn strategy(&self) -> CliResult<SamplingStrategy> {
        Ok(self.plan.strategy.parse()?)
    }

    pub fn lines_per_frame(&self) -> CliResult<usize> {
        let h = self.grid.height_lines;
        let lines = match (self.plan.lines_per_frame, self.plan.speedup) {
            (Some(l), _) => l,
            (None, Some(r)) if r > 0.0 && r.is_finite() => lines_for_speedup(h, r),
            (None, Some(r)) => return Err(CliError::Config(format!("plan.speedup must be positive, got {r}"))),
            (None, None) => return Err(CliError::Config("set plan.lines_per_frame or plan.speedup".into())),
        };
        if lines == 0 || lines > h {
            return Err(CliError::Config(format!("lines per frame must be in [1, {h}], got {lines}")));
        }
        Ok(lines)
    }

    pub fn psf(&self) -> CliResult<Psf> {
        let p = &self.psf;
        Ok(Psf::gaussian(p.sigma_fast_px, p.sigma_slow_px, p.truncation_sigmas)?)
    }

    pub fn activity_model(&self) -> ActivityModel {
        let a = &self.activity;
        ActivityModel {
            spike_rate_hz: a.spike_rate_hz,
            tau_rise_s: a.tau_rise_s,
            tau_decay_s: a.tau_decay_s,
            baseline: a.baseline,
            amplitude_jitter: a.amplitude_jitter,
            seed: self.derived_seed(Stage::Activity),
        }
    }

    pub fn motion_model(&self) -> MotionModel {
        MotionModel {
            rigid_sigma_px: self.motion.rigid_sigma_px,
            line_jitter_sigma_px: self.motion.line_jitter_sigma_px,
            seed: self.derived_seed(Stage::Motion),
        }
    }

    pub fn motion_enabled(&self) -> bool {
        self.motion.rigid_sigma_px > 0.0 || self.motion.line_jitter_sigma_px > 0.0
    }

    pub fn solver_choice(&self) -> CliResult<SolverChoice> {
        let s = &self.solver;
        if let Some(lambda) = s.lambda {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(CliError::Config(format!("solver.lambda must be positive, got {lambda}")));
            }
            return Ok(SolverChoice::Lambda(lambda));
        }
        match s.mode.as_str() {
            "lagrangian" => {
                if !(s.lambda_rel > 0.0 && s.lambda_rel < 1.0) {
                    return Err(CliError::Config("solver.lambda_rel must be in (0, 1)".into()));
                }
                Ok(SolverChoice::LambdaRel(s.lambda_rel))
            }
            "constrained" => {
                if !(s.mu >= 0.0 && s.mu.is_finite()) {
                    return Err(CliError::Config("solver.mu must be >= 0".into()));
                }
                if let Some(eps) = s.epsilon {
                    if !(eps > 0.0 && eps.is_finite()) {
                        return Err(CliError::Config(format!("solver.epsilon must be positive, got {eps}")));
                    }
                    Ok(SolverChoice::Epsilon(eps))
                } else if let Some(name) = &s.preset {
                    let (base, speedup) = preset_epsilon(name)?;
                    Ok(SolverChoice::Preset {
                        name: name.clone(),
                        base,
                        speedup,
                    })
                } else {
                    Ok(SolverChoice::AcquiredNoise)
                }
            }
            other => Err(CliError::Config(format!(
                "solver.mode must be `lagrangian` or `constrained`, got `{other}`"
            ))),
        }
    }

    /// Solver settings shared by both modes; the mode itself is filled in
    /// once lambda or epsilon is known.
    pub fn solver_base(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            max_iters: s.max_iters,
            rel_tol: s.rel_tol,
            step_scale: s.step_scale,
            svd_rank_cap: s.svd_rank_cap,
            seed: self.derived_seed(Stage::Solver),
            continuation: s.continuation,
            ..SolverConfig::default()
        }
    }

    pub fn derived_seed(&self, stage: Stage) -> u64 {
        nora_core::rng::derive_seed(self.seed, &[stage as u64])
    }

    /// `path` resolved against the output directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Independent random streams of the pipeline.
#[derive(Debug, Clone, Copy)]
pub enum Stage {
    Scene = 1,
    Activity = 2,
    Plan = 3,
    Motion = 4,
    Noise = 5,
    Solver = 6,
    Phase = 7,
}

/// `L' = max(1, round(H / r))`.
pub fn lines_for_speedup(height: usize, speedup: f64) -> usize {
    ((height as f64 / speedup).round() as usize).max(1)
}

/// Apply one `section.key=value` override. Values are parsed as TOML and
/// fall back to a bare string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speedup_sets_lines() {
        assert_eq!(lines_for_speedup(320, 10.0), 32);
        assert_eq!(lines_for_speedup(32, 10.0), 3);
        assert_eq!(lines_for_speedup(32, 20.0), 2);
        assert_eq!(lines_for_speedup(8, 100.0), 1);
    }

    #[test]
    fn overrides_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\n[grid]\nheight_lines = 16\n[plan]\nstrategy = \"uniform\"\n").unwrap();
        let cfg = RunConfig::load(
            Some(&path),
            &["grid.height_lines=20".into(), "plan.strategy=rotating".into(), "seed=9".into()],
        )
        .unwrap();
        assert_eq!(cfg.grid.height_lines, 20);
        assert_eq!(cfg.plan.strategy, "rotating");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.grid.width_pixels, 32);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::load(None, &["grid.heigth_lines=4".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::load(None, &["nonsense".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn explicit_lambda_overrides_preset() {
        let cfg = RunConfig::load(
            None,
            &["solver.mode=constrained".into(), "solver.preset=10x-motion".into()],
        )
        .unwrap();
        assert_eq!(
            cfg.solver_choice().unwrap(),
            SolverChoice::Preset {
                name: "10x-motion".into(),
                base: 475.0,
                speedup: 10.0
            }
        );
        let cfg = RunConfig::load(
            None,
            &[
                "solver.mode=constrained".into(),
                "solver.preset=10x-motion".into(),
                "solver.lambda=0.5".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.solver_choice().unwrap(), SolverChoice::Lambda(0.5));
    }

    #[test]
    fn preset_table() {
        assert_eq!(preset_epsilon("10x").unwrap(), (475.0, 10.0));
        assert_eq!(preset_epsilon("15x-motion").unwrap(), (375.0, 15.0));
        assert_eq!(preset_epsilon("20x-no-motion").unwrap(), (325.0, 20.0));
        assert_eq!(preset_epsilon("20x-motion").unwrap(), (340.0, 20.0));
        assert!(preset_epsilon("12x").is_err());
        // The reference geometry itself is unscaled.
        let m = 500 * 512 * 51;
        assert!((scale_preset(475.0, 10.0, m) - 475.0).abs() < 1e-9);
        assert!((scale_preset(100.0, 10.0, 4 * m) - 200.0).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
