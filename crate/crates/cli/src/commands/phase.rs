use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nora_core::analysis::phase::{run_cell, PhaseCell, PhaseConfig, PhaseDiagramResult};
use nora_core::solver::SolverConfig;
use nora_core::FrameGrid;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_out_dir, write_bytes, write_text, Manifest};
use crate::config::{RunConfig, Stage};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    /// Smallest lines-per-frame reaching the boundary success rate, per rank.
    pub boundaries: BTreeMap<usize, Option<usize>>,
    pub boundary_nondecreasing: bool,
    pub success_threshold: f64,
    pub cells_computed: usize,
    pub cells_resumed: usize,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: u32,
    cell: PhaseCell,
}

/// Phase-diagram settings from the `[phase]` and `[psf]` sections.
pub fn phase_config(config: &RunConfig) -> CliResult<PhaseConfig> {
    let p = &config.phase;
    let grid = FrameGrid::new(p.height_lines, p.width_pixels, config.grid.pixel_pitch_um, config.grid.frame_rate_hz)?;
    let lines = if p.lines_per_frame.is_empty() {
        (1..=p.height_lines).collect()
    } else {
        p.lines_per_frame.clone()
    };
    let solver = SolverConfig {
        max_iters: p.max_iters,
        rel_tol: p.rel_tol,
        ..config.solver_base()
    };
    let pc = PhaseConfig {
        grid,
        frames: p.frames,
        ranks: p.ranks.clone(),
        lines_per_frame: lines,
        trials: p.trials,
        success_threshold: p.success_threshold,
        psf: config.psf()?,
        strategy: p.strategy.parse()?,
        solver,
        instance_smoothing_px: p.instance_smoothing_px,
        lambda_rel: p.lambda_rel,
        seed: config.derived_seed(Stage::Phase),
    };
    pc.validate()?;
    Ok(pc)
}

/// Everything a cell's outcome depends on, apart from its own coordinates.
fn fingerprint(pc: &PhaseConfig) -> u32 {
    let mut shared = pc.clone();
    shared.ranks.clear();
    shared.lines_per_frame.clear();
    crc32fast::hash(serde_json::to_string(&shared).expect("config serializes").as_bytes())
}

fn checkpoint_path(dir: &Path, rank: usize, lines: usize) -> PathBuf {
    dir.join(format!("R{rank}_L{lines}.json"))
}

fn load_checkpoint(path: &Path, fingerprint: u32) -> Option<PhaseCell> {
    let text = std::fs::read_to_string(path).ok()?;
    let cp: Checkpoint = serde_json::from_str(&text).ok()?;
    (cp.fingerprint == fingerprint).then_some(cp.cell)
}

/// Run (or resume) the `(rank, lines)` scan; each finished cell is saved
/// immediately so an interrupted run picks up where it stopped.
pub fn cmd_phase_diagram(config: &RunConfig) -> CliResult<(Manifest, PhaseDiagramResult, PhaseSummary)> {
    let pc = phase_config(config)?;
    ensure_out_dir(config)?;
    let dir = config.out_dir.join("phase_cells");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let fp = fingerprint(&pc);

    let keys: Vec<(usize, usize)> = pc
        .ranks
        .iter()
        .flat_map(|&r| pc.lines_per_frame.iter().map(move |&l| (r, l)))
        .collect();
    let cached: Vec<Option<PhaseCell>> = keys
        .iter()
        .map(|&(r, l)| load_checkpoint(&checkpoint_path(&dir, r, l), fp))
        .collect();
    let resumed = cached.iter().filter(|c| c.is_some()).count();
    let cells: Vec<PhaseCell> = keys
        .par_iter()
        .zip(cached)
        .map(|(&(r, l), cached)| -> CliResult<PhaseCell> {
            if let Some(cell) = cached {
                return Ok(cell);
            }
            let cell = run_cell(&pc, r, l);
            let cp = Checkpoint { fingerprint: fp, cell };
            let text = serde_json::to_string_pretty(&cp).expect("cell serializes");
            write_bytes(&checkpoint_path(&dir, r, l), text.as_bytes())?;
            Ok(cp.cell)
        })
        .collect::<CliResult<_>>()?;

    let result = PhaseDiagramResult {
        cells,
        success_threshold: pc.success_threshold,
        seed: pc.seed,
    };
    let boundaries: BTreeMap<usize, Option<usize>> = pc.ranks.iter().map(|&r| (r, result.boundary(r))).collect();
    let ordered: Vec<Option<usize>> = boundaries.values().copied().collect();
    let boundary_nondecreasing = ordered.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => true,
    });
    let summary = PhaseSummary {
        boundaries,
        boundary_nondecreasing,
        success_threshold: pc.success_threshold,
        cells_computed: keys.len() - resumed,
        cells_resumed: resumed,
    };

    let mut manifest = Manifest::new("phase-diagram", config);
    manifest.seeds.insert("phase".into(), pc.seed);
    write_text(&mut manifest, "phase_csv", &config.out_dir.join("phase_diagram.csv"), &result.to_csv())?;
    let summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_text(&mut manifest, "phase_summary", &config.out_dir.join("phase_summary.json"), &summary_json)?;
    manifest.write(config)?;
    Ok((manifest, result, summary))
}
