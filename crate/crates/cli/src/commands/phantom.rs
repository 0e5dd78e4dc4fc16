use nora_core::analysis::TraceSet;
use nora_core::container::{Container, TraceMatrix};
use nora_core::phantom::{gen_scene, gen_traces, render_clean};

use super::{ensure_out_dir, write_object, write_text, Manifest};
use crate::config::{RunConfig, Stage};
use crate::error::CliResult;

/// Generate the scene, its activity traces and the clean video.
pub fn cmd_phantom(config: &RunConfig) -> CliResult<Manifest> {
    let grid = config.frame_grid()?;
    let scene_seed = config.derived_seed(Stage::Scene);
    let scene = gen_scene(
        grid,
        config.scene.cells,
        (config.scene.radius_min_px, config.scene.radius_max_px),
        scene_seed,
    )?;
    let activity = config.activity_model();
    let traces = gen_traces(&activity, config.scene.cells, config.grid.frames, grid.frame_rate_hz)?;
    let clean = render_clean(&scene, &traces)?;

    ensure_out_dir(config)?;
    let mut manifest = Manifest::new("phantom", config);
    manifest.seeds.insert("scene".into(), scene_seed);
    manifest.seeds.insert("activity".into(), activity.seed);
    let paths = &config.paths;
    write_object(&mut manifest, "clean_video", &config.resolve(&paths.clean_video), &Container::Video(clean))?;
    write_object(&mut manifest, "scene", &config.resolve(&paths.scene), &Container::Video(scene.to_video()))?;
    let csv = TraceSet::new(traces.clone(), grid.frame_rate_hz)?.to_csv();
    write_object(
        &mut manifest,
        "traces",
        &config.resolve(&paths.traces),
        &Container::Traces(TraceMatrix {
            frame_rate_hz: grid.frame_rate_hz,
            data: traces,
        }),
    )?;
    write_text(&mut manifest, "traces_csv", &config.resolve(&paths.traces).with_extension("csv"), &csv)?;
    manifest.write(config)?;
    Ok(manifest)
}
