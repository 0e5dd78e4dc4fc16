use nora_core::analysis::{
    coherence_report, error_bound, median_filter_3d, pals_traces, psnr, relative_error, trace_correlations, MetricsReport,
    TraceSet,
};
use nora_core::container::Container;
use nora_core::phantom::Scene;
use nora_core::video::numerical_rank;
use nora_core::VideoMatrix;

use super::{read_object, write_text, wrong_kind, AcquireSummary, Manifest};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Relative singular value cutoff for the rank used in the coherence.
const RANK_TOL: f64 = 1e-8;

fn read_video(path: &std::path::Path) -> CliResult<VideoMatrix> {
    match read_object(path)? {
        Container::Video(v) => Ok(v),
        _ => Err(wrong_kind(path, "video")),
    }
}

/// Compare a reconstruction with the ground truth.
pub fn cmd_evaluate(config: &RunConfig) -> CliResult<(Manifest, MetricsReport)> {
    let paths = &config.paths;
    let recon = read_video(&config.resolve(&paths.reconstruction))?;
    let clean = read_video(&config.resolve(&paths.clean_video))?;
    let scene_video = read_video(&config.resolve(&paths.scene))?;
    let traces_path = config.resolve(&paths.traces);
    let truth = match read_object(&traces_path)? {
        Container::Traces(t) => t,
        _ => return Err(wrong_kind(&traces_path, "traces")),
    };
    recon.check_same_shape(&clean)?;
    if !scene_video.grid.same_shape(&clean.grid) {
        return Err(CliError::Config("scene grid does not match the videos".into()));
    }
    let scene = Scene::from_video(&scene_video, 0)?;
    if truth.data.nrows() != scene.cells() || truth.data.ncols() != clean.frames() {
        return Err(CliError::Config(format!(
            "traces are {}x{}, expected {}x{}",
            truth.data.nrows(),
            truth.data.ncols(),
            scene.cells(),
            clean.frames()
        )));
    }

    let measured_error = (&recon.data - &clean.data).norm();
    let window = config.evaluate.median_window;
    let filtered = if window == [1, 1, 1] {
        recon.clone()
    } else {
        median_filter_3d(&recon, (window[0], window[1], window[2]))?
    };
    let est = pals_traces(&filtered, &scene)?;
    let corr = trace_correlations(&est, &TraceSet::new(truth.data, truth.frame_rate_hz)?)?;
    let mut report = MetricsReport::new(
        psnr(&recon.data, &clean.data)?,
        &corr,
        measured_error,
        relative_error(&recon.data, &clean.data)?,
    );
    report.notes.push(format!(
        "traces extracted after a {}x{}x{} median filter",
        window[0], window[1], window[2]
    ));

    let rank = numerical_rank(&clean.data, RANK_TOL);
    if rank > 0 {
        let coherence = coherence_report(&clean, &config.psf()?, rank)?;
        report.mu_b2 = Some(coherence.mu_b2_unit_sum);
        report.coherence = Some(coherence);
    }
    theorem_check(config, &mut report, &clean)?;

    let mut manifest = Manifest::new("evaluate", config);
    write_text(&mut manifest, "traces_csv", &config.out_dir.join("reconstruction_traces.csv"), &est.to_csv())?;
    write_text(&mut manifest, "metrics", &config.out_dir.join("metrics.json"), &report.to_json())?;
    manifest.write(config)?;
    Ok((manifest, report))
}

/// Fill the error bound when the noise level and sample count are known.
fn theorem_check(config: &RunConfig, report: &mut MetricsReport, clean: &VideoMatrix) -> CliResult<()> {
    let acquired = match Manifest::read(config, "acquire")? {
        Some(m) => serde_json::from_value::<AcquireSummary>(m.details).ok(),
        None => None,
    };
    let Some(acquired) = acquired else {
        report.notes.push("no acquisition manifest; error bound not evaluated".into());
        return Ok(());
    };
    let used_eps = Manifest::read(config, "reconstruct")?
        .and_then(|m| m.details.get("epsilon_total").and_then(|v| v.as_f64()));
    let eps = match (used_eps, acquired.expected_noise_norm) {
        (Some(e), _) => e,
        (None, Some(e)) => e,
        (None, None) => {
            report.notes.push("noiseless acquisition; error bound not evaluated".into());
            return Ok(());
        }
    };
    let (n, t, m) = (clean.grid.pixels(), clean.frames(), acquired.total_samples);
    report.theorem_error_bound = Some(error_bound(n, t, m, eps));
    report.notes.push(format!(
        "error bound uses the noise norm epsilon = {eps} and M = {m} scalar samples"
    ));
    if let Some(std) = acquired.noise_std_rms {
        report.notes.push(format!(
            "with epsilon read as the per-entry noise std ({std}) the bound would be {}",
            error_bound(n, t, m, std)
        ));
    }
    Ok(())
}
