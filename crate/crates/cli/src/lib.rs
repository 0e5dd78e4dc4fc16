//! Batch pipeline around `nora-core`: phantom generation, acquisition,
//! reconstruction, evaluation and phase-transition scans driven by a TOML
//! run config.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Cap the global thread pool at `NORA_THREADS` if set.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("NORA_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("NORA_THREADS must be a positive integer, got `{raw}`")))?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
