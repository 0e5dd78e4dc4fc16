use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nora_cli::commands;
use nora_cli::{CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "nora", version, about = "Compressive line-scan video: simulate, acquire, recover, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene, its traces and the clean video.
    Phantom(Common),
    /// Blur, subsample and add noise to the clean video.
    Acquire(Common),
    /// Recover the video from its measurements.
    Reconstruct(Common),
    /// Compare the reconstruction with the ground truth.
    Evaluate(Common),
    /// Scan rank against lines per frame and record recovery success.
    PhaseDiagram(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set plan.speedup=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut overrides = self.set.clone();
        if let Some(out) = &self.out {
            overrides.push(format!("out_dir={}", toml::Value::String(out.display().to_string())));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> CliResult<String> {
    nora_cli::init_threads()?;
    Ok(match cli.command {
        Command::Phantom(c) => {
            let m = commands::cmd_phantom(&c.load()?)?;
            format!("wrote {} files", m.files.len())
        }
        Command::Acquire(c) => {
            let (_, s) = commands::cmd_acquire(&c.load()?)?;
            format!("acquired {} lines/frame, {} samples", s.lines_per_frame, s.total_samples)
        }
        Command::Reconstruct(c) => {
            let (_, s) = commands::cmd_reconstruct(&c.load()?)?;
            format!("reconstructed {} batch(es)", s.batches.len())
        }
        Command::Evaluate(c) => {
            let (_, r) = commands::cmd_evaluate(&c.load()?)?;
            let psnr = r.psnr_db.map_or("inf".to_string(), |p| format!("{p:.2}"));
            let median = r.median_correlation.map_or("n/a".to_string(), |m| format!("{m:.3}"));
            format!("relative error {:.4}, PSNR {psnr} dB, median trace r {median}", r.relative_error)
        }
        Command::PhaseDiagram(c) => {
            let (_, _, s) = commands::cmd_phase_diagram(&c.load()?)?;
            let b: Vec<String> = s
                .boundaries
                .iter()
                .map(|(r, l)| format!("R={r}: {}", l.map_or("-".to_string(), |l| l.to_string())))
                .collect();
            format!("boundaries {}", b.join(", "))
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
