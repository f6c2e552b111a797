use std::path::PathBuf;
use std::process::ExitCode;

use bergman_lab::harness::{run, Command, ExperimentConfig};
use bergman_lab::{Error, Result};
use clap::Parser;

/// Bergman kernel and Hankel operator experiments.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// One of: kernel, metric, distance, net, hankel, omega-scan, decompose,
    /// sbg-check, t91, variety, report.
    command: String,
    /// Flat TOML experiment file; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads. Changes speed only, never the output.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the grid resolution of the config.
    #[arg(long)]
    resolution: Option<f64>,
}

fn execute(cli: &Cli) -> Result<()> {
    let cmd = Command::parse(&cli.command)?;
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if cli.resolution.is_some() {
        cfg.resolution = cli.resolution;
    }
    let out = run(&cfg, cmd, &cli.out)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for f in &out.files {
        println!("{}", cli.out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code().clamp(1, 255) as u8)
        }
    }
}
