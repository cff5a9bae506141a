//! Command line runner for simulation, inversion and comparison studies.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cisim::Scheme;

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cisim", version, about = "Absorption estimation with complex image sources")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `noise.seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "CISIM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate array pressures for the configured scene.
    Simulate,
    /// Estimate absorption from a measurement file with every configured scheme.
    Invert {
        /// Defaults to `measurement.csv` in the output directory.
        #[arg(long)]
        measurement: Option<PathBuf>,
        /// Leave the NMSE columns empty instead of simulating the exact surface field.
        #[arg(long)]
        skip_nmse: bool,
    },
    /// Compare absorption results against a reference curve.
    Compare {
        /// Absorption files; defaults to the configured schemes' outputs.
        results: Vec<PathBuf>,
        /// Use another absorption file as the reference.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Print the built-in array geometries.
    Arrays {
        #[arg(long)]
        id: Option<u8>,
    },
    /// Print quadrature nodes and weights.
    Quad {
        #[arg(long, default_value = "GLE", value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long, default_value_t = 25)]
        n: usize,
        #[arg(long, default_value_t = 30.0)]
        b: f64,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: cisim::Error| e.to_string())
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let (Some(seed), Some(noise)) = (cli.seed, config.noise.as_mut()) {
        noise.seed = seed;
    }
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let out = match (&cli.out, &config.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    Ok(Context { config, base, out })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate => {
            commands::simulate(&context(&cli)?)?;
        }
        Command::Invert { measurement, skip_nmse } => {
            let ctx = context(&cli)?;
            let m = measurement.clone().unwrap_or_else(|| ctx.out.join(commands::MEASUREMENT_FILE));
            let failed = commands::invert(&ctx, &m, !skip_nmse)?;
            if failed > 0 {
                return Err(CliError::PartialFailure(format!(
                    "{failed} frequency estimates failed; see the diagnostics files"
                )));
            }
        }
        Command::Compare { results, reference } => {
            commands::compare(&context(&cli)?, results, reference.as_deref())?;
        }
        Command::Arrays { id } => {
            if let Some(o) = &cli.out {
                std::fs::create_dir_all(o).map_err(|e| CliError::io(o, e))?;
            }
            commands::arrays(*id, cli.out.as_deref())?;
        }
        Command::Quad { scheme, n, b } => commands::quad(*scheme, *n, *b)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
