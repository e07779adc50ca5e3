//! `beamsteer` command-line interface.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamsteer::experiments::{
    analyze, emit, run_preset, simulate, ConfigOverrides, Format, Preset, ResultTable,
};
use beamsteer::rate_engine::McOptions;
use beamsteer::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "beamsteer", version, about = "Analog beamsteering rate simulations for mmWave hybrid beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo trials (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo rates for a configuration file.
    Simulate { config: PathBuf },
    /// Reproduce one of the reference figures.
    Preset {
        /// fig2, fig3, fig4 or fig5
        name: String,
        /// Configuration override, `key=value`; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Closed-form rate-loss prediction and minimal codebook sizes.
    Analyze { config: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<beamsteer::experiments::SystemConfig> {
    let mut overrides = ConfigOverrides::parse(&fs::read_to_string(path)?)?;
    if seed.is_some() {
        overrides.master_seed = seed;
    }
    overrides.finish()
}

fn run(cli: Cli) -> Result<()> {
    let format: Format = cli.format.parse()?;
    let options = McOptions {
        workers: cli.workers,
    };
    let tables: Vec<ResultTable> = match &cli.command {
        Command::Simulate { config } => vec![simulate(&load(config, cli.seed)?, options)?],
        Command::Preset { name, set } => {
            let preset: Preset = name.parse()?;
            let mut overrides = ConfigOverrides::default();
            for assignment in set {
                overrides.set_assignment(assignment)?;
            }
            if cli.seed.is_some() {
                overrides.master_seed = cli.seed;
            }
            vec![run_preset(preset, &overrides, options)?]
        }
        Command::Analyze { config } => {
            let (loss, rule) = analyze(&load(config, cli.seed)?)?;
            vec![loss, rule]
        }
    };

    match &cli.out {
        Some(path) => {
            for (i, table) in tables.iter().enumerate() {
                let target = if i == 0 { path.clone() } else { sibling(path, i) };
                let mut file = io::BufWriter::new(fs::File::create(&target)?);
                emit(table, format, &mut file)?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for (i, table) in tables.iter().enumerate() {
                if i > 0 {
                    lock.write_all(b"\n")?;
                }
                emit(table, format, &mut lock)?;
            }
        }
    }
    Ok(())
}

// Extra tables go next to the main output: out.csv -> out_2.csv
fn sibling(path: &Path, index: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{}.{ext}", index + 1),
        None => format!("{stem}_{}", index + 1),
    };
    path.with_file_name(name)
}
