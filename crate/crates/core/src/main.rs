use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use airs_channel::config::{load_config, parse_file, ConfigError, ConfigFile};
use airs_channel::experiment::{run_preset, ExperimentError, Preset};

/// Worker-count override; defaults to the number of CPUs.
const WORKERS_ENV: &str = "AIRS_SIM_WORKERS";

const EXIT_CONFIG: u8 = 2;
const EXIT_MATH: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "airs-sim", version, about = "AIRS/IRS-assisted MIMO channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset sweep and write CSV tables.
    Simulate {
        /// Scenario file; the reference scenario when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Ensemble size; 2000 for correlations, 500 for capacity.
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the reference scenario as TOML.
    PrintDefaults,
}

fn read_file(path: Option<&Path>) -> Result<ConfigFile, ConfigError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_file(&text)
        }
    }
}

fn init_workers() -> Result<(), String> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn config_exit(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::PrintDefaults => {
            print!("{}", ConfigFile::default().to_toml());
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!("ok: {} (sha256 {})", config.display(), c.hash);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(config_exit(&e))
            }
        },
        Command::Simulate {
            config,
            preset,
            seed,
            realizations,
            out,
        } => {
            let file = match read_file(config.as_deref()).and_then(|f| f.resolve().map(|_| f)) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(config_exit(&e));
                }
            };
            let n = realizations.unwrap_or(preset.default_realizations());
            info!("running {preset} with {n} realizations, seed {seed}");
            match run_preset(preset, &file, &out, seed, n) {
                Ok(written) => {
                    for (path, _) in written {
                        info!("wrote {}", path.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(match e {
                        ExperimentError::Config(c) => config_exit(&c),
                        ExperimentError::Model { .. } => EXIT_MATH,
                        ExperimentError::Io { .. } => EXIT_IO,
                    })
                }
            }
        }
    }
}
