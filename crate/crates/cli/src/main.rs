//! `moutard`: run Moutard-type transforms from TOML configurations.

mod config;
mod output;
mod presets;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, ConfigError, Flat};
use presets::Preset;
use run::CliError;

#[derive(Parser)]
#[command(name = "moutard", version, about = "Moutard-type transforms of Dirac systems and generalized analytic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in example and write its fields, report and convergence orders.
    Example {
        #[arg(value_enum)]
        name: Preset,
        /// Override a configuration key, e.g. `--set grid=[33,33]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print the preset configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Transform once on the configured grid and write the fields.
    Transform {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit convergence orders of every residual on 33², 65² and 129² grids.
    Verify {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Tabulate the pole geometry of the circle-pole family over parameter ranges.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn load(path: &Path, out_dir: Option<PathBuf>) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = Config::from_flat(Flat::parse(&text)?)?;
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    Ok(cfg)
}

fn finish_report(report: &output::Report, cfg: &Config) -> Result<(), CliError> {
    let path = report.write(&cfg.out_dir)?;
    println!("{}", path.display());
    Ok(())
}

fn verification_failed() -> ExitCode {
    eprintln!("error: a residual converges slower than order {}", run::MIN_ORDER);
    ExitCode::from(3)
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Example { name, overrides, out_dir, print_config } => {
            if print_config {
                print!("{}", name.toml().trim_start());
                return Ok(ExitCode::SUCCESS);
            }
            let mut flat = Flat::parse(name.toml())?;
            for o in &overrides {
                flat.set(o)?;
            }
            let mut cfg = Config::from_flat(flat)?;
            if let Some(dir) = out_dir {
                cfg.out_dir = dir;
            }
            let mut report = run::transform(&cfg, "example")?;
            let (studies, grids) = run::convergence(&cfg)?;
            let ok = run::record_study(&mut report, &cfg, &studies, &grids)?;
            finish_report(&report, &cfg)?;
            Ok(if ok { ExitCode::SUCCESS } else { verification_failed() })
        }
        Command::Transform { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            if cfg.sweep.is_some() {
                return Err(ConfigError::Unknown("sweep".into()).into());
            }
            let report = run::transform(&cfg, "transform")?;
            finish_report(&report, &cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let (report, ok) = run::verify(&cfg)?;
            finish_report(&report, &cfg)?;
            Ok(if ok { ExitCode::SUCCESS } else { verification_failed() })
        }
        Command::Sweep { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let Some(sweep) = &cfg.sweep else {
                return Err(ConfigError::Missing("sweep.beta".into()).into());
            };
            print!("{}", run::sweep(&cfg, sweep)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
