//! `opto-tomo`: scenario runner for the membrane-interferometer simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics or
//! reconstruction failure (including failed report checks), 4 I/O failure.

mod commands;
mod config;
mod csv_out;
mod error;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Context, OutputFormat};
use config::ScenarioConfig;
use error::{CliError, CliResult};
use report::RunReport;

#[derive(Parser)]
#[command(name = "opto-tomo", version, about = "Membrane-interferometer noise budget, homodyne scans and tomography")]
struct Cli {
    /// Scenario configuration file (flat key = value with SI suffixes).
    /// Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/SVG files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides simulation.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::CsvSvg)]
    format: Format,

    /// Suppress stdout reporting (files are still written).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    #[value(name = "csv")]
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Subcommand)]
enum Command {
    /// Model noise curves plus simulated calibrated spectra per power.
    NoiseBudget,
    /// Zero-span power at resonance while the readout angle ramps.
    ThetaScan,
    /// Detector spectra at several readout angles.
    Spectra,
    /// Covariance reconstruction and Wigner back-projection.
    Tomography,
}

fn load_config(cli: &Cli) -> CliResult<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(path.display().to_string(), e))?;
            ScenarioConfig::from_text(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<RunReport> {
    if let Ok(threads) = std::env::var("OPTO_TOMO_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| CliError::Config(format!("OPTO_TOMO_THREADS = '{threads}' is not a thread count")))?;
        // Ignore the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load_config(cli)?;
    let ctx = Context {
        cfg: &cfg,
        out_dir: &cli.out,
        format: match cli.format {
            Format::Csv => OutputFormat::Csv,
            Format::CsvSvg => OutputFormat::CsvSvg,
        },
        quiet: cli.quiet,
    };
    let report = match cli.command {
        Command::NoiseBudget => commands::noise_budget::run(&ctx)?,
        Command::ThetaScan => commands::theta_scan::run(&ctx)?,
        Command::Spectra => commands::spectra::run(&ctx)?,
        Command::Tomography => commands::tomography::run(&ctx)?,
    };
    csv_out::write_file(&ctx.path("report.txt"), &report.to_string())?;
    ctx.say(&report.to_string());
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more report checks failed");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
