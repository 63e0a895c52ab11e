//! Scenario commands. Each command writes CSV data (and optionally SVG
//! plots) into the output directory and returns a [`RunReport`].

pub mod noise_budget;
pub mod spectra;
pub mod theta_scan;
pub mod tomography;

use std::path::{Path, PathBuf};

use opto_tomo_core::*;

use crate::config::ScenarioConfig;
use crate::csv_out;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvSvg,
}

pub struct Context<'a> {
    pub cfg: &'a ScenarioConfig,
    pub out_dir: &'a Path,
    pub format: OutputFormat,
    pub quiet: bool,
}

impl Context<'_> {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_csv(&self, name: &str, content: &str) -> CliResult<()> {
        csv_out::write_file(&self.path(name), content)
    }

    pub fn write_svg(&self, name: &str, content: &str) -> CliResult<()> {
        if self.format == OutputFormat::CsvSvg {
            csv_out::write_file(&self.path(name), content)?;
        }
        Ok(())
    }

    pub fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

/// Synthesizes the detection chain at a fixed readout angle: membrane
/// motion (optional) plus marker, converted to detector output.
pub fn detector_run(
    cfg: &ScenarioConfig,
    interferometer: &InterferometerConfig,
    motion: Option<&TimeSeries>,
    marker: Option<&CalibrationMarker>,
    angle: f64,
    seed: u64,
) -> CliResult<TimeSeries> {
    let sim = &cfg.simulation;
    let n = (sim.duration * sim.rate).round() as usize;
    let base = match motion {
        Some(ts) => ts.clone(),
        None => TimeSeries::new(vec![0.0; n], sim.rate, 0, SampleUnit::Meters)?,
    };
    let marked = match marker {
        Some(m) => base.with_sinusoid(m.frequency, m.displacement_amplitude, 0.0),
        None => base,
    };
    let hcfg = cfg.homodyne(angle)?;
    Ok(synthesize_detector_output(
        &marked,
        interferometer,
        &cfg.efficiency,
        &hcfg,
        seed,
    )?)
}

/// Band used to estimate the displacement noise floor: off the mechanical
/// resonance and clear of the 128 kHz calibration marker.
pub const FLOOR_BAND: (f64, f64) = (60e3, 100e3);

/// Mean amplitude spectral density over a band, from the power mean.
pub fn band_asd(psd: &SpectralDensity, band: (f64, f64)) -> f64 {
    psd.band_mean(band.0, band.1).sqrt()
}
