#![allow(dead_code)]

//! Shared pipeline helpers for the integration and acceptance suites.

use opto_tomo_core::*;

pub const FS: f64 = 1.5e6;
pub const MARKER_FREQ: f64 = 128e3;

/// Marker drive for full-Q runs: well above the shot floor, well below the
/// thermal resonance line.
pub const MARKER_AMP_FULL_Q: f64 = 2e-13;

/// Marker drive for desk-scale (Q = 100) runs, where the broadened thermal
/// tail at the marker frequency is ~4.7e-28 m^2/Hz.
pub const MARKER_AMP_TEST_Q: f64 = 3e-12;

/// Paper-parameter mode (Q = 6e5) at room temperature.
pub fn full_q_mode() -> MechanicalMode {
    MechanicalMode::new(133.88e3, 6e5, 80e-12, 300.0).unwrap()
}

/// Desk-scale mode for statistics-heavy runs.
pub fn test_mode(q: f64) -> MechanicalMode {
    MechanicalMode::new(133.88e3, q, 80e-12, 300.0).unwrap()
}

pub fn marker(amplitude: f64) -> CalibrationMarker {
    CalibrationMarker::new(MARKER_FREQ, amplitude).unwrap()
}

/// Synthesizes the full readout chain at theta = 0 and returns the
/// marker-calibrated displacement spectrum.
///
/// `motion` of `None` runs shot-only (membrane blocked, marker still
/// injected), matching the way a shot-noise reference is taken.
pub fn calibrated_spectrum(
    motion: Option<&TimeSeries>,
    config: &InterferometerConfig,
    duration: f64,
    rbw: f64,
    marker_amplitude: f64,
    seed: u64,
) -> CalibratedSpectrum {
    let eff = EfficiencyBudget::reference();
    let hcfg = HomodyneConfig::reference();
    let n = (duration * FS).round() as usize;
    let base = match motion {
        Some(ts) => {
            assert_eq!(ts.len(), n, "motion length must match duration");
            ts.clone()
        }
        None => TimeSeries::new(vec![0.0; n], FS, 0, SampleUnit::Meters).unwrap(),
    };
    let marked = base.with_sinusoid(MARKER_FREQ, marker_amplitude, 0.0);
    let y = synthesize_detector_output(&marked, config, &eff, &hcfg, seed).unwrap();
    let psd = welch_psd(&y, rbw, Window::Hann, 0.5).unwrap();
    calibrate_displacement(&psd, &marker(marker_amplitude)).unwrap()
}

/// Mean amplitude spectral density over a band, from the power mean.
pub fn band_asd(psd: &SpectralDensity, f_lo: f64, f_hi: f64) -> f64 {
    psd.band_mean(f_lo, f_hi).sqrt()
}
