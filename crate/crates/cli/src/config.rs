//! Flat key-value scenario configuration with SI-unit suffixes.
//!
//! Lines look like `mode.f_res = 133.88kHz`; `#` starts a comment. Every
//! key is known, has a unit kind, and carries a default except for the
//! calibration-marker amplitude, which must be given explicitly whenever a
//! command calibrates a spectrum. Unknown keys are rejected.

use std::collections::BTreeMap;

use opto_tomo_core::*;

use crate::error::{CliError, CliResult};

/// Dimension expected for a key's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UnitKind {
    Frequency,     // Hz
    Power,         // W
    Length,        // m
    Mass,          // g in the file, stored as kg
    Temperature,   // K
    Time,          // s
    Angle,         // rad
    Dimensionless, // bare number
}

impl UnitKind {
    fn symbol(&self) -> Option<&'static str> {
        match self {
            UnitKind::Frequency => Some("Hz"),
            UnitKind::Power => Some("W"),
            UnitKind::Length => Some("m"),
            UnitKind::Mass => Some("g"),
            UnitKind::Temperature => Some("K"),
            UnitKind::Time => Some("s"),
            UnitKind::Angle => Some("rad"),
            _ => None,
        }
    }

    /// Extra factor mapping the file unit to SI (grams to kilograms).
    fn to_si(&self) -> f64 {
        match self {
            UnitKind::Mass => 1e-3,
            _ => 1.0,
        }
    }
}

fn prefix_factor(c: char) -> Option<f64> {
    Some(match c {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        _ => return None,
    })
}

/// Parses a single scalar like `133.88kHz`, `40nm`, `0.17` or `80ng`.
fn parse_scalar(raw: &str, kind: UnitKind, key: &str) -> CliResult<f64> {
    let raw = raw.trim();
    let bad = |msg: String| CliError::Config(format!("key '{key}': {msg}"));

    let mut body = raw;
    let mut scale = 1.0;
    if let Some(symbol) = kind.symbol() {
        if let Some(stripped) = body.strip_suffix(symbol) {
            body = stripped;
            scale = kind.to_si();
            if let Some(last) = body.chars().last() {
                if let Some(p) = prefix_factor(last) {
                    // A trailing digit or '.' means the prefix candidate is
                    // part of the number (there is none).
                    body = &body[..body.len() - last.len_utf8()];
                    scale *= p;
                }
            }
        }
    }
    let value: f64 = body
        .trim()
        .parse()
        .map_err(|_| bad(format!("cannot parse '{raw}' as a number with unit {kind:?}")))?;
    if !value.is_finite() {
        return Err(bad(format!("value '{raw}' is not finite")));
    }
    Ok(value * scale)
}

/// Raw parsed file: key -> value string.
fn parse_lines(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone)]
pub struct SimulationParams {
    pub duration: f64,
    pub rate: f64,
    pub seed: u64,
    pub rbw: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseBudgetParams {
    pub powers: Vec<f64>,
    pub simulate: bool,
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct ThetaScanParams {
    /// Input power of the scan scenario; the membrane-to-shot band ratio
    /// scales linearly with it.
    pub input_power: f64,
    pub rbw: f64,
    pub segments: usize,
    pub segment_duration: f64,
}

#[derive(Debug, Clone)]
pub struct SpectraParams {
    pub angles: Vec<f64>,
    pub rbw: f64,
}

#[derive(Debug, Clone)]
pub struct TomographyParams {
    pub angles: usize,
    pub samples_per_angle: usize,
    /// Excess amplitude-quadrature variance of the dark-port field in
    /// shot-noise units (0 = vacuum).
    pub excess_variance: f64,
    pub grid_half_extent: f64,
    pub grid_points: usize,
    pub hist_half_range: f64,
    pub hist_bins: usize,
}

/// Fully validated scenario: every core invariant checked at load.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub membrane: MembraneOptics,
    pub mode: MechanicalMode,
    pub interferometer: InterferometerConfig,
    pub efficiency: EfficiencyBudget,
    pub homodyne_angle: f64,
    pub pm_frequency: f64,
    pub lock_target: f64,
    pub simulation: SimulationParams,
    pub marker_frequency: f64,
    pub marker_amplitude: Option<f64>,
    pub dark_psd: f64,
    pub noise_budget: NoiseBudgetParams,
    pub theta_scan: ThetaScanParams,
    pub spectra: SpectraParams,
    pub tomography: TomographyParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::from_text("").expect("defaults are valid")
    }
}

struct Raw {
    map: BTreeMap<String, String>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn scalar(&mut self, key: &str, kind: UnitKind, default: f64) -> CliResult<f64> {
        match self.take(key) {
            Some(v) => parse_scalar(&v, kind, key),
            None => Ok(default),
        }
    }

    fn integer(&mut self, key: &str, default: u64) -> CliResult<u64> {
        match self.take(key) {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}': '{v}' is not an integer"))),
            None => Ok(default),
        }
    }

    fn boolean(&mut self, key: &str, default: bool) -> CliResult<bool> {
        match self.take(key) {
            Some(v) => match v.trim() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(CliError::Config(format!(
                    "key '{key}': expected true/false, got '{other}'"
                ))),
            },
            None => Ok(default),
        }
    }

    fn list(&mut self, key: &str, kind: UnitKind, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.take(key) {
            Some(v) => v
                .split(',')
                .map(|item| parse_scalar(item, kind, key))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }
}

impl ScenarioConfig {
    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut raw = Raw {
            map: parse_lines(text)?,
        };

        let n = raw.scalar("membrane.refractive_index", UnitKind::Dimensionless, 2.2)?;
        let thickness = raw.scalar("membrane.thickness", UnitKind::Length, 40e-9)?;
        let side = raw.scalar("membrane.side_length", UnitKind::Length, 1.5e-3)?;
        let density = raw.scalar("membrane.density", UnitKind::Dimensionless, 3100.0)?;

        let wavelength = raw.scalar("interferometer.wavelength", UnitKind::Length, 1064e-9)?;
        let input_power = raw.scalar("interferometer.input_power", UnitKind::Power, 0.2)?;
        let lo_power = raw.scalar("interferometer.lo_power", UnitKind::Power, 12e-3)?;
        let reflectivity =
            raw.scalar("interferometer.power_reflectivity", UnitKind::Dimensionless, 0.17)?;
        let defect =
            raw.scalar("interferometer.contrast_defect", UnitKind::Dimensionless, 1e-3)?;

        let membrane =
            MembraneOptics::new(n, thickness, side, density, reflectivity, wavelength, 0.02)
                .map_err(CliError::from)?;
        let interferometer = InterferometerConfig::new(
            wavelength,
            input_power,
            lo_power,
            reflectivity.sqrt(),
            defect,
        )?;

        let f_res = raw.scalar("mode.f_res", UnitKind::Frequency, 133.88e3)?;
        let q = raw.scalar("mode.quality_factor", UnitKind::Dimensionless, 6e5)?;
        let temperature = raw.scalar("mode.temperature", UnitKind::Temperature, 300.0)?;
        let mass = match raw.take("mode.mass") {
            Some(v) if v.trim() == "auto" => effective_mass(&membrane),
            Some(v) => parse_scalar(&v, UnitKind::Mass, "mode.mass")?,
            None => 80e-12,
        };
        let mode = MechanicalMode::new(f_res, q, mass, temperature)?;

        let qe = raw.scalar("efficiency.quantum", UnitKind::Dimensionless, 0.70)?;
        let optical = raw.scalar("efficiency.optical", UnitKind::Dimensionless, 5.0 / 7.0)?;
        let efficiency = overall_efficiency(qe, optical)?;

        let homodyne_angle = raw.scalar("homodyne.angle", UnitKind::Angle, 0.0)?;
        let pm_frequency = raw.scalar("homodyne.pm_frequency", UnitKind::Frequency, 10e6)?;
        let lock_target = raw.scalar("homodyne.lock_target", UnitKind::Angle, 0.0)?;

        let simulation = SimulationParams {
            duration: raw.scalar("simulation.duration", UnitKind::Time, 0.3)?,
            rate: raw.scalar("simulation.rate", UnitKind::Frequency, 1.5e6)?,
            seed: raw.integer("simulation.seed", 1)?,
            rbw: raw.scalar("simulation.rbw", UnitKind::Frequency, 1e3)?,
        };

        let marker_frequency = raw.scalar("marker.frequency", UnitKind::Frequency, 128e3)?;
        let marker_amplitude = match raw.take("marker.amplitude") {
            Some(v) => Some(parse_scalar(&v, UnitKind::Length, "marker.amplitude")?),
            None => None,
        };
        let dark_psd = raw.scalar("noise.dark_psd", UnitKind::Dimensionless, 0.0)?;
        if dark_psd < 0.0 {
            return Err(CliError::Config("noise.dark_psd must be >= 0".into()));
        }

        let noise_budget = NoiseBudgetParams {
            powers: raw.list("noise_budget.powers", UnitKind::Power, &[0.02, 0.2])?,
            simulate: raw.boolean("noise_budget.simulate", true)?,
            f_min: raw.scalar("noise_budget.f_min", UnitKind::Frequency, 50e3)?,
            f_max: raw.scalar("noise_budget.f_max", UnitKind::Frequency, 300e3)?,
            points: raw.integer("noise_budget.points", 600)? as usize,
        };
        let theta_scan = ThetaScanParams {
            input_power: raw.scalar("theta_scan.input_power", UnitKind::Power, 0.25e-3)?,
            rbw: raw.scalar("theta_scan.rbw", UnitKind::Frequency, 10e3)?,
            segments: raw.integer("theta_scan.segments", 64)? as usize,
            segment_duration: raw.scalar("theta_scan.segment_duration", UnitKind::Time, 0.125)?,
        };
        let spectra = SpectraParams {
            angles: raw.list(
                "spectra.angles",
                UnitKind::Angle,
                &[0.0, std::f64::consts::FRAC_PI_3, 1.45, std::f64::consts::FRAC_PI_2],
            )?,
            rbw: raw.scalar("spectra.rbw", UnitKind::Frequency, 500.0)?,
        };
        let tomography = TomographyParams {
            angles: raw.integer("tomography.angles", 12)? as usize,
            samples_per_angle: raw.integer("tomography.samples_per_angle", 200_000)? as usize,
            excess_variance: raw.scalar("tomography.excess_variance", UnitKind::Dimensionless, 4.0)?,
            grid_half_extent: raw.scalar(
                "tomography.grid_half_extent",
                UnitKind::Dimensionless,
                4.0,
            )?,
            grid_points: raw.integer("tomography.grid_points", 61)? as usize,
            hist_half_range: raw.scalar(
                "tomography.hist_half_range",
                UnitKind::Dimensionless,
                8.0,
            )?,
            hist_bins: raw.integer("tomography.hist_bins", 160)? as usize,
        };

        if !raw.map.is_empty() {
            let unknown: Vec<&String> = raw.map.keys().collect();
            return Err(CliError::Config(format!("unknown keys: {unknown:?}")));
        }

        let cfg = ScenarioConfig {
            membrane,
            mode,
            interferometer,
            efficiency,
            homodyne_angle,
            pm_frequency,
            lock_target,
            simulation,
            marker_frequency,
            marker_amplitude,
            dark_psd,
            noise_budget,
            theta_scan,
            spectra,
            tomography,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let s = &self.simulation;
        if s.duration <= 0.0 || s.rate <= 0.0 {
            return Err(CliError::Config(
                "simulation.duration and simulation.rate must be positive".into(),
            ));
        }
        if s.rate <= 10.0 * self.mode.resonance_frequency {
            return Err(CliError::Config(format!(
                "simulation.rate = {} Hz undersamples the {} Hz mode (need > 10 f_res)",
                s.rate, self.mode.resonance_frequency
            )));
        }
        // Build one homodyne config to check the LO-dominance invariant.
        self.homodyne(self.homodyne_angle)?;
        if self.noise_budget.powers.is_empty() {
            return Err(CliError::Config("noise_budget.powers must not be empty".into()));
        }
        if self.noise_budget.f_min >= self.noise_budget.f_max {
            return Err(CliError::Config("noise_budget.f_min must be < f_max".into()));
        }
        if self.tomography.angles < 3 {
            return Err(CliError::Config("tomography.angles must be >= 3".into()));
        }
        Ok(())
    }

    /// Homodyne configuration at the given readout angle.
    pub fn homodyne(&self, angle: f64) -> CliResult<HomodyneConfig> {
        HomodyneConfig::new(
            angle,
            self.interferometer.lo_power.sqrt(),
            self.pm_frequency,
            self.lock_target,
            self.interferometer.carrier_leakage_power(),
        )
        .map_err(CliError::from)
    }

    /// The calibration marker; an error when the amplitude was not
    /// configured (it has no default).
    pub fn marker(&self) -> CliResult<CalibrationMarker> {
        let amplitude = self.marker_amplitude.ok_or_else(|| {
            CliError::Config(
                "marker.amplitude is required for calibrated output and has no default".into(),
            )
        })?;
        let marker = CalibrationMarker::new(self.marker_frequency, amplitude)?;
        marker.validate_for_mode(&self.mode)?;
        Ok(marker)
    }

    /// Interferometer at another input power, same optics.
    pub fn interferometer_at_power(&self, power: f64) -> CliResult<InterferometerConfig> {
        InterferometerConfig::new(
            self.interferometer.wavelength,
            power,
            self.interferometer.lo_power,
            self.interferometer.membrane_amplitude_reflectivity,
            self.interferometer.dark_port_contrast_defect,
        )
        .map_err(CliError::from)
    }
}
