//! Dark-port signal transfer and quantum-noise imprecision of the
//! membrane interferometer.
//!
//! A membrane displacement x phase-shifts the reflected carrier by
//! 2 k r_m x; interference at the main beam splitter converts this into an
//! amplitude-quadrature sideband at the dark port. In the linearized
//! small-displacement regime (k x << 1) the sideband amplitude per unit
//! displacement is
//!
//! G = 2 k r_m sqrt(P_in / (hbar omega_L))   [sqrt(photons/s) per meter]
//!
//! and the displacement-referred shot-noise imprecision is the flat
//! one-sided spectrum
//!
//! S_x^imp = hbar omega_L / (2 eta P_in) / (2 k r_m)^2 = 1 / (2 eta G^2).
//!
//! These factor conventions are normative for the crate: with
//! lambda = 1064 nm, P_in = 200 mW, eta = 0.5 and r_m = sqrt(0.17) they
//! reproduce a 1.98e-16 m/sqrt(Hz) floor.

use std::f64::consts::PI;

use crate::constants::{C_LIGHT, HBAR};
use crate::error::{ensure_finite, Error, Result};
use crate::mechanics::{thermal_psd, MechanicalMode};

/// Maximum carrier power allowed to leak out of the dark port, W.
///
/// Keeping the leakage below this bound together with the reference 12 mW
/// local oscillator maintains the 20x LO-dominance condition of the
/// homodyne model.
pub const MAX_DARK_PORT_LEAKAGE_W: f64 = 0.5e-3;

/// Laser, power and dark-port parameters of the interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerConfig {
    /// Laser wavelength lambda in m.
    pub wavelength: f64,
    /// Input power P_in in W.
    pub input_power: f64,
    /// Local-oscillator power P_LO in W.
    pub lo_power: f64,
    /// Membrane amplitude reflectivity r_m = sqrt(R), in (0, 1).
    pub membrane_amplitude_reflectivity: f64,
    /// Fraction of P_in leaking out of the dark port as carrier, in [0, 1).
    pub dark_port_contrast_defect: f64,
}

impl InterferometerConfig {
    pub fn new(
        wavelength: f64,
        input_power: f64,
        lo_power: f64,
        membrane_amplitude_reflectivity: f64,
        dark_port_contrast_defect: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength),
            ("input_power", input_power),
            ("lo_power", lo_power),
            ("membrane_amplitude_reflectivity", membrane_amplitude_reflectivity),
            ("dark_port_contrast_defect", dark_port_contrast_defect),
        ] {
            ensure_finite(name, v)?;
        }
        if wavelength <= 0.0 {
            return Err(Error::domain("wavelength must be positive"));
        }
        if input_power <= 0.0 || lo_power <= 0.0 {
            return Err(Error::domain("input and LO power must be positive"));
        }
        if !(0.0..1.0).contains(&membrane_amplitude_reflectivity)
            || membrane_amplitude_reflectivity == 0.0
        {
            return Err(Error::domain("amplitude reflectivity must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&dark_port_contrast_defect) {
            return Err(Error::domain("contrast defect must lie in [0, 1)"));
        }
        let leakage = dark_port_contrast_defect * input_power;
        if leakage >= MAX_DARK_PORT_LEAKAGE_W {
            return Err(Error::domain(format!(
                "dark-port carrier leakage {leakage:.3e} W exceeds {MAX_DARK_PORT_LEAKAGE_W:.1e} W"
            )));
        }
        Ok(Self {
            wavelength,
            input_power,
            lo_power,
            membrane_amplitude_reflectivity,
            dark_port_contrast_defect,
        })
    }

    /// Optical wavenumber k = 2 pi / lambda.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Laser angular frequency omega_L = 2 pi c / lambda.
    pub fn laser_angular_frequency(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.wavelength
    }

    /// Carrier power leaking out of the dark port, W.
    pub fn carrier_leakage_power(&self) -> f64 {
        self.dark_port_contrast_defect * self.input_power
    }

    /// Reference configuration: 1064 nm, 200 mW in, 12 mW LO, R = 17%.
    pub fn reference() -> Self {
        Self::new(1064e-9, 0.2, 12e-3, 0.17_f64.sqrt(), 1e-3).expect("reference config is valid")
    }

    /// Reference configuration at a different input power.
    pub fn reference_with_power(input_power: f64) -> Result<Self> {
        Self::new(1064e-9, input_power, 12e-3, 0.17_f64.sqrt(), 1e-3)
    }
}

/// Detection efficiency budget. The total is always the product of the two
/// factors; it is never stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyBudget {
    /// Photodiode quantum efficiency, in (0, 1].
    pub detector_quantum_efficiency: f64,
    /// Propagation/mode-matching efficiency of the optical path, in (0, 1].
    pub optical_path_efficiency: f64,
}

impl EfficiencyBudget {
    pub fn total(&self) -> f64 {
        self.detector_quantum_efficiency * self.optical_path_efficiency
    }

    /// Reference budget: 70% quantum efficiency and 5/7 path efficiency,
    /// i.e. an overall efficiency of one half.
    pub fn reference() -> Self {
        overall_efficiency(0.70, 5.0 / 7.0).expect("reference budget is valid")
    }
}

/// Builds an efficiency budget from detector quantum efficiency and optical
/// path efficiency, both in (0, 1].
pub fn overall_efficiency(qe: f64, optics: f64) -> Result<EfficiencyBudget> {
    ensure_finite("qe", qe)?;
    ensure_finite("optics", optics)?;
    if !(qe > 0.0 && qe <= 1.0) || !(optics > 0.0 && optics <= 1.0) {
        return Err(Error::domain(format!(
            "efficiencies must lie in (0, 1], got qe = {qe}, optics = {optics}"
        )));
    }
    Ok(EfficiencyBudget {
        detector_quantum_efficiency: qe,
        optical_path_efficiency: optics,
    })
}

/// Dark-port sideband amplitude per unit membrane displacement,
/// G = 2 k r_m sqrt(P_in / (hbar omega_L)), in sqrt(photons/s) per meter.
pub fn displacement_to_output_gain(config: &InterferometerConfig) -> f64 {
    let photon_flux = config.input_power / (HBAR * config.laser_angular_frequency());
    2.0 * config.wavenumber() * config.membrane_amplitude_reflectivity * photon_flux.sqrt()
}

/// Frequency-flat shot-noise imprecision S_x^imp in m^2/Hz.
///
/// Independent of both frequency and readout angle; the frequency argument
/// exists so the op composes with the other spectra.
pub fn shot_imprecision_psd(
    _f: f64,
    config: &InterferometerConfig,
    eff: &EfficiencyBudget,
) -> f64 {
    let eta = eff.total();
    let k = config.wavenumber();
    let r_m = config.membrane_amplitude_reflectivity;
    let flux_term = HBAR * config.laser_angular_frequency() / (2.0 * eta * config.input_power);
    flux_term / (2.0 * k * r_m).powi(2)
}

/// Total readout noise: thermal + imprecision + detector dark noise, all
/// one-sided displacement-referred PSDs in m^2/Hz. Independent noises add
/// in power.
pub fn total_readout_psd(
    f: f64,
    mode: &MechanicalMode,
    config: &InterferometerConfig,
    eff: &EfficiencyBudget,
    dark_noise_psd: f64,
) -> f64 {
    debug_assert!(dark_noise_psd >= 0.0);
    thermal_psd(f, mode) + shot_imprecision_psd(f, config, eff) + dark_noise_psd
}
