//! Damped-oscillator mechanics: susceptibility, thermal noise and the
//! standard quantum limit.
//!
//! The mode is a velocity-damped harmonic oscillator with damping rate
//! gamma = Omega_m / Q. Its displacement response to force is
//!
//! chi(Omega) = 1 / (m (Omega_m^2 - Omega^2 + i Omega Omega_m / Q)),
//!
//! the fluctuation-dissipation theorem then gives the one-sided thermal
//! displacement spectrum
//!
//! S_x^th(f) = 4 k_B T (Omega_m/Q) / (m [(Omega_m^2 - Omega^2)^2 + (Omega Omega_m/Q)^2]),
//!
//! and the standard quantum limit reference curve is S_x^SQL(f) = 2 hbar |chi|.
//! All spectra are one-sided and parameterized by frequency in Hz; angular
//! frequency never appears at interfaces.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::{HBAR, K_BOLTZMANN};
use crate::error::{ensure_finite, Error, Result};

/// Fundamental mechanical mode of the membrane.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalMode {
    /// Resonance frequency f_res in Hz.
    pub resonance_frequency: f64,
    /// Quality factor Q (> 1; may be infinite for an undamped mode).
    pub quality_factor: f64,
    /// Effective (modal) mass in kg.
    pub effective_mass: f64,
    /// Bath temperature in K.
    pub temperature: f64,
}

impl MechanicalMode {
    pub fn new(
        resonance_frequency: f64,
        quality_factor: f64,
        effective_mass: f64,
        temperature: f64,
    ) -> Result<Self> {
        ensure_finite("resonance_frequency", resonance_frequency)?;
        ensure_finite("effective_mass", effective_mass)?;
        ensure_finite("temperature", temperature)?;
        if quality_factor.is_nan() {
            return Err(Error::domain("quality factor must not be NaN"));
        }
        if resonance_frequency <= 0.0 {
            return Err(Error::domain("resonance frequency must be positive"));
        }
        if quality_factor <= 1.0 {
            return Err(Error::domain("quality factor must exceed 1"));
        }
        if effective_mass <= 0.0 {
            return Err(Error::domain("effective mass must be positive"));
        }
        if temperature < 0.0 {
            return Err(Error::domain("temperature must be >= 0"));
        }
        Ok(Self {
            resonance_frequency,
            quality_factor,
            effective_mass,
            temperature,
        })
    }

    /// Angular resonance frequency Omega_m = 2 pi f_res.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.resonance_frequency
    }

    /// Velocity damping rate gamma = Omega_m / Q (zero for infinite Q).
    pub fn damping_rate(&self) -> f64 {
        if self.quality_factor.is_infinite() {
            0.0
        } else {
            self.angular_frequency() / self.quality_factor
        }
    }

    /// Equipartition displacement variance k_B T / (m Omega_m^2), in m^2.
    pub fn equipartition_variance(&self) -> f64 {
        let om = self.angular_frequency();
        K_BOLTZMANN * self.temperature / (self.effective_mass * om * om)
    }

    /// Amplitude ringdown time 2 Q / Omega_m, in s.
    pub fn ringdown_time(&self) -> f64 {
        2.0 * self.quality_factor / self.angular_frequency()
    }
}

/// Mechanical susceptibility chi(2 pi f) in m/N.
pub fn mech_susceptibility(f: f64, mode: &MechanicalMode) -> Complex64 {
    let om = 2.0 * PI * f;
    let om_m = mode.angular_frequency();
    let denom = Complex64::new(om_m * om_m - om * om, om * mode.damping_rate());
    1.0 / (mode.effective_mass * denom)
}

/// One-sided thermal displacement PSD in m^2/Hz (velocity damping).
pub fn thermal_psd(f: f64, mode: &MechanicalMode) -> f64 {
    let om = 2.0 * PI * f;
    let om_m = mode.angular_frequency();
    let gamma = mode.damping_rate();
    let detune = om_m * om_m - om * om;
    let denom = mode.effective_mass * (detune * detune + om * om * gamma * gamma);
    4.0 * K_BOLTZMANN * mode.temperature * gamma / denom
}

/// One-sided standard-quantum-limit PSD 2 hbar |chi(2 pi f)| in m^2/Hz.
///
/// Drawn as a reference curve only; back-action dynamics are not modeled.
pub fn sql_psd(f: f64, mode: &MechanicalMode) -> f64 {
    2.0 * HBAR * mech_susceptibility(f, mode).norm()
}

/// Peak SQL amplitude spectral density sqrt(2 hbar Q / (m Omega_m^2)),
/// reached at the susceptibility maximum (indistinguishable from f_res for
/// any large Q).
pub fn sql_peak_asd(mode: &MechanicalMode) -> f64 {
    let om_m = mode.angular_frequency();
    (2.0 * HBAR * mode.quality_factor / (mode.effective_mass * om_m * om_m)).sqrt()
}

/// Reference mechanical mode: 133.88 kHz, Q = 6e5, 80 ng, room temperature.
pub fn reference_mode() -> MechanicalMode {
    MechanicalMode::new(133.88e3, 6e5, 80e-12, 300.0).expect("reference mode is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dc_compliance() {
        let mode = reference_mode();
        let chi0 = mech_susceptibility(0.0, &mode);
        assert_relative_eq!(chi0.re, 1.766_521_261_6e-2, max_relative = 1e-9);
        assert_eq!(chi0.im, 0.0);
    }

    #[test]
    fn resonant_magnitude() {
        let mode = reference_mode();
        let chi = mech_susceptibility(mode.resonance_frequency, &mode);
        assert_relative_eq!(chi.norm(), 1.059_912_757e4, max_relative = 1e-9);
    }

    #[test]
    fn undamped_susceptibility_is_real() {
        let mode = MechanicalMode::new(133.88e3, f64::INFINITY, 80e-12, 300.0).unwrap();
        let chi = mech_susceptibility(100e3, &mode);
        assert_eq!(chi.im, 0.0);
        assert!(chi.re > 0.0);
    }

    #[test]
    fn thermal_peak_value() {
        // 4 k_B T Q / (m Omega_m^3), frozen from an independent evaluation.
        let mode = reference_mode();
        let s = thermal_psd(mode.resonance_frequency, &mode);
        assert_relative_eq!(s, 2.087_560_525e-22, max_relative = 1e-9);
        assert_relative_eq!(s.sqrt(), 1.444_839_27e-11, max_relative = 1e-8);
    }

    #[test]
    fn thermal_psd_nonnegative_and_zero_at_zero_kelvin() {
        let cold = MechanicalMode::new(133.88e3, 6e5, 80e-12, 0.0).unwrap();
        for f in [0.0, 50e3, 133.88e3, 1e6] {
            assert_eq!(thermal_psd(f, &cold), 0.0);
            assert!(thermal_psd(f, &reference_mode()) >= 0.0);
        }
    }

    /// Quadrature oracle for the equipartition integral: composite Simpson
    /// with a dense window across the resonance line.
    fn integrate_thermal_psd(mode: &MechanicalMode) -> f64 {
        let f_res = mode.resonance_frequency;
        let linewidth = f_res / mode.quality_factor;
        let w = (200.0 * linewidth).min(0.5 * f_res);
        let simpson = |a: f64, b: f64, n: usize| -> f64 {
            let n = if n % 2 == 0 { n } else { n + 1 };
            let h = (b - a) / n as f64;
            let mut acc = thermal_psd(a, mode) + thermal_psd(b, mode);
            for i in 1..n {
                let coeff = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += coeff * thermal_psd(a + i as f64 * h, mode);
            }
            acc * h / 3.0
        };
        simpson(0.0, f_res - w, 20_000)
            + simpson(f_res - w, f_res + w, 40_000)
            + simpson(f_res + w, 100.0 * f_res, 200_000)
    }

    #[test]
    fn equipartition_integral_at_test_q() {
        let mode = MechanicalMode::new(133.88e3, 100.0, 80e-12, 300.0).unwrap();
        let integral = integrate_thermal_psd(&mode);
        let expected = mode.equipartition_variance();
        assert!(
            ((integral - expected) / expected).abs() < 5e-3,
            "integral {integral} vs equipartition {expected}"
        );
    }

    #[test]
    fn equipartition_integral_at_paper_q() {
        let mode = reference_mode();
        let integral = integrate_thermal_psd(&mode);
        let expected = mode.equipartition_variance();
        assert_relative_eq!(expected, 7.316_837_44e-23, max_relative = 1e-8);
        assert!(
            ((integral - expected) / expected).abs() < 5e-3,
            "integral {integral} vs equipartition {expected}"
        );
    }

    #[test]
    fn sql_peak_and_rolloff() {
        let mode = reference_mode();
        assert_relative_eq!(sql_peak_asd(&mode), 1.495_161_611e-15, max_relative = 1e-9);
        // Free-mass rolloff 2 hbar / (m Omega^2) far above resonance.
        let f = 50e6;
        let om = 2.0 * PI * f;
        let expected = 2.0 * HBAR / (mode.effective_mass * om * om);
        assert_relative_eq!(sql_psd(f, &mode), expected, max_relative = 1e-4);
    }

    #[test]
    fn sql_consistent_with_susceptibility_on_grid() {
        let mode = reference_mode();
        for i in 0..1000 {
            let f = 1e3 + i as f64 * 400.0;
            let s = sql_psd(f, &mode);
            let chi2 = mech_susceptibility(f, &mode).norm_sqr();
            let lhs = (s / (2.0 * HBAR)).powi(2);
            assert!(
                ((lhs - chi2) / chi2).abs() < 1e-12,
                "mismatch at {f} Hz: {lhs} vs {chi2}"
            );
        }
    }

    #[test]
    fn sql_maximum_sits_at_shifted_resonance() {
        // |chi| peaks at f_res sqrt(1 - 1/(2 Q^2)); visible at low Q.
        let mode = MechanicalMode::new(10e3, 10.0, 80e-12, 300.0).unwrap();
        let expected = mode.resonance_frequency * (1.0f64 - 1.0 / (2.0 * 100.0)).sqrt();
        let mut best = (0.0, 0.0);
        let df = 0.01;
        let mut f = 9.5e3;
        while f < 10.5e3 {
            let s = sql_psd(f, &mode);
            if s > best.1 {
                best = (f, s);
            }
            f += df;
        }
        assert!(
            (best.0 - expected).abs() <= 2.0 * df,
            "argmax {} vs expected {expected}",
            best.0
        );
    }

    #[test]
    fn mode_invariants_enforced() {
        assert!(MechanicalMode::new(0.0, 6e5, 80e-12, 300.0).is_err());
        assert!(MechanicalMode::new(133.88e3, 1.0, 80e-12, 300.0).is_err());
        assert!(MechanicalMode::new(133.88e3, 6e5, 0.0, 300.0).is_err());
        assert!(MechanicalMode::new(133.88e3, 6e5, 80e-12, -1.0).is_err());
        assert!(MechanicalMode::new(133.88e3, f64::NAN, 80e-12, 300.0).is_err());
    }
}
