//! Balanced homodyne readout at an arbitrary quadrature angle.
//!
//! The difference photocurrent of the two detector diodes is proportional
//! to the local-oscillator amplitude times the signal quadrature at the
//! readout phase theta:
//!
//! i_-(theta) ~ alpha_LO (cos(theta) X_1 + sin(theta) X_2).
//!
//! This linear form only holds while the LO strongly dominates the signal
//! beam; the crate enforces an LO power of at least 20x the residual
//! carrier power at the dark port. Quadratures are kept in shot-noise
//! units throughout (vacuum variance 1/2, symmetric convention), so the
//! alpha_LO scale factor never appears in stored samples. Noise powers in
//! dB relative to vacuum are 10 log10(V / 0.5).

use crate::error::{ensure_finite, Error, Result};

/// Required ratio of LO power to signal power for the linearized
/// difference-current model.
pub const LO_DOMINANCE_RATIO: f64 = 20.0;

/// Readout configuration of the balanced homodyne detector.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneConfig {
    /// Readout quadrature angle theta in rad.
    pub angle: f64,
    /// Local-oscillator amplitude, sqrt(W); lo_amplitude^2 is the LO power.
    pub lo_amplitude: f64,
    /// Phase-modulation frequency used to derive the lock error signal, Hz.
    pub pm_frequency: f64,
    /// Lock setpoint theta_set in rad.
    pub lock_target: f64,
    /// Residual carrier power of the signal beam at the dark port, W.
    pub signal_power: f64,
}

impl HomodyneConfig {
    pub fn new(
        angle: f64,
        lo_amplitude: f64,
        pm_frequency: f64,
        lock_target: f64,
        signal_power: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("angle", angle),
            ("lo_amplitude", lo_amplitude),
            ("pm_frequency", pm_frequency),
            ("lock_target", lock_target),
            ("signal_power", signal_power),
        ] {
            ensure_finite(name, v)?;
        }
        if lo_amplitude <= 0.0 {
            return Err(Error::domain("LO amplitude must be positive"));
        }
        if pm_frequency <= 0.0 {
            return Err(Error::domain("PM frequency must be positive"));
        }
        if signal_power < 0.0 {
            return Err(Error::domain("signal power must be >= 0"));
        }
        let cfg = Self {
            angle,
            lo_amplitude,
            pm_frequency,
            lock_target,
            signal_power,
        };
        cfg.check_lo_dominance()?;
        Ok(cfg)
    }

    /// Reference readout: amplitude quadrature, 12 mW LO, 10 MHz phase
    /// modulation, 0.2 mW residual carrier.
    pub fn reference() -> Self {
        Self::new(0.0, 12e-3f64.sqrt(), 10e6, 0.0, 0.2e-3).expect("reference homodyne is valid")
    }

    /// Same reference readout at a different quadrature angle.
    pub fn reference_at_angle(angle: f64) -> Self {
        Self::new(angle, 12e-3f64.sqrt(), 10e6, 0.0, 0.2e-3).expect("valid angle")
    }

    /// LO power alpha_LO^2 in W.
    pub fn lo_power(&self) -> f64 {
        self.lo_amplitude * self.lo_amplitude
    }

    /// Validity condition of the linearized difference current.
    pub fn check_lo_dominance(&self) -> Result<()> {
        if self.lo_power() < LO_DOMINANCE_RATIO * self.signal_power {
            return Err(Error::LoDominance {
                lo_power_w: self.lo_power(),
                signal_power_w: self.signal_power,
                required_ratio: LO_DOMINANCE_RATIO,
            });
        }
        Ok(())
    }
}

/// A record of quadrature samples in shot-noise units (vacuum variance 1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSamples {
    /// Quadrature angle the samples were taken at, rad.
    pub angle: f64,
    /// Sample values in shot-noise units.
    pub values: Vec<f64>,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Seed of the generator that produced the samples (0 for measured data).
    pub seed: u64,
}

impl QuadratureSamples {
    pub fn new(angle: f64, values: Vec<f64>, sample_rate: f64, seed: u64) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("quadrature samples must be finite".into()));
        }
        if sample_rate <= 0.0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        Ok(Self {
            angle,
            values,
            sample_rate,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample variance about the sample mean.
    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    }
}

/// Balanced-homodyne difference current for given amplitude- and
/// phase-quadrature sample streams, with the alpha_LO scale factored out:
/// out_i = cos(theta) x1_i + sin(theta) x2_i.
pub fn quadrature_readout(
    x1: &QuadratureSamples,
    x2: &QuadratureSamples,
    cfg: &HomodyneConfig,
) -> Result<QuadratureSamples> {
    cfg.check_lo_dominance()?;
    if x1.len() != x2.len() {
        return Err(Error::precondition(format!(
            "quadrature streams differ in length: {} vs {}",
            x1.len(),
            x2.len()
        )));
    }
    if x1.sample_rate != x2.sample_rate {
        return Err(Error::precondition(format!(
            "quadrature streams differ in sample rate: {} vs {}",
            x1.sample_rate, x2.sample_rate
        )));
    }
    let (c, s) = (cfg.angle.cos(), cfg.angle.sin());
    let values = x1
        .values
        .iter()
        .zip(&x2.values)
        .map(|(a, b)| c * a + s * b)
        .collect();
    QuadratureSamples::new(cfg.angle, values, x1.sample_rate, x1.seed)
}

/// Zero-span noise power versus readout angle: P(theta) = P_shot +
/// P_mem cos^2(theta). The membrane signal lives entirely in the amplitude
/// quadrature of the dark-port field.
pub fn theta_scan_power(theta: f64, shot_power: f64, membrane_power: f64) -> f64 {
    debug_assert!(shot_power >= 0.0 && membrane_power >= 0.0);
    let c = theta.cos();
    shot_power + membrane_power * c * c
}

/// Idealized demodulated error signal for locking the readout phase:
/// eps(theta) = K sin(theta - theta_set), with a positive-slope zero
/// crossing at the lock target. The demodulation gain K is set by the
/// phase-modulation depth and electronics; only its sign matters here.
pub fn pm_lock_error_signal(theta: f64, cfg: &HomodyneConfig) -> f64 {
    const LOCK_GAIN: f64 = 1.0;
    LOCK_GAIN * (theta - cfg.lock_target).sin()
}

/// Least-squares fit of the scan model P(theta) = P_shot + P_mem cos^2
/// to measured band powers. Returns (P_shot, P_mem, rms residual).
pub fn fit_theta_scan(thetas: &[f64], powers: &[f64]) -> (f64, f64, f64) {
    assert_eq!(thetas.len(), powers.len());
    let n = thetas.len() as f64;
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &p) in thetas.iter().zip(powers) {
        let c = t.cos();
        let x = c * c;
        sx += x;
        sxx += x * x;
        sy += p;
        sxy += x * p;
    }
    let denom = n * sxx - sx * sx;
    let membrane = (n * sxy - sx * sy) / denom;
    let shot = (sy - membrane * sx) / n;
    let mut ss = 0.0;
    for (&t, &p) in thetas.iter().zip(powers) {
        let c = t.cos();
        let r = p - (shot + membrane * c * c);
        ss += r * r;
    }
    (shot, membrane, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn gaussian_samples(n: usize, std: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, std).unwrap();
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    #[test]
    fn angle_zero_returns_first_quadrature() {
        let x1 = QuadratureSamples::new(0.0, gaussian_samples(1000, 0.7, 1), 1e6, 1).unwrap();
        let x2 = QuadratureSamples::new(PI / 2.0, gaussian_samples(1000, 0.7, 2), 1e6, 2).unwrap();
        let cfg = HomodyneConfig::reference_at_angle(0.0);
        let out = quadrature_readout(&x1, &x2, &cfg).unwrap();
        assert_eq!(out.values, x1.values);
    }

    #[test]
    fn angle_pi_half_returns_second_quadrature() {
        let x1 = QuadratureSamples::new(0.0, gaussian_samples(1000, 0.7, 3), 1e6, 3).unwrap();
        let x2 = QuadratureSamples::new(PI / 2.0, gaussian_samples(1000, 0.7, 4), 1e6, 4).unwrap();
        let cfg = HomodyneConfig::reference_at_angle(PI / 2.0);
        let out = quadrature_readout(&x1, &x2, &cfg).unwrap();
        for (o, b) in out.values.iter().zip(&x2.values) {
            assert!((o - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_angle_variance_matches_sample_statistics() {
        // Sample-statistics oracle on 1e6 synthetic Gaussian draws:
        // var((X1+X2)/sqrt(2)) = (V11 + V22)/2 + V12 for zero-mean inputs.
        let n = 1_000_000;
        let (v11, v22): (f64, f64) = (1.3, 0.6);
        let x1 = QuadratureSamples::new(0.0, gaussian_samples(n, v11.sqrt(), 5), 1e6, 5).unwrap();
        let x2 =
            QuadratureSamples::new(PI / 2.0, gaussian_samples(n, v22.sqrt(), 6), 1e6, 6).unwrap();
        let cfg = HomodyneConfig::reference_at_angle(PI / 4.0);
        let out = quadrature_readout(&x1, &x2, &cfg).unwrap();
        let expected = (v11 + v22) / 2.0; // V12 = 0 for independent streams
        let se = expected * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(
            (out.variance() - expected).abs() < 3.0 * se,
            "variance {} vs expected {expected} (3se = {})",
            out.variance(),
            3.0 * se
        );
    }

    #[test]
    fn lo_dominance_violation_is_an_error() {
        // 12 mW LO against a 1 mW signal beam violates the 20x condition.
        let err = HomodyneConfig::new(0.0, 12e-3f64.sqrt(), 10e6, 0.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::LoDominance { .. }), "got {err:?}");

        let mut cfg = HomodyneConfig::reference();
        cfg.signal_power = 1e-3;
        let x = QuadratureSamples::new(0.0, vec![0.0; 8], 1e6, 0).unwrap();
        assert!(quadrature_readout(&x, &x, &cfg).is_err());
    }

    #[test]
    fn mismatched_streams_are_rejected() {
        let cfg = HomodyneConfig::reference();
        let a = QuadratureSamples::new(0.0, vec![0.0; 8], 1e6, 0).unwrap();
        let b = QuadratureSamples::new(0.0, vec![0.0; 9], 1e6, 0).unwrap();
        assert!(quadrature_readout(&a, &b, &cfg).is_err());
        let c = QuadratureSamples::new(0.0, vec![0.0; 8], 2e6, 0).unwrap();
        assert!(quadrature_readout(&a, &c, &cfg).is_err());
    }

    #[test]
    fn scan_power_at_quadrature_angles() {
        let (shot, mem) = (1.0, 230.0);
        assert_relative_eq!(
            theta_scan_power(PI / 2.0, shot, mem),
            shot,
            max_relative = 1e-12
        );
        assert_relative_eq!(theta_scan_power(0.0, shot, mem), shot + mem);
        // Minimum over a dense grid sits at theta = pi/2 mod pi.
        let mut min = (0.0, f64::INFINITY);
        for i in 0..10_000 {
            let th = i as f64 / 10_000.0 * 2.0 * PI;
            let p = theta_scan_power(th, shot, mem);
            if p < min.1 {
                min = (th, p);
            }
        }
        assert!((min.1 - shot).abs() / shot < 1e-6);
        let dist = ((min.0 % PI) - PI / 2.0).abs();
        assert!(dist < 1e-3, "argmin {} not at pi/2 mod pi", min.0);
    }

    #[test]
    fn theta_scan_fit_recovers_noiseless_model() {
        let thetas: Vec<f64> = (0..50).map(|i| i as f64 * 0.13).collect();
        let powers: Vec<f64> = thetas.iter().map(|&t| theta_scan_power(t, 1.2, 240.0)).collect();
        let (shot, mem, rms) = fit_theta_scan(&thetas, &powers);
        assert_relative_eq!(shot, 1.2, max_relative = 1e-9);
        assert_relative_eq!(mem, 240.0, max_relative = 1e-9);
        assert!(rms < 1e-9);
    }

    #[test]
    fn lock_error_signal_shape() {
        let mut cfg = HomodyneConfig::reference();
        cfg.lock_target = 0.3;
        assert_eq!(pm_lock_error_signal(cfg.lock_target, &cfg), 0.0);
        // Linear with positive slope near the setpoint.
        let delta = 1e-6;
        let eps = pm_lock_error_signal(cfg.lock_target + delta, &cfg);
        assert_relative_eq!(eps, delta, max_relative = 1e-6);
        // Zero at theta_set + pi, but with negative slope: unstable point.
        let at_pi = pm_lock_error_signal(cfg.lock_target + PI, &cfg);
        assert!(at_pi.abs() < 1e-12);
        let slope = (pm_lock_error_signal(cfg.lock_target + PI + delta, &cfg) - at_pi) / delta;
        assert!(slope < -0.99);
    }

    proptest! {
        #[test]
        fn scan_power_is_pi_periodic(theta in -10.0f64..10.0, shot in 0.0f64..10.0, mem in 0.0f64..1e3) {
            let a = theta_scan_power(theta, shot, mem);
            let b = theta_scan_power(theta + PI, shot, mem);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
