//! Fixed physical constants (CODATA 2018 / SI 2019 exact values).
//!
//! These are deliberately not configurable: every spectral density in the
//! crate is tied to the same hbar and k_B.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact since the 2019 SI redefinition).
pub const K_BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s (exact).
pub const C_LIGHT: f64 = 299_792_458.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_strictly_positive() {
        assert!(HBAR > 0.0);
        assert!(K_BOLTZMANN > 0.0);
        assert!(C_LIGHT > 0.0);
    }

    #[test]
    fn photon_energy_at_1064nm() {
        // hbar * 2*pi*c/lambda must reproduce h*c/lambda.
        let lambda = 1.064e-6;
        let e = HBAR * 2.0 * std::f64::consts::PI * C_LIGHT / lambda;
        assert!((e - 1.86697e-19).abs() / 1.86697e-19 < 1e-4);
    }
}
