//! Error types shared across the crate.

use thiserror::Error;

/// Raw 2x2 covariance fit attached to physicality errors so callers can
/// inspect what the reconstruction actually produced.
pub type RawCovariance = [[f64; 2]; 2];

#[derive(Debug, Error)]
pub enum Error {
    /// An input was non-finite or outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested target cannot be met by any admissible input
    /// (e.g. a reflectivity above the slab maximum for the given index).
    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),

    /// A documented precondition was violated (undersampling, unachievable
    /// resolution bandwidth, mismatched sample lengths, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Local-oscillator power does not dominate the signal power, so the
    /// linearized homodyne difference current is not a valid model.
    #[error("homodyne validity: LO power {lo_power_w:.3e} W is less than {required_ratio}x signal power {signal_power_w:.3e} W")]
    LoDominance {
        lo_power_w: f64,
        signal_power_w: f64,
        required_ratio: f64,
    },

    /// Quadrature-variance fit could not be solved (too few distinct angles
    /// or a rank-deficient design).
    #[error("reconstruction error: {0}")]
    Reconstruction(String),

    /// The fitted covariance is not a physical quantum state. The raw fit is
    /// attached for diagnostics.
    #[error("unphysical covariance (v11={}, v22={}, v12={}): {reason}", fit[0][0], fit[1][1], fit[0][1])]
    Unphysical { fit: RawCovariance, reason: String },

    /// Tomography input does not cover [0, pi) densely enough.
    #[error("angular coverage error: {0}")]
    Coverage(String),

    /// Histograms or sample sets are empty or mutually inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// Calibration marker could not be located above the noise floor.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Transfer-function normalization would divide by |H|^2 below the
    /// configured floor at the listed frequencies.
    #[error("dynamic-range error: |H|^2 below floor {floor:.1e} in {} bins (first at {:.3e} Hz)", bins.len(), bins.first().copied().unwrap_or(f64::NAN))]
    DynamicRange { floor: f64, bins: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

/// Checks that a named value is finite, returning a domain error otherwise.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}
