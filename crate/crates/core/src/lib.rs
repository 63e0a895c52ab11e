//! Simulation and analysis of a membrane interferometer with balanced
//! homodyne readout: closed-form noise budgets, seeded stochastic
//! synthesis, spectral estimation, and quadrature tomography of the
//! output light.
//!
//! The crate is organized around five concerns:
//!
//! * [`membrane`] - dielectric-slab optics and the modal mass of the
//!   square membrane oscillator;
//! * [`mechanics`] - damped-oscillator susceptibility, thermal noise and
//!   the standard quantum limit;
//! * [`interferometer`] - dark-port signal transfer, shot-noise
//!   imprecision and the efficiency budget;
//! * [`homodyne`] / [`tomography`] - quadrature readout at arbitrary
//!   angle, variance scans, covariance reconstruction and Wigner-map
//!   back-projection;
//! * [`timeseries`] / [`spectra`] - exact-discretization synthesis of the
//!   thermally driven mode, detector-output simulation, Welch spectra,
//!   zero-span traces, marker calibration and transfer-function
//!   normalization.
//!
//! All operations are pure and deterministic: a fixed seed reproduces
//! every sample and every spectrum bit for bit, independent of thread
//! count.

pub mod constants;
pub mod error;
pub mod homodyne;
pub mod interferometer;
pub mod membrane;
pub mod mechanics;
pub mod spectra;
pub mod timeseries;
pub mod tomography;

pub use error::{Error, Result};
pub use homodyne::{
    fit_theta_scan, pm_lock_error_signal, quadrature_readout, theta_scan_power, HomodyneConfig,
    QuadratureSamples,
};
pub use interferometer::{
    displacement_to_output_gain, overall_efficiency, shot_imprecision_psd, total_readout_psd,
    EfficiencyBudget, InterferometerConfig,
};
pub use membrane::{effective_mass, infer_thickness, membrane_reflectivity, MembraneOptics};
pub use mechanics::{mech_susceptibility, sql_peak_asd, sql_psd, thermal_psd, MechanicalMode};
pub use spectra::{
    apply_transfer, calibrate_displacement, calibrate_displacement_with_peak,
    detector_transfer_normalize, welch_psd, zero_span_power, CalibratedSpectrum,
    CalibrationMarker, PsdUnit, SpectralDensity, TransferFunction, Window, ZeroSpanTrace,
};
pub use timeseries::{
    synthesize_detector_output, synthesize_detector_output_ramped, synthesize_membrane_motion,
    synthesize_membrane_motion_from, SampleUnit, TimeSeries,
};
pub use tomography::{
    reconstruct_covariance, variance_vs_theta, wigner_backprojection,
    wigner_backprojection_with_cutoff, GaussianState, PhaseSpaceGrid, QuadratureHistogram,
    WignerMap,
};
