//! CSV emitters. Comma-delimited, decimal point, LF line endings, UTF-8,
//! one header row with units. Numbers are written in lowercase scientific
//! notation with fixed precision so identical runs produce identical bytes.

use std::fs;
use std::path::Path;

use opto_tomo_core::{SpectralDensity, WignerMap, ZeroSpanTrace};

use crate::error::{CliError, CliResult};

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Generic PSD schema: frequency_hz, psd_value, unit, rbw_hz, averages.
/// Analytic curves carry rbw 0 and averages 0.
pub fn psd_csv(psd: &SpectralDensity) -> String {
    let mut out = String::from("frequency_hz,psd_value,unit,rbw_hz,averages\n");
    let unit = psd.unit.label();
    for (f, v) in psd.frequencies.iter().zip(&psd.values) {
        out.push_str(&format!(
            "{},{},{unit},{},{}\n",
            fmt(*f),
            fmt(*v),
            fmt(psd.rbw),
            psd.averages
        ));
    }
    out
}

/// Analytic curve in the PSD schema (rbw 0, averages 0).
pub fn analytic_psd_csv(frequencies: &[f64], values: &[f64], unit: &str) -> String {
    let mut out = String::from("frequency_hz,psd_value,unit,rbw_hz,averages\n");
    for (f, v) in frequencies.iter().zip(values) {
        out.push_str(&format!("{},{},{unit},0,0\n", fmt(*f), fmt(*v)));
    }
    out
}

/// Zero-span scan: time, readout angle, measured band power, fitted model
/// and the independently measured shot reference.
pub fn theta_scan_csv(
    trace: &ZeroSpanTrace,
    thetas: &[f64],
    model: &[f64],
    shot_reference: &[f64],
) -> String {
    let mut out =
        String::from("time_s,theta_rad,band_power,model_power,shot_reference\n");
    for i in 0..trace.times.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(trace.times[i]),
            fmt(thetas[i]),
            fmt(trace.powers[i]),
            fmt(model[i]),
            fmt(shot_reference[i]),
        ));
    }
    out
}

/// Covariance fit plus the per-angle variance scan behind it.
pub fn covariance_csv(cov: [[f64; 2]; 2], scan: &[(f64, f64)]) -> String {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let mut out = String::from("record,theta_rad,value,unit\n");
    out.push_str(&format!("v11,,{},snu^2\n", fmt(cov[0][0])));
    out.push_str(&format!("v22,,{},snu^2\n", fmt(cov[1][1])));
    out.push_str(&format!("v12,,{},snu^2\n", fmt(cov[0][1])));
    out.push_str(&format!("det,,{},snu^4\n", fmt(det)));
    for (theta, var) in scan {
        out.push_str(&format!("variance,{},{},snu^2\n", fmt(*theta), fmt(*var)));
    }
    out
}

/// Wigner map as (x1, x2, w) triples in row-major order.
pub fn wigner_csv(map: &WignerMap) -> String {
    let axis = map.grid.axis();
    let mut out = String::from("x1_snu,x2_snu,wigner_value\n");
    for (i2, x2) in axis.iter().enumerate() {
        for (i1, x1) in axis.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt(*x1),
                fmt(*x2),
                fmt(map.value(i1, i2))
            ));
        }
    }
    out
}
