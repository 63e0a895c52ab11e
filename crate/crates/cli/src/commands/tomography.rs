//! Quadrature tomography of the dark-port field: variance scan with
//! covariance reconstruction, plus a filtered back-projection Wigner map.

use std::f64::consts::PI;

use opto_tomo_core::*;

use super::Context;
use crate::csv_out;
use crate::error::{CliError, CliResult};
use crate::report::{Provenance, RunReport};
use crate::svg;

pub fn run(ctx: &Context) -> CliResult<RunReport> {
    let cfg = ctx.cfg;
    let t = &cfg.tomography;
    let mut report = RunReport::new("tomography");

    // Ground truth: membrane excitation lives in the amplitude quadrature.
    let truth = GaussianState::amplitude_excited(t.excess_variance)?;
    let seed = cfg.simulation.seed;

    // Variance scan and histograms per angle.
    let mut scan = Vec::with_capacity(t.angles);
    let mut histograms = Vec::with_capacity(t.angles);
    let bin_width = 2.0 * t.hist_half_range / t.hist_bins as f64;
    for k in 0..t.angles {
        let angle = k as f64 * PI / t.angles as f64;
        let samples = truth.sample_quadrature(angle, t.samples_per_angle, seed + k as u64);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (samples.len() - 1) as f64;
        scan.push((angle, var));
        histograms.push(QuadratureHistogram::from_samples(
            angle,
            &samples,
            -t.hist_half_range,
            bin_width,
            t.hist_bins,
        )?);
    }

    let cov = reconstruct_covariance(&scan)?;
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    ctx.write_csv("covariance.csv", &csv_out::covariance_csv(cov, &scan))?;

    let grid = PhaseSpaceGrid::new(t.grid_half_extent, t.grid_points)
        .map_err(CliError::from)?;
    let map = wigner_backprojection(&histograms, &grid)?;
    ctx.write_csv("wigner.csv", &csv_out::wigner_csv(&map))?;

    // Physicality and normalization verdicts. The determinant check allows
    // 2% of statistical slack below the exact uncertainty bound; the
    // sampled-variance standard error at the default sample count sits
    // well inside it.
    let se_rel = (2.0 / (t.samples_per_angle as f64 - 1.0)).sqrt();
    report.gate(
        "covariance determinant",
        det,
        "snu^4",
        Provenance::Simulated,
        ">= 1/4 (2% statistical slack)",
        det >= 0.25 * 0.98,
    );
    report.check(
        "V22 (phase quadrature)",
        cov[1][1],
        "snu^2",
        Provenance::Simulated,
        0.5,
        3.0 * se_rel,
    );
    report.check(
        "V11 (amplitude quadrature)",
        cov[0][0],
        "snu^2",
        Provenance::Simulated,
        0.5 + t.excess_variance,
        3.0 * se_rel + 0.01,
    );
    if t.excess_variance > 0.0 {
        report.gate(
            "membrane excitation in V11 only",
            cov[0][0] - cov[1][1],
            "snu^2",
            Provenance::Simulated,
            "V11 > V22",
            cov[0][0] > cov[1][1],
        );
    }
    report.check(
        "Wigner normalization",
        map.integral(),
        "",
        Provenance::Simulated,
        1.0,
        0.02,
    );
    let moments = map.central_moments();
    report.value("Wigner var(x1)", moments[0], "snu^2", Provenance::Simulated);
    report.value("Wigner var(x2)", moments[1], "snu^2", Provenance::Simulated);

    // Promote to a state only when physical; attach the raw fit otherwise.
    match GaussianState::new([0.0, 0.0], cov) {
        Ok(_) => {}
        Err(Error::Unphysical { .. }) if det >= 0.25 * 0.98 => {
            // Within statistical slack of the bound; reported above.
        }
        Err(e) => return Err(e.into()),
    }

    let fit_curve: Vec<(f64, f64)> = (0..200)
        .map(|i| {
            let theta = i as f64 * PI / 199.0;
            let (c, s) = (theta.cos(), theta.sin());
            (
                theta,
                cov[0][0] * c * c + cov[1][1] * s * s + 2.0 * cov[0][1] * s * c,
            )
        })
        .collect();
    ctx.write_svg(
        "variance_scan.svg",
        &svg::line_plot(
            &svg::Axes {
                title: "Quadrature variance vs readout angle".into(),
                x_label: "theta (rad)".into(),
                y_label: "variance (snu^2)".into(),
                log_x: false,
                log_y: false,
            },
            &[
                svg::Series {
                    label: "measured".into(),
                    points: scan.clone(),
                },
                svg::Series {
                    label: "fit".into(),
                    points: fit_curve,
                },
            ],
        ),
    )?;
    ctx.write_svg(
        "wigner.svg",
        &svg::heatmap(
            "Reconstructed Wigner map",
            "x1, x2 (snu)",
            &map.values,
            t.grid_points,
            t.grid_half_extent,
        ),
    )?;
    Ok(report)
}
