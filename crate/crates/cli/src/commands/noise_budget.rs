//! Calibrated displacement noise budget: model curves (thermal, shot per
//! input power, SQL, total) plus optionally a simulated, marker-calibrated
//! spectrum per power.

use opto_tomo_core::*;

use super::{band_asd, detector_run, Context, FLOOR_BAND};
use crate::csv_out;
use crate::error::CliResult;
use crate::report::{Provenance, RunReport};
use crate::svg;

/// Published reference values of the instrument this scenario models.
const REFERENCE_FLOOR_ASD: f64 = 1.9e-16;
const REFERENCE_SQL_MARGIN: f64 = 8.2;
const REFERENCE_POWER: f64 = 0.2;

fn power_tag(p: f64) -> String {
    format!("{}mW", (p * 1e3 * 1000.0).round() / 1000.0)
}

pub fn run(ctx: &Context) -> CliResult<RunReport> {
    let cfg = ctx.cfg;
    let nb = &cfg.noise_budget;
    let mut report = RunReport::new("noise-budget");

    report.value(
        "membrane slab reflectivity",
        membrane_reflectivity(
            cfg.membrane.refractive_index,
            cfg.membrane.thickness,
            cfg.interferometer.wavelength,
        )?,
        "",
        Provenance::Model,
    );
    report.value(
        "membrane effective mass",
        effective_mass(&cfg.membrane),
        "kg",
        Provenance::Model,
    );
    report.value("mode effective mass in use", cfg.mode.effective_mass, "kg", Provenance::Config);
    report.value("reference floor ASD", REFERENCE_FLOOR_ASD, "m/rtHz", Provenance::Reference);
    report.value("reference SQL margin", REFERENCE_SQL_MARGIN, "", Provenance::Reference);

    let grid: Vec<f64> = (0..nb.points)
        .map(|i| nb.f_min + (nb.f_max - nb.f_min) * i as f64 / (nb.points - 1) as f64)
        .collect();

    // Model curves.
    let thermal: Vec<f64> = grid.iter().map(|&f| thermal_psd(f, &cfg.mode)).collect();
    let sql: Vec<f64> = grid.iter().map(|&f| sql_psd(f, &cfg.mode)).collect();
    ctx.write_csv("thermal.csv", &csv_out::analytic_psd_csv(&grid, &thermal, "m^2/Hz"))?;
    ctx.write_csv("sql.csv", &csv_out::analytic_psd_csv(&grid, &sql, "m^2/Hz"))?;

    let mut plot_series = vec![
        svg::Series {
            label: "thermal".into(),
            points: grid.iter().cloned().zip(thermal.iter().map(|v| v.sqrt())).collect(),
        },
        svg::Series {
            label: "SQL".into(),
            points: grid.iter().cloned().zip(sql.iter().map(|v| v.sqrt())).collect(),
        },
    ];

    let mut shot_asds = Vec::new();
    for &p in &nb.powers {
        let interferometer = cfg.interferometer_at_power(p)?;
        let tag = power_tag(p);
        let shot: Vec<f64> = grid
            .iter()
            .map(|&f| shot_imprecision_psd(f, &interferometer, &cfg.efficiency))
            .collect();
        let total: Vec<f64> = grid
            .iter()
            .map(|&f| {
                total_readout_psd(f, &cfg.mode, &interferometer, &cfg.efficiency, cfg.dark_psd)
            })
            .collect();
        ctx.write_csv(
            &format!("shot_{tag}.csv"),
            &csv_out::analytic_psd_csv(&grid, &shot, "m^2/Hz"),
        )?;
        ctx.write_csv(
            &format!("total_{tag}.csv"),
            &csv_out::analytic_psd_csv(&grid, &total, "m^2/Hz"),
        )?;
        plot_series.push(svg::Series {
            label: format!("total {tag}"),
            points: grid.iter().cloned().zip(total.iter().map(|v| v.sqrt())).collect(),
        });

        let asd = shot[0].sqrt();
        shot_asds.push(asd);
        if (p - REFERENCE_POWER).abs() < 1e-9 {
            report.check(
                format!("shot ASD at {tag}"),
                asd,
                "m/rtHz",
                Provenance::Model,
                REFERENCE_FLOOR_ASD,
                0.10,
            );
            report.check(
                "SQL peak / shot ASD",
                sql_peak_asd(&cfg.mode) / asd,
                "",
                Provenance::Model,
                REFERENCE_SQL_MARGIN,
                0.15,
            );
        } else {
            report.value(format!("shot ASD at {tag}"), asd, "m/rtHz", Provenance::Model);
        }
    }

    report.value(
        "thermal peak PSD",
        thermal_psd(cfg.mode.resonance_frequency, &cfg.mode),
        "m^2/Hz",
        Provenance::Model,
    );
    report.value("SQL peak ASD", sql_peak_asd(&cfg.mode), "m/rtHz", Provenance::Model);

    // Analytic pairwise floor ratios are exact square roots of the power
    // ratios.
    for w in nb.powers.windows(2) {
        let expected = (w[1] / w[0]).sqrt();
        let i = nb.powers.iter().position(|p| *p == w[0]).unwrap();
        let j = nb.powers.iter().position(|p| *p == w[1]).unwrap();
        report.check(
            format!("ASD ratio {} / {}", power_tag(w[0]), power_tag(w[1])),
            shot_asds[i] / shot_asds[j],
            "",
            Provenance::Model,
            expected,
            1e-12,
        );
    }

    // Simulated, marker-calibrated spectra.
    if nb.simulate {
        let marker = cfg.marker()?;
        let sim = &cfg.simulation;
        let motion =
            synthesize_membrane_motion(&cfg.mode, sim.duration, sim.rate, sim.seed)?;
        let mut floors = Vec::new();
        for (k, &p) in nb.powers.iter().enumerate() {
            let interferometer = cfg.interferometer_at_power(p)?;
            let tag = power_tag(p);
            let y = detector_run(
                cfg,
                &interferometer,
                Some(&motion),
                Some(&marker),
                cfg.homodyne_angle,
                sim.seed.wrapping_add(1000 + k as u64),
            )?;
            let psd = welch_psd(&y, sim.rbw, Window::Hann, 0.5)?;
            let cal = calibrate_displacement(&psd, &marker)?;
            ctx.write_csv(&format!("measured_{tag}.csv"), &csv_out::psd_csv(&cal.spectrum))?;
            let floor = band_asd(&cal.spectrum, FLOOR_BAND);
            floors.push(floor);
            report.value(
                format!("simulated floor ASD at {tag}"),
                floor,
                "m/rtHz",
                Provenance::Simulated,
            );
            plot_series.push(svg::Series {
                label: format!("measured {tag}"),
                points: cal
                    .spectrum
                    .frequencies
                    .iter()
                    .cloned()
                    .zip(cal.spectrum.values.iter().map(|v| v.sqrt()))
                    .filter(|(f, _)| *f >= nb.f_min && *f <= nb.f_max)
                    .collect(),
            });
        }
        for w in nb.powers.windows(2) {
            let i = nb.powers.iter().position(|p| *p == w[0]).unwrap();
            let j = nb.powers.iter().position(|p| *p == w[1]).unwrap();
            report.check(
                format!(
                    "simulated floor ratio {} / {}",
                    power_tag(w[0]),
                    power_tag(w[1])
                ),
                floors[i] / floors[j],
                "",
                Provenance::Simulated,
                (w[1] / w[0]).sqrt(),
                0.05,
            );
        }
    }

    ctx.write_svg(
        "noise_budget.svg",
        &svg::line_plot(
            &svg::Axes {
                title: "Displacement noise budget".into(),
                x_label: "frequency (Hz)".into(),
                y_label: "ASD (m/rtHz)".into(),
                log_x: false,
                log_y: true,
            },
            &plot_series,
        ),
    )?;
    Ok(report)
}
