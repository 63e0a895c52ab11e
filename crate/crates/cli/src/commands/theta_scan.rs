//! Zero-span noise power at the mechanical resonance while the readout
//! angle ramps through two pi, with an independently measured shot trace
//! and the fitted P_shot + P_mem cos^2(theta) model.

use std::f64::consts::PI;

use opto_tomo_core::*;

use super::{detector_run, Context};
use crate::csv_out;
use crate::error::CliResult;
use crate::report::{Provenance, RunReport};
use crate::svg;

pub fn run(ctx: &Context) -> CliResult<RunReport> {
    let cfg = ctx.cfg;
    let ts_params = &cfg.theta_scan;
    let sim = &cfg.simulation;
    let mut report = RunReport::new("theta-scan");

    let interferometer = cfg.interferometer_at_power(ts_params.input_power)?;
    let duration = ts_params.segments as f64 * ts_params.segment_duration;
    let n = (duration * sim.rate).round() as usize;

    // Half-segment offset aligns segment centers with the quadrature
    // angles, so one segment sits exactly on the pi/2 null.
    let dtheta_seg = 2.0 * PI / ts_params.segments as f64;
    let theta_span = (-dtheta_seg / 2.0, 2.0 * PI - dtheta_seg / 2.0);

    let motion = synthesize_membrane_motion(&cfg.mode, duration, sim.rate, sim.seed)?;
    let hcfg = cfg.homodyne(cfg.homodyne_angle)?;
    let y = synthesize_detector_output_ramped(
        &motion,
        &interferometer,
        &cfg.efficiency,
        &hcfg,
        theta_span,
        sim.seed.wrapping_add(1),
    )?;
    let trace = zero_span_power(
        &y,
        cfg.mode.resonance_frequency,
        ts_params.rbw,
        ts_params.segment_duration,
    )?;

    // Independent shot trace: membrane blocked, same detection chain.
    let silent_cfg_duration = duration;
    let mut silent_cfg = cfg.clone();
    silent_cfg.simulation.duration = silent_cfg_duration;
    let y_shot = detector_run(
        &silent_cfg,
        &interferometer,
        None,
        None,
        cfg.homodyne_angle,
        sim.seed.wrapping_add(2),
    )?;
    let shot_trace = zero_span_power(
        &y_shot,
        cfg.mode.resonance_frequency,
        ts_params.rbw,
        ts_params.segment_duration,
    )?;

    let thetas: Vec<f64> = trace
        .times
        .iter()
        .map(|t| theta_span.0 + (theta_span.1 - theta_span.0) * (t * sim.rate) / (n - 1) as f64)
        .collect();
    let (p_shot_fit, p_mem_fit, rms) = fit_theta_scan(&thetas, &trace.powers);
    let model: Vec<f64> = thetas
        .iter()
        .map(|&t| theta_scan_power(t, p_shot_fit, p_mem_fit))
        .collect();

    ctx.write_csv(
        "theta_scan.csv",
        &csv_out::theta_scan_csv(&trace, &thetas, &model, &shot_trace.powers),
    )?;

    let shot_mean = shot_trace.powers.iter().sum::<f64>() / shot_trace.powers.len() as f64;
    let shot_sigma = (shot_trace
        .powers
        .iter()
        .map(|p| (p - shot_mean) * (p - shot_mean))
        .sum::<f64>()
        / (shot_trace.powers.len() - 1) as f64)
        .sqrt();
    let min_power = trace.powers.iter().cloned().fold(f64::MAX, f64::min);

    report.value("fitted shot power", p_shot_fit, "snu^2", Provenance::Simulated);
    report.value("fitted membrane power", p_mem_fit, "snu^2", Provenance::Simulated);
    report.gate(
        "model fit rms residual / P_mem",
        rms / p_mem_fit,
        "",
        Provenance::Simulated,
        "< 0.05",
        rms / p_mem_fit < 0.05,
    );
    report.gate(
        "trace minimum vs shot trace",
        min_power,
        "snu^2",
        Provenance::Simulated,
        format!("within 3 sigma of {shot_mean:.4e}"),
        (min_power - shot_mean).abs() < 3.0 * shot_sigma,
    );

    let series = vec![
        svg::Series {
            label: "band power".into(),
            points: thetas.iter().cloned().zip(trace.powers.iter().cloned()).collect(),
        },
        svg::Series {
            label: "model".into(),
            points: thetas.iter().cloned().zip(model.iter().cloned()).collect(),
        },
        svg::Series {
            label: "shot".into(),
            points: thetas.iter().cloned().zip(shot_trace.powers.iter().cloned()).collect(),
        },
    ];
    ctx.write_svg(
        "theta_scan.svg",
        &svg::line_plot(
            &svg::Axes {
                title: format!(
                    "Zero-span power at {:.2} kHz (RBW {:.0} kHz)",
                    cfg.mode.resonance_frequency / 1e3,
                    ts_params.rbw / 1e3
                ),
                x_label: "readout angle (rad)".into(),
                y_label: "band power (snu^2)".into(),
                log_x: false,
                log_y: true,
            },
            &series,
        ),
    )?;
    Ok(report)
}
