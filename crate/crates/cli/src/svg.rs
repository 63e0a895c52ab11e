//! Minimal self-contained SVG plotting: polyline traces with linear or
//! log axes, and a rectangle heatmap. No external assets, no scripts.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#7f7f7f", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

struct Scale {
    min: f64,
    max: f64,
    log: bool,
}

impl Scale {
    fn map(&self, v: f64, lo_px: f64, hi_px: f64) -> f64 {
        let (v, min, max) = if self.log {
            (v.max(1e-300).log10(), self.min.log10(), self.max.log10())
        } else {
            (v, self.min, self.max)
        };
        lo_px + (v - min) / (max - min) * (hi_px - lo_px)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo = self.min.log10().floor() as i32;
            let hi = self.max.log10().ceil() as i32;
            (lo..=hi).map(|d| 10f64.powi(d)).collect()
        } else {
            let span = self.max - self.min;
            let raw_step = span / 6.0;
            let mag = 10f64.powf(raw_step.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| span / s <= 7.0)
                .unwrap_or(mag * 10.0);
            let start = (self.min / step).ceil() as i64;
            let end = (self.max / step).floor() as i64;
            (start..=end).map(|k| k as f64 * step).collect()
        }
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:.0e}")
    }
}

/// Multi-series line plot.
pub fn line_plot(axes: &Axes, series: &[Series]) -> String {
    let finite = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if finite(x, axes.log_x) && finite(y, axes.log_y) {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let (x_min, x_max) = bounds(&xs, axes.log_x);
    let (y_min, y_max) = bounds(&ys, axes.log_y);
    let x_scale = Scale {
        min: x_min,
        max: x_max,
        log: axes.log_x,
    };
    let y_scale = Scale {
        min: y_min,
        max: y_max,
        log: axes.log_y,
    };

    let plot_l = MARGIN_L;
    let plot_r = WIDTH - MARGIN_R;
    let plot_t = MARGIN_T;
    let plot_b = HEIGHT - MARGIN_B;

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>
"#,
        (plot_l + plot_r) / 2.0,
        escape(&axes.title)
    );

    // Grid and ticks.
    for t in x_scale.ticks() {
        let px = x_scale.map(t, plot_l, plot_r);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{plot_t}\" x2=\"{px:.1}\" y2=\"{plot_b}\" stroke=\"#ddd\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            plot_b + 16.0,
            tick_label(t)
        ));
    }
    for t in y_scale.ticks() {
        let py = plot_b - (y_scale.map(t, 0.0, plot_b - plot_t));
        svg.push_str(&format!(
            "<line x1=\"{plot_l}\" y1=\"{py:.1}\" x2=\"{plot_r}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            plot_l - 6.0,
            py + 4.0,
            tick_label(t)
        ));
    }

    // Axes frame and labels.
    svg.push_str(&format!(
        "<rect x=\"{plot_l}\" y=\"{plot_t}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>\n",
        plot_r - plot_l,
        plot_b - plot_t
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (plot_l + plot_r) / 2.0,
        HEIGHT - 14.0,
        escape(&axes.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        (plot_t + plot_b) / 2.0,
        (plot_t + plot_b) / 2.0,
        escape(&axes.y_label)
    ));

    // Traces.
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            if !(finite(x, axes.log_x) && finite(y, axes.log_y)) {
                continue;
            }
            let px = x_scale.map(x, plot_l, plot_r);
            let py = plot_b - y_scale.map(y, 0.0, plot_b - plot_t);
            path.push_str(&format!("{px:.2},{py:.2} "));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\" points=\"{}\"/>\n",
            path.trim_end()
        ));
        let ly = plot_t + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            plot_r + 8.0,
            plot_r + 30.0,
            plot_r + 36.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Square heatmap of `values` (row-major, `n` per axis) over [-half, half].
pub fn heatmap(title: &str, axis_label: &str, values: &[f64], n: usize, half: f64) -> String {
    let size = 520.0;
    let cell = size / n as f64;
    let v_max = values.iter().cloned().fold(f64::MIN, f64::max);
    let v_min = values.iter().cloned().fold(f64::MAX, f64::min);
    let span = (v_max - v_min).max(f64::MIN_POSITIVE);

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">
<rect width="{0}" height="{1}" fill="white"/>
<text x="{2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{3}</text>
"#,
        size + 120.0,
        size + 80.0,
        60.0 + size / 2.0,
        escape(title)
    );
    for iy in 0..n {
        for ix in 0..n {
            let v = values[iy * n + ix];
            let t = ((v - v_min) / span).clamp(0.0, 1.0);
            // Blue (low) through white to red (high), so negative ringing
            // is visible around the positive peak.
            let mid = 0.5 + 0.5 * (2.0 * t - 1.0);
            let r = (255.0 * mid) as u8;
            let b = (255.0 * (1.0 - mid)) as u8;
            let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs() * 0.6)) as u8;
            let x = 60.0 + ix as f64 * cell;
            let y = 40.0 + (n - 1 - iy) as f64 * cell;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>\n",
                cell + 0.5,
                cell + 0.5
            ));
        }
    }
    svg.push_str(&format!(
        "<rect x=\"60\" y=\"40\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{} (+-{half})</text>\n",
        60.0 + size / 2.0,
        size + 70.0,
        escape(axis_label)
    ));
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64], log: bool) -> (f64, f64) {
    let mut min = f64::MAX;
    let mut max = f64::MIN;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if values.is_empty() || min > max {
        return if log { (0.1, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        (min / 1.5, max * 1.5)
    } else {
        let pad = (max - min).max(1e-12) * 0.05;
        (min - pad, max + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
