//! Gaussian-state reconstruction from quadrature scans and filtered
//! back-projection of quadrature histograms into a Wigner map.
//!
//! Two reconstruction routes are provided:
//!
//! * [`reconstruct_covariance`] fits the quadrature-variance model
//!   V(theta) = V11 cos^2 + V22 sin^2 + 2 V12 sin cos to a scan of
//!   measured variances by linear least squares. Exact for noiseless
//!   input at three distinct angles.
//! * [`wigner_backprojection`] runs an inverse Radon transform (filtered
//!   back-projection with a band-limited ramp kernel) on binned
//!   quadrature histograms, making no Gaussian assumption.
//!
//! Everything is in shot-noise units: the vacuum state has variance 1/2 in
//! every quadrature and det(cov) >= 1/4 is the uncertainty bound.

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;

use crate::error::{Error, RawCovariance, Result};

/// Minimum determinant of a physical covariance in shot-noise units.
pub const MIN_COV_DET: f64 = 0.25;

/// Relative slack applied to the determinant bound to absorb rounding.
const DET_SLACK: f64 = 1e-9;

/// Gaussian state of the output field: quadrature means and a symmetric
/// positive-definite 2x2 covariance with det >= 1/4.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: [f64; 2],
    covariance: RawCovariance,
}

impl GaussianState {
    /// Validates and wraps a mean vector and covariance matrix.
    pub fn new(mean: [f64; 2], covariance: RawCovariance) -> Result<Self> {
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(Error::domain("state mean must be finite"));
        }
        let rel_asym = (covariance[0][1] - covariance[1][0]).abs()
            / (1.0 + covariance[0][1].abs().max(covariance[1][0].abs()));
        if rel_asym > 1e-12 {
            return Err(Error::Unphysical {
                fit: covariance,
                reason: "covariance is not symmetric".into(),
            });
        }
        let det = covariance[0][0] * covariance[1][1] - covariance[0][1] * covariance[1][0];
        if covariance[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::Unphysical {
                fit: covariance,
                reason: "covariance is not positive-definite".into(),
            });
        }
        if det < MIN_COV_DET * (1.0 - DET_SLACK) {
            return Err(Error::Unphysical {
                fit: covariance,
                reason: format!("det = {det} violates the uncertainty bound 1/4"),
            });
        }
        Ok(Self { mean, covariance })
    }

    /// The vacuum state: zero mean, covariance identity/2.
    pub fn vacuum() -> Self {
        Self {
            mean: [0.0, 0.0],
            covariance: [[0.5, 0.0], [0.0, 0.5]],
        }
    }

    /// Zero-mean state with excess variance in the amplitude quadrature,
    /// the forward model of a membrane-driven dark-port field.
    pub fn amplitude_excited(excess_variance: f64) -> Result<Self> {
        if !excess_variance.is_finite() || excess_variance < 0.0 {
            return Err(Error::domain("excess variance must be >= 0"));
        }
        Self::new([0.0, 0.0], [[0.5 + excess_variance, 0.0], [0.0, 0.5]])
    }

    /// Displaced vacuum.
    pub fn displaced_vacuum(mean: [f64; 2]) -> Result<Self> {
        Self::new(mean, [[0.5, 0.0], [0.0, 0.5]])
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn covariance(&self) -> RawCovariance {
        self.covariance
    }

    pub fn covariance_det(&self) -> f64 {
        self.covariance[0][0] * self.covariance[1][1]
            - self.covariance[0][1] * self.covariance[1][0]
    }

    /// Lower Cholesky factor of the covariance.
    fn cholesky(&self) -> [[f64; 2]; 2] {
        let l11 = self.covariance[0][0].sqrt();
        let l21 = self.covariance[0][1] / l11;
        let l22 = (self.covariance[1][1] - l21 * l21).sqrt();
        [[l11, 0.0], [l21, l22]]
    }

    /// Draws `n` correlated quadrature pairs (x1, x2) from the state.
    pub fn sample_pairs(&self, n: usize, seed: u64) -> Vec<[f64; 2]> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let l = self.cholesky();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                [
                    self.mean[0] + l[0][0] * z1,
                    self.mean[1] + l[1][0] * z1 + l[1][1] * z2,
                ]
            })
            .collect()
    }

    /// Draws `n` samples of the quadrature at angle `theta`.
    pub fn sample_quadrature(&self, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        self.sample_pairs(n, seed)
            .into_iter()
            .map(|p| c * p[0] + s * p[1])
            .collect()
    }
}

/// Variance of the quadrature at angle theta:
/// V(theta) = V11 cos^2 + V22 sin^2 + 2 V12 sin cos.
pub fn variance_vs_theta(state: &GaussianState, theta: f64) -> f64 {
    let v = state.covariance();
    let (c, s) = (theta.cos(), theta.sin());
    v[0][0] * c * c + v[1][1] * s * s + 2.0 * v[0][1] * s * c
}

/// Least-squares fit of (V11, V22, V12) to a scan of (theta, variance)
/// pairs.
///
/// Requires at least three distinct angles modulo pi and positive measured
/// variances; the fit is exact for noiseless three-angle input. A fit that
/// is not positive-definite is reported as an unphysical-covariance error
/// carrying the raw matrix.
pub fn reconstruct_covariance(scan: &[(f64, f64)]) -> Result<RawCovariance> {
    if scan.len() < 3 {
        return Err(Error::Reconstruction(format!(
            "need at least 3 scan points, got {}",
            scan.len()
        )));
    }
    if scan.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::Reconstruction("scan contains non-finite entries".into()));
    }
    if let Some((t, v)) = scan.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::Reconstruction(format!(
            "variance must be positive, got {v} at theta = {t}"
        )));
    }
    let distinct = count_distinct_mod_pi(scan);
    if distinct < 3 {
        return Err(Error::Reconstruction(format!(
            "need >= 3 distinct angles modulo pi, got {distinct}"
        )));
    }

    // Normal equations for the design row [cos^2, sin^2, sin(2 theta)].
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(theta, var) in scan {
        let (c, s) = (theta.cos(), theta.sin());
        let row = [c * c, s * s, 2.0 * s * c];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * var;
        }
    }
    let sol = solve_3x3(ata, atb).ok_or_else(|| {
        Error::Reconstruction("rank-deficient design matrix (angles too close modulo pi)".into())
    })?;
    let fit = [[sol[0], sol[2]], [sol[2], sol[1]]];
    let det = fit[0][0] * fit[1][1] - fit[0][1] * fit[1][0];
    if fit[0][0] <= 0.0 || det <= 0.0 {
        return Err(Error::Unphysical {
            fit,
            reason: "fitted covariance is not positive-definite".into(),
        });
    }
    Ok(fit)
}

fn count_distinct_mod_pi(scan: &[(f64, f64)]) -> usize {
    const ANGLE_TOL: f64 = 1e-9;
    let mut reduced: Vec<f64> = scan.iter().map(|(t, _)| t.rem_euclid(PI)).collect();
    reduced.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut distinct = 0;
    let mut prev = f64::NEG_INFINITY;
    for &t in &reduced {
        if t - prev > ANGLE_TOL {
            distinct += 1;
            prev = t;
        }
    }
    // First and last may coincide modulo pi.
    if distinct > 1 && (PI - reduced[reduced.len() - 1]) + reduced[0] <= ANGLE_TOL {
        distinct -= 1;
    }
    distinct
}

/// Gaussian elimination with partial pivoting; None when singular.
fn solve_3x3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for k in (i + 1)..3 {
            acc -= m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// Binned quadrature samples at one readout angle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureHistogram {
    /// Readout angle in rad.
    pub angle: f64,
    /// Counts per bin.
    pub counts: Vec<u64>,
    /// Lower edge of the first bin, in shot-noise units.
    pub min: f64,
    /// Common bin width, in shot-noise units.
    pub bin_width: f64,
}

impl QuadratureHistogram {
    pub fn new(angle: f64, counts: Vec<u64>, min: f64, bin_width: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Data("histogram has no bins".into()));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) || !min.is_finite() {
            return Err(Error::domain("histogram binning must be finite with positive width"));
        }
        Ok(Self {
            angle,
            counts,
            min,
            bin_width,
        })
    }

    /// Bins `samples` over [min, min + bins*width); out-of-range samples are
    /// dropped.
    pub fn from_samples(
        angle: f64,
        samples: &[f64],
        min: f64,
        bin_width: f64,
        bins: usize,
    ) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Data("histogram needs at least one bin".into()));
        }
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let idx = (x - min) / bin_width;
            if idx >= 0.0 && idx < bins as f64 {
                counts[idx as usize] += 1;
            }
        }
        Self::new(angle, counts, min, bin_width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn center(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.bin_width
    }
}

/// Square phase-space grid, symmetric about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceGrid {
    /// Half extent of the grid: axes run from -half_extent to +half_extent.
    pub half_extent: f64,
    /// Number of points per axis (>= 3).
    pub points_per_axis: usize,
}

impl PhaseSpaceGrid {
    pub fn new(half_extent: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::domain("grid half extent must be positive"));
        }
        if points_per_axis < 3 {
            return Err(Error::domain("grid needs at least 3 points per axis"));
        }
        Ok(Self {
            half_extent,
            points_per_axis,
        })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_extent / (self.points_per_axis - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.step();
        h * h
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points_per_axis)
            .map(|i| -self.half_extent + i as f64 * h)
            .collect()
    }
}

/// Reconstructed Wigner map on a phase-space grid. Values are stored
/// row-major with x1 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerMap {
    pub fn value(&self, ix1: usize, ix2: usize) -> f64 {
        self.values[ix2 * self.grid.points_per_axis + ix1]
    }

    /// Grid quadrature of the map; 1 for a well-sampled state.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// First moments (mean position) of the map.
    pub fn mean(&self) -> [f64; 2] {
        let axis = self.grid.axis();
        let cell = self.grid.cell_area();
        let norm = self.integral();
        let mut m = [0.0, 0.0];
        for (i2, &x2) in axis.iter().enumerate() {
            for (i1, &x1) in axis.iter().enumerate() {
                let w = self.value(i1, i2) * cell;
                m[0] += w * x1;
                m[1] += w * x2;
            }
        }
        [m[0] / norm, m[1] / norm]
    }

    /// Central second moments [var(x1), var(x2), cov(x1, x2)].
    pub fn central_moments(&self) -> [f64; 3] {
        let axis = self.grid.axis();
        let cell = self.grid.cell_area();
        let norm = self.integral();
        let mean = self.mean();
        let (mut v1, mut v2, mut c12) = (0.0, 0.0, 0.0);
        for (i2, &x2) in axis.iter().enumerate() {
            for (i1, &x1) in axis.iter().enumerate() {
                let w = self.value(i1, i2) * cell;
                let (d1, d2) = (x1 - mean[0], x2 - mean[1]);
                v1 += w * d1 * d1;
                v2 += w * d2 * d2;
                c12 += w * d1 * d2;
            }
        }
        [v1 / norm, v2 / norm, c12 / norm]
    }

    /// Grid coordinates of the maximum value.
    pub fn peak_location(&self) -> [f64; 2] {
        let axis = self.grid.axis();
        let (mut best, mut loc) = (f64::NEG_INFINITY, [0.0, 0.0]);
        for (i2, &x2) in axis.iter().enumerate() {
            for (i1, &x1) in axis.iter().enumerate() {
                let w = self.value(i1, i2);
                if w > best {
                    best = w;
                    loc = [x1, x2];
                }
            }
        }
        loc
    }

    /// Bilinear interpolation of the map at (x1, x2); 0 outside the grid.
    pub fn interpolate(&self, x1: f64, x2: f64) -> f64 {
        let n = self.grid.points_per_axis;
        let h = self.grid.step();
        let fx = (x1 + self.grid.half_extent) / h;
        let fy = (x2 + self.grid.half_extent) / h;
        if fx < 0.0 || fy < 0.0 || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
            return 0.0;
        }
        let ix = (fx as usize).min(n - 2);
        let iy = (fy as usize).min(n - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let v00 = self.value(ix, iy);
        let v10 = self.value(ix + 1, iy);
        let v01 = self.value(ix, iy + 1);
        let v11 = self.value(ix + 1, iy + 1);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }
}

/// Maximum tolerated cyclic gap between consecutive scan angles, as a
/// multiple of the uniform spacing pi/n.
const COVERAGE_GAP_FACTOR: f64 = 2.5;

/// Filtered back-projection with the ramp filter cut off at the histogram
/// binning Nyquist frequency.
pub fn wigner_backprojection(
    histograms: &[QuadratureHistogram],
    grid: &PhaseSpaceGrid,
) -> Result<WignerMap> {
    let nyquist = 0.5 / validate_histograms(histograms)?;
    wigner_backprojection_with_cutoff(histograms, grid, nyquist)
}

/// Filtered back-projection with an explicit high-frequency cutoff (in
/// cycles per shot-noise unit). The top 20% of the passband is tapered
/// with a raised cosine to suppress ringing.
pub fn wigner_backprojection_with_cutoff(
    histograms: &[QuadratureHistogram],
    grid: &PhaseSpaceGrid,
    cutoff: f64,
) -> Result<WignerMap> {
    let bin_width = validate_histograms(histograms)?;
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::domain("cutoff must be positive"));
    }

    let n_bins = histograms[0].counts.len();
    let fft_len = (2 * n_bins).next_power_of_two();
    let kernel = ramp_kernel_response(fft_len, bin_width, cutoff);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(fft_len);
    let ifft = planner.plan_fft_inverse(fft_len);

    // Filter every projection: q = ifft(fft(p) * kernel) * bin_width.
    let filtered: Vec<Vec<f64>> = histograms
        .par_iter()
        .map(|h| {
            let total = h.total() as f64;
            let mut buf: Vec<Complex64> = h
                .counts
                .iter()
                .map(|&c| Complex64::new(c as f64 / (total * bin_width), 0.0))
                .collect();
            buf.resize(fft_len, Complex64::new(0.0, 0.0));
            fft.process(&mut buf);
            for (b, k) in buf.iter_mut().zip(&kernel) {
                *b *= k;
            }
            ifft.process(&mut buf);
            // rustfft's inverse is unnormalized: divide by fft_len.
            buf[..n_bins]
                .iter()
                .map(|c| c.re * bin_width / fft_len as f64)
                .collect()
        })
        .collect();

    let axis = grid.axis();
    let n = grid.points_per_axis;
    let first_center = histograms[0].center(0);
    let angle_weight = PI / histograms.len() as f64;

    // Back-project row by row; rows are independent and collected in order,
    // so the result is bit-identical regardless of thread count.
    let values: Vec<f64> = axis
        .par_iter()
        .flat_map_iter(|&x2| {
            let mut row = vec![0.0f64; n];
            for (h, q) in histograms.iter().zip(&filtered) {
                let (c, s) = (h.angle.cos(), h.angle.sin());
                let base = x2 * s;
                for (ix, &x1) in axis.iter().enumerate() {
                    let pos = (x1 * c + base - first_center) / bin_width;
                    if pos >= 0.0 && pos < (n_bins - 1) as f64 {
                        let i0 = pos as usize;
                        let frac = pos - i0 as f64;
                        row[ix] += q[i0] * (1.0 - frac) + q[i0 + 1] * frac;
                    }
                }
            }
            for v in &mut row {
                *v *= angle_weight;
            }
            row
        })
        .collect();

    Ok(WignerMap { grid: *grid, values })
}

/// Frequency response of the band-limited ramp (Ram-Lak) kernel: the
/// spatial-domain kernel g[0] = 1/(4 w^2), g[m odd] = -1/(pi^2 m^2 w^2),
/// g[m even] = 0, transformed and tapered above 80% of the cutoff.
fn ramp_kernel_response(fft_len: usize, bin_width: f64, cutoff: f64) -> Vec<Complex64> {
    let mut kernel = vec![Complex64::new(0.0, 0.0); fft_len];
    kernel[0] = Complex64::new(0.25, 0.0);
    let mut m = 1usize;
    while m <= fft_len / 2 {
        let v = -1.0 / (PI * PI * (m * m) as f64);
        kernel[m] = Complex64::new(v, 0.0);
        kernel[fft_len - m] = Complex64::new(v, 0.0);
        m += 2;
    }
    let w2 = bin_width * bin_width;
    for k in kernel.iter_mut() {
        *k /= w2;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(fft_len).process(&mut kernel);

    // Raised-cosine taper over the top 20% of the passband.
    let taper_start = 0.8 * cutoff;
    for (i, k) in kernel.iter_mut().enumerate() {
        let idx = if i <= fft_len / 2 { i as f64 } else { (fft_len - i) as f64 };
        let freq = idx / (fft_len as f64 * bin_width);
        if freq > cutoff {
            *k = Complex64::new(0.0, 0.0);
        } else if freq > taper_start {
            let t = (freq - taper_start) / (cutoff - taper_start);
            let a = (0.5 * PI * t).cos();
            *k *= a * a;
        }
    }
    kernel
}

/// Checks angle coverage and binning consistency; returns the common bin
/// width.
fn validate_histograms(histograms: &[QuadratureHistogram]) -> Result<f64> {
    if histograms.len() < 8 {
        return Err(Error::Coverage(format!(
            "need at least 8 angles covering [0, pi), got {}",
            histograms.len()
        )));
    }
    let first = &histograms[0];
    for h in histograms {
        if h.total() == 0 {
            return Err(Error::Data(format!("histogram at theta = {} is empty", h.angle)));
        }
        if h.counts.len() != first.counts.len()
            || (h.bin_width - first.bin_width).abs() > 1e-12 * first.bin_width
            || (h.min - first.min).abs() > 1e-9 * first.bin_width
        {
            return Err(Error::Data(
                "histograms must share a common binning (min, width, count)".into(),
            ));
        }
    }
    let mut reduced: Vec<f64> = histograms.iter().map(|h| h.angle.rem_euclid(PI)).collect();
    reduced.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let uniform = PI / histograms.len() as f64;
    let mut max_gap: f64 = (PI - reduced[reduced.len() - 1]) + reduced[0];
    for pair in reduced.windows(2) {
        max_gap = max_gap.max(pair[1] - pair[0]);
    }
    if max_gap > COVERAGE_GAP_FACTOR * uniform {
        return Err(Error::Coverage(format!(
            "angles do not cover [0, pi) uniformly: largest gap {max_gap:.3} rad vs \
             uniform spacing {uniform:.3} rad"
        )));
    }
    Ok(first.bin_width)
}
