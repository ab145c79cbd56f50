//! Gridded probability densities, characteristic-function inversion and
//! shape diagnostics shared by the exact, empirical and small-quench routes.

use crate::error::{Error, Result};
use crate::par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How a density estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ExactInversion,
    Empirical,
    Convolution,
}

/// Width of the Gaussian resolution kernel applied during inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// 2.5 grid steps: the smoothed density is band-limited below the grid's
    /// Nyquist frequency, so trapezoid moments on the grid are exact.
    Auto,
    /// Explicit kernel standard deviation; zero requests pointwise values.
    Fixed(f64),
}

/// Abscissae for a density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Explicit `[lo, hi]`; chosen from the distribution's moments and support when absent.
    pub range: Option<(f64, f64)>,
    pub points: usize,
    pub resolution: Resolution,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { range: None, points: 1024, resolution: Resolution::Auto }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        GridSpec { points, ..Default::default() }
    }

    pub fn with_range(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec { range: Some((lo, hi)), points, resolution: Resolution::Auto }
    }

    pub fn resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    /// Materialize the grid for a law with the given mean, standard deviation
    /// and support. Returns the abscissae and the kernel width.
    pub(crate) fn build(&self, mean: f64, sd: f64, support: (f64, f64)) -> Result<(Vec<f64>, f64)> {
        if self.points < 8 {
            return Err(Error::InvalidArgument(format!("grid needs at least 8 points, got {}", self.points)));
        }
        let (lo, hi) = match self.range {
            Some((lo, hi)) => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(Error::InvalidArgument(format!("bad grid range [{lo}, {hi}]")));
                }
                (lo, hi)
            }
            None => {
                let lo = support.0.max(mean - 9.0 * sd);
                let hi = support.1.min(mean + 9.0 * sd);
                let pad = 0.05 * (hi - lo).max(f64::MIN_POSITIVE);
                (lo - pad, hi + pad)
            }
        };
        let n = self.points;
        let dx = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
        let sigma = match self.resolution {
            Resolution::Auto => 2.5 * dx,
            Resolution::Fixed(s) if s >= 0.0 && s.is_finite() => s,
            Resolution::Fixed(s) => return Err(Error::InvalidArgument(format!("bad resolution {s}"))),
        };
        Ok((grid, sigma))
    }
}

/// A probability density on a uniform grid together with the moments of the
/// underlying law.
///
/// When `resolution > 0` the density is that of the law convolved with a
/// centred Gaussian of that width; the moment fields describe the law itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub provenance: Provenance,
    pub resolution: f64,
    /// Set when the law is a point mass; grid and density are then empty.
    pub point_mass: Option<f64>,
}

impl DistributionEstimate {
    pub(crate) fn point_mass(at: f64, provenance: Provenance) -> Self {
        DistributionEstimate {
            grid: Vec::new(),
            density: Vec::new(),
            mean: at,
            variance: 0.0,
            skewness: 0.0,
            excess_kurtosis: 0.0,
            provenance,
            resolution: 0.0,
            point_mass: Some(at),
        }
    }

    pub(crate) fn from_cumulants(
        grid: Vec<f64>,
        density: Vec<f64>,
        cumulants: [f64; 4],
        provenance: Provenance,
        resolution: f64,
    ) -> Self {
        let [k1, k2, k3, k4] = cumulants;
        DistributionEstimate {
            grid,
            density,
            mean: k1,
            variance: k2,
            skewness: if k2 > 0.0 { k3 / k2.powf(1.5) } else { 0.0 },
            excess_kurtosis: if k2 > 0.0 { k4 / (k2 * k2) } else { 0.0 },
            provenance,
            resolution,
            point_mass: None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.point_mass.is_some()
    }

    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    /// Trapezoidal integral of the density.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density, |_| 1.0)
    }

    /// First four cumulants of the gridded density, with the kernel variance
    /// removed from the second.
    pub fn numerical_cumulants(&self) -> [f64; 4] {
        let mass = self.integral();
        let m1 = trapezoid(&self.grid, &self.density, |x| x) / mass;
        let c = |p: i32| trapezoid(&self.grid, &self.density, |x| (x - m1).powi(p)) / mass;
        let (c2, c3, c4) = (c(2), c(3), c(4));
        // κ₃ and κ₄ of a Gaussian vanish, so only κ₂ carries the kernel
        [m1, c2 - self.resolution * self.resolution, c3, c4 - 3.0 * c2 * c2]
    }

    /// Cumulants reported for the law: `[mean, variance, κ₃, κ₄]`.
    pub fn cumulants(&self) -> [f64; 4] {
        let v = self.variance;
        [self.mean, v, self.skewness * v.powf(1.5), self.excess_kurtosis * v * v]
    }

    /// Raw moments `E[Z^n]`, n = 1..4, of the law.
    pub fn raw_moments(&self) -> [f64; 4] {
        raw_from_cumulants(self.cumulants())
    }

    /// Cumulative distribution on the grid (trapezoid, normalized to end at 1).
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
            out.push(acc);
        }
        if acc > 0.0 {
            for v in &mut out {
                *v /= acc;
            }
        }
        out
    }

    /// Quantile by linear interpolation of the gridded CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        if let Some(at) = self.point_mass {
            return at;
        }
        let cdf = self.cdf();
        let i = cdf.partition_point(|&c| c < p);
        if i == 0 {
            return self.grid[0];
        }
        if i >= cdf.len() {
            return *self.grid.last().expect("non-empty grid");
        }
        let (c0, c1) = (cdf[i - 1], cdf[i]);
        let t = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1])
    }

    /// Largest deviation from the Gaussian with matched mean and variance
    /// (kernel variance included), relative to that Gaussian's peak height.
    pub fn gaussian_sup_error(&self) -> f64 {
        let var = self.variance + self.resolution * self.resolution;
        let sd = var.sqrt();
        let peak = 1.0 / (sd * (2.0 * PI).sqrt());
        self.grid
            .iter()
            .zip(&self.density)
            .map(|(&x, &p)| {
                let z = (x - self.mean) / sd;
                (p - peak * (-0.5 * z * z).exp()).abs()
            })
            .fold(0.0, f64::max)
            / peak
    }
}

pub(crate) fn raw_from_cumulants([k1, k2, k3, k4]: [f64; 4]) -> [f64; 4] {
    let m1 = k1;
    let m2 = k2 + k1 * k1;
    let m3 = k3 + 3.0 * k2 * k1 + k1.powi(3);
    let m4 = k4 + 4.0 * k3 * k1 + 3.0 * k2 * k2 + 6.0 * k2 * k1 * k1 + k1.powi(4);
    [m1, m2, m3, m4]
}

pub(crate) fn trapezoid(grid: &[f64], values: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 1..grid.len() {
        let h = grid[i] - grid[i - 1];
        s += 0.5 * h * (values[i] * weight(grid[i]) + values[i - 1] * weight(grid[i - 1]));
    }
    s
}

/// Below this the damped characteristic function is treated as zero.
pub(crate) const CF_FLOOR: f64 = 1e-13;

/// Frequency beyond which the Gaussian kernel alone pushes the
/// characteristic function below [`CF_FLOOR`].
pub(crate) fn kernel_cutoff(resolution: f64) -> f64 {
    if resolution > 0.0 {
        (2.0 * (1.0 / CF_FLOOR).ln()).sqrt() / resolution
    } else {
        f64::INFINITY
    }
}

/// Fourier inversion of a characteristic function onto a grid by the
/// trapezoid rule in `u`, with an optional Gaussian resolution kernel.
///
/// `support` bounds where the law carries mass; it fixes the `u` step so
/// that periodic images stay off the grid. Nodes are added until the damped
/// characteristic function has decayed below [`CF_FLOOR`]; failing that by
/// `u_limit` is an accuracy error.
pub(crate) fn invert_trapezoid<F>(
    grid: &[f64],
    support: (f64, f64),
    resolution: f64,
    cf: F,
    u_limit: f64,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Complex64 + Sync + Send,
{
    let lo = grid[0];
    let hi = *grid.last().expect("non-empty grid");
    let period = (hi - support.0).max(support.1 - lo) + 10.0 * resolution;
    let du = 2.0 * PI / (1.05 * period);
    let u_limit = u_limit.min(kernel_cutoff(resolution));
    let damp = |u: f64| (-0.5 * resolution * resolution * u * u).exp();

    const BLOCK: usize = 256;
    let mut values: Vec<Complex64> = Vec::new();
    loop {
        let start = values.len();
        let block = par::map_range(BLOCK, |i| {
            let u = (start + i) as f64 * du;
            cf(u) * damp(u)
        });
        values.extend(block);
        let window = (values.len() / 10).max(64).min(values.len());
        let tail_max = values[values.len() - window..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let u_last = (values.len() - 1) as f64 * du;
        if tail_max < CF_FLOOR {
            break;
        }
        if u_last >= u_limit {
            if resolution > 0.0 {
                break;
            }
            return Err(Error::NumericAccuracy(format!(
                "characteristic function still at {tail_max:e} at u = {u_last}; use a positive resolution"
            )));
        }
    }
    let density = par::map(grid, |&x| {
        let mut s = 0.5 * values[0].re;
        for (i, v) in values.iter().enumerate().skip(1) {
            let phase = Complex64::from_polar(1.0, -(i as f64) * du * x);
            s += (v * phase).re;
        }
        s * du / PI
    });
    Ok(density)
}

/// Clamp rounding-level negatives, check captured mass and renormalize.
pub(crate) fn finalize_density(grid: &[f64], mut density: Vec<f64>) -> Result<Vec<f64>> {
    let peak = density.iter().cloned().fold(0.0, f64::max);
    for d in &mut density {
        if *d < 0.0 && *d > -1e-9 * peak.max(1.0) {
            *d = 0.0;
        }
    }
    let mass = trapezoid(grid, &density, |_| 1.0);
    if !(mass > 1.0 - 1e-4) {
        return Err(Error::GridTooNarrow { mass });
    }
    if (mass - 1.0).abs() > 1e-4 {
        return Err(Error::Internal(format!("inverted density carries mass {mass}")));
    }
    for d in &mut density {
        *d /= mass;
    }
    Ok(density)
}

/// Local maxima of a density and their locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub count: usize,
    /// Sorted by height, highest first.
    pub locations: Vec<f64>,
    pub heights: Vec<f64>,
}

/// Relative prominence a local maximum needs to count as a peak.
pub const PEAK_PROMINENCE: f64 = 0.05;
/// Minimum separation between reported peaks, in grid steps.
pub const PEAK_SEPARATION: usize = 3;

/// Count and locate peaks whose topographic prominence is at least 5% of the
/// global maximum, keeping the higher of any two closer than 3 grid steps.
pub fn peak_structure(dist: &DistributionEstimate) -> Result<PeakReport> {
    if dist.is_degenerate() || dist.density.len() < 3 {
        return Err(Error::InvalidArgument("peak structure of a degenerate distribution".into()));
    }
    let d = &dist.density;
    let n = d.len();
    let global = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(global > 0.0) {
        return Err(Error::InvalidArgument("density has no positive values".into()));
    }
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < n {
        // plateau [i, j]
        let mut j = i;
        while j + 1 < n && d[j + 1] == d[i] {
            j += 1;
        }
        let left_lower = i == 0 || d[i - 1] < d[i];
        let right_lower = j == n - 1 || d[j + 1] < d[i];
        if left_lower && right_lower && n > 1 {
            candidates.push((i + j) / 2);
        }
        i = j + 1;
    }
    let mut peaks: Vec<(usize, f64)> = Vec::new();
    for &c in &candidates {
        let h = d[c];
        let mut left_min = h;
        let mut k = c;
        while k > 0 {
            k -= 1;
            if d[k] > h {
                break;
            }
            left_min = left_min.min(d[k]);
        }
        let mut right_min = h;
        let mut k = c;
        while k + 1 < n {
            k += 1;
            if d[k] > h {
                break;
            }
            right_min = right_min.min(d[k]);
        }
        let prominence = h - left_min.max(right_min);
        // a maximum sitting on the grid edge has no base on that side
        let prominence = if c == 0 || c == n - 1 { h - left_min.min(right_min) } else { prominence };
        if prominence >= PEAK_PROMINENCE * global {
            peaks.push((c, h));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for p in peaks {
        if kept.iter().all(|q| q.0.abs_diff(p.0) >= PEAK_SEPARATION) {
            kept.push(p);
        }
    }
    Ok(PeakReport {
        count: kept.len(),
        locations: kept.iter().map(|p| dist.grid[p.0]).collect(),
        heights: kept.iter().map(|p| p.1).collect(),
    })
}

/// Standard normal quantile (Acklam's rational approximation, relative error < 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian(mean: f64, sd: f64, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|x| (-(x - mean).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt()))
            .collect()
    }

    fn estimate(grid: Vec<f64>, density: Vec<f64>) -> DistributionEstimate {
        estimate_at(0.0, grid, density)
    }

    fn estimate_at(mean: f64, grid: Vec<f64>, density: Vec<f64>) -> DistributionEstimate {
        DistributionEstimate::from_cumulants(grid, density, [mean, 1.0, 0.0, 0.0], Provenance::Convolution, 0.0)
    }

    #[test]
    fn gaussian_has_one_peak() {
        let grid: Vec<f64> = (0..401).map(|i| -6.0 + 0.03 * i as f64).collect();
        let d = estimate_at(0.3, grid.clone(), gaussian(0.3, 1.0, &grid));
        let r = peak_structure(&d).unwrap();
        assert_eq!(r.count, 1);
        assert!((r.locations[0] - 0.3).abs() < 0.03);
        assert!(d.gaussian_sup_error() < 1e-3);
    }

    #[test]
    fn arcsine_has_two_edge_peaks() {
        let a = 0.5;
        let grid: Vec<f64> = (0..1001).map(|i| -0.7 + 0.0014 * i as f64).collect();
        let density: Vec<f64> = grid
            .iter()
            .map(|&x| if x.abs() < a { 1.0 / (PI * (a * a - x * x).sqrt()) } else { 0.0 })
            .collect();
        let r = peak_structure(&estimate(grid.clone(), density)).unwrap();
        assert_eq!(r.count, 2);
        for loc in r.locations {
            assert!((loc.abs() - a).abs() < 2.0 * 0.0014);
        }
    }

    #[test]
    fn small_bumps_are_not_peaks() {
        let grid: Vec<f64> = (0..401).map(|i| -6.0 + 0.03 * i as f64).collect();
        let mut density = gaussian(0.0, 1.0, &grid);
        let bump = gaussian(3.0, 0.1, &grid);
        for (d, b) in density.iter_mut().zip(&bump) {
            *d += 0.002 * b;
        }
        assert_eq!(peak_structure(&estimate(grid, density)).unwrap().count, 1);
    }

    #[test]
    fn degenerate_peak_structure_is_flagged() {
        let d = DistributionEstimate::point_mass(0.0, Provenance::ExactInversion);
        assert!(peak_structure(&d).is_err());
    }

    #[test]
    fn inversion_of_gaussian_cf() {
        let grid: Vec<f64> = (0..257).map(|i| -5.0 + 10.0 * i as f64 / 256.0).collect();
        let cf = |u: f64| Complex64::new((-0.5 * u * u).exp(), 0.0) * Complex64::from_polar(1.0, 0.25 * u);
        let dens = invert_trapezoid(&grid, (-12.0, 12.0), 0.0, cf, 100.0).unwrap();
        let exact = gaussian(0.25, 1.0, &grid);
        for (a, b) in dens.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resolution_kernel_adds_known_variance() {
        // uniform law on [−1, 1]: κ₂ = 1/3
        let grid: Vec<f64> = (0..1024).map(|i| -1.5 + 3.0 * i as f64 / 1023.0).collect();
        let sigma = 2.5 * (grid[1] - grid[0]);
        let cf = |u: f64| Complex64::new(if u == 0.0 { 1.0 } else { u.sin() / u }, 0.0);
        let dens = invert_trapezoid(&grid, (-1.0, 1.0), sigma, cf, f64::INFINITY).unwrap();
        let dens = finalize_density(&grid, dens).unwrap();
        let d = DistributionEstimate::from_cumulants(
            grid,
            dens,
            [0.0, 1.0 / 3.0, 0.0, -2.0 / 15.0],
            Provenance::ExactInversion,
            sigma,
        );
        let c = d.numerical_cumulants();
        assert!(c[0].abs() < 1e-12);
        assert_relative_eq!(c[1], 1.0 / 3.0, max_relative = 1e-9);
        assert_relative_eq!(c[3], -2.0 / 15.0, max_relative = 1e-8);
        assert!(d.density.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let grid: Vec<f64> = (0..256).map(|i| -1.0 + 2.0 * i as f64 / 255.0).collect();
        let dens = gaussian(0.0, 1.0, &grid);
        assert!(matches!(finalize_density(&grid, dens), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn normal_quantile_values() {
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert_relative_eq!(normal_quantile(0.975), 1.959_963_984_540_054, max_relative = 1e-8);
        assert_relative_eq!(normal_quantile(0.001), -3.090_232_306_167_813_5, max_relative = 1e-8);
    }

    #[test]
    fn raw_moments_of_standard_normal() {
        assert_eq!(raw_from_cumulants([0.0, 1.0, 0.0, 0.0]), [0.0, 1.0, 0.0, 3.0]);
    }
}
