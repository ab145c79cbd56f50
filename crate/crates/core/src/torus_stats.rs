//! Infinite-time statistics of `Z = ln L`: with rationally independent
//! frequencies the phases `Λ¹_k t` fill the torus uniformly, so `Z` is a sum
//! of independent per-mode variables `X_k = ln f_k(ϑ_k)` with `ϑ_k` uniform.

use crate::distribution::{self, DistributionEstimate, GridSpec, Provenance};
use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::{integrate, Rule};
use crate::special::elliptic_e;
use crate::xy_model::{ModeData, QuenchSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const QUAD_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 4096;

/// Phase cut just short of `π/2`, used where `ln f_k` diverges there.
const SINGULAR_CUT: f64 = 1e-15;

/// Lowest value of `X_k` that carries probability above ~1e-15.
pub(crate) fn effective_min(mode: &ModeData) -> f64 {
    let m = mode.log_factor_min();
    if m.is_finite() {
        m
    } else {
        mode.log_factor(FRAC_PI_2 * (1.0 - SINGULAR_CUT))
    }
}

/// Uniform phase average `(2/π)∫₀^{π/2} F(ϑ) dϑ` of a vector integrand
/// whose components are O(1).
fn phase_average<const N: usize>(f: impl Fn(f64) -> [f64; N]) -> Result<([f64; N], Vec<(f64, f64)>)> {
    let r = integrate(f, 0.0, FRAC_PI_2, QUAD_TOL, MAX_PANELS)?;
    Ok((r.value.map(|v| v / FRAC_PI_2), r.panels))
}

/// Time average of `f_k`: `[1 + 1/c² − b/2 + (4/πc) E(b)] / (1 + 1/c)²`,
/// with `E` the complete elliptic integral of the second kind in parameter form.
pub fn mean_echo_factor(mode: &ModeData) -> f64 {
    let e = mode.sech;
    (1.0 + e * e - 0.5 * mode.b + 4.0 * e / PI * elliptic_e(mode.b)) / ((1.0 + e) * (1.0 + e))
}

/// `ln L̄ = Σ_k ln f̄_k`.
pub fn log_mean_echo_closed_form(modes: &[ModeData]) -> f64 {
    modes.iter().map(|m| mean_echo_factor(m).ln()).sum()
}

/// Infinite-time average `L̄ = ∏_k f̄_k`.
pub fn mean_echo_closed_form(modes: &[ModeData]) -> f64 {
    log_mean_echo_closed_form(modes).exp()
}

/// `ln g_k(λ)` with `g_k(λ) = ⟨f_k^λ⟩`, the phase average of `e^{λX_k}`.
pub fn mode_log_mgf(mode: &ModeData, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("λ must be finite, got {lambda}")));
    }
    if mode.is_trivial() || lambda == 0.0 {
        return Ok(0.0);
    }
    let extreme = lambda * effective_min(mode);
    if extreme > 700.0 {
        return Err(Error::NumericAccuracy(format!("f_k^λ overflows for λ = {lambda} at k = {}", mode.k)));
    }
    let scale = extreme.exp_m1().abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let ([v], _) = phase_average(|t| [(lambda * mode.log_factor(t)).exp_m1() / scale])?;
    let g_minus_one = v * scale;
    if g_minus_one <= -1.0 {
        return Err(Error::NumericAccuracy(format!("non-positive phase average at k = {}", mode.k)));
    }
    Ok(g_minus_one.ln_1p())
}

/// `ln M(λ) = ln ⟨L^λ⟩ = Σ_k ln g_k(λ)`.
pub fn log_mgf(modes: &[ModeData], lambda: f64) -> Result<f64> {
    Ok(par::try_map(modes, |m| mode_log_mgf(m, lambda))?.into_iter().sum())
}

/// `⟨L^λ⟩` over the torus.
pub fn mgf(modes: &[ModeData], lambda: f64) -> Result<f64> {
    log_mgf(modes, lambda).map(f64::exp)
}

/// Large-`L` rate `G(λ) = (1/2π)∫₀^π ln g(k; λ) dk`, so that
/// `ln M(λ) ≈ L·G(λ)` (momentum spacing `2π/L`).
pub fn log_mgf_density(spec: &QuenchSpec, lambda: f64) -> Result<f64> {
    spec.validate()?;
    let inner = |k: f64| -> Result<f64> { mode_log_mgf(&ModeData::at(k, spec)?, lambda) };
    // first failure wins; the quadrature itself only sees finite values
    let failure = std::cell::RefCell::new(None);
    let r = integrate(
        |k| match inner(k) {
            Ok(v) => [v],
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [0.0]
            }
        },
        0.0,
        PI,
        1e-11,
        MAX_PANELS,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value[0] / (2.0 * PI))
}

/// Mean and central moments of one mode's `X_k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeMoments {
    pub mean: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl ModeMoments {
    /// First four cumulants of `X_k`.
    pub fn cumulants(&self) -> [f64; 4] {
        [self.mean, self.mu2, self.mu3, self.mu4 - 3.0 * self.mu2 * self.mu2]
    }
}

/// Phase-averaged moments of `X_k`, integrated in units of its range.
pub fn mode_moments(mode: &ModeData) -> Result<ModeMoments> {
    if mode.is_trivial() {
        return Ok(ModeMoments::default());
    }
    let s = -effective_min(mode);
    if !(s > 0.0) {
        return Ok(ModeMoments::default());
    }
    let y = |t: f64| mode.log_factor(t) / s;
    let ([m], _) = phase_average(|t| [y(t)])?;
    let ([c2, c3, c4], _) = phase_average(|t| {
        let d = y(t) - m;
        let d2 = d * d;
        [d2, d2 * d, d2 * d2]
    })?;
    Ok(ModeMoments { mean: m * s, mu2: c2 * s * s, mu3: c3 * s.powi(3), mu4: c4 * s.powi(4) })
}

/// Cumulants `κ_1..κ_n` of `Z` (n ≤ 4), additive over modes.
pub fn cumulants_z(modes: &[ModeData], n: usize) -> Result<Vec<f64>> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidArgument(format!("cumulant order must be 1..=4, got {n}")));
    }
    let per_mode = par::try_map(modes, mode_moments)?;
    let mut k = [0.0; 4];
    for m in &per_mode {
        for (acc, v) in k.iter_mut().zip(m.cumulants()) {
            *acc += v;
        }
    }
    Ok(k[..n].to_vec())
}

/// Quadrature rule for one mode's characteristic function
/// `φ_k(u) = (2/π)∫₀^{π/2} e^{iuX_k(ϑ)} dϑ`, fine enough that the phase
/// `uX_k` turns by at most one radian per Gauss–Legendre panel up to `u_max`.
struct ModeCf {
    values: Vec<f64>,
    weights: Vec<f64>,
}

const CF_ORDER: usize = 10;
const CF_MAX_NODES: usize = 4_000_000;

impl ModeCf {
    fn new(mode: &ModeData, u_max: f64) -> Result<Self> {
        let s = -effective_min(mode);
        // panels that resolve the shape of X_k, then subdivided for oscillation
        let (_, panels) = phase_average(|t| [mode.log_factor(t) / s])?;
        let x_at = |t: f64| {
            let v = mode.log_factor(t);
            if v.is_finite() {
                v
            } else {
                -s
            }
        };
        let mut fine = Vec::new();
        for &(a, b) in &panels {
            // X_k is monotone in ϑ on [0, π/2], so the endpoint difference is its variation
            let variation = (x_at(a) - x_at(b)).abs();
            let pieces = ((u_max * variation).ceil() as usize).max(1);
            if fine.len() + pieces > CF_MAX_NODES / CF_ORDER {
                return Err(Error::NumericAccuracy(format!(
                    "characteristic function of mode k = {} needs too many nodes; coarsen the grid",
                    mode.k
                )));
            }
            let h = (b - a) / pieces as f64;
            fine.extend((0..pieces).map(|i| (a + i as f64 * h, a + (i + 1) as f64 * h)));
        }
        let rule = Rule::composite(&fine, CF_ORDER);
        let values = rule.nodes.iter().map(|&t| x_at(t)).collect();
        let weights = rule.weights.iter().map(|w| w / FRAC_PI_2).collect();
        Ok(ModeCf { values, weights })
    }

    fn eval(&self, u: f64) -> Complex64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (&x, &w) in self.values.iter().zip(&self.weights) {
            let (s, c) = (u * x).sin_cos();
            re += w * c;
            im += w * s;
        }
        Complex64::new(re, im)
    }
}

/// Hoeffding radius beyond which a sum of independent variables with the
/// given ranges carries probability below 1e-14.
fn hoeffding_radius(ranges: impl Iterator<Item = f64>) -> f64 {
    let sum_sq: f64 = ranges.map(|r| r * r).sum();
    (0.5 * (2e14f64).ln() * sum_sq).sqrt()
}

/// Density of `Z` from its exact characteristic function `∏_k φ_k(u)`.
pub fn exact_distribution_z(modes: &[ModeData], grid: &GridSpec) -> Result<DistributionEstimate> {
    let active: Vec<ModeData> = modes.iter().filter(|m| !m.is_trivial()).copied().collect();
    let cumulants = cumulants_z(&active, 4)?;
    let cumulants = [cumulants[0], cumulants[1], cumulants[2], cumulants[3]];
    if active.is_empty() || cumulants[1] <= 0.0 {
        return Ok(DistributionEstimate::point_mass(cumulants[0], Provenance::ExactInversion));
    }
    let mins: Vec<f64> = active.iter().map(effective_min).collect();
    let support = (mins.iter().sum::<f64>(), 0.0);
    let sd = cumulants[1].sqrt();
    let (xs, resolution) = grid.build(cumulants[0], sd, support)?;
    let radius = hoeffding_radius(mins.iter().map(|m| -m));
    let effective = (support.0.max(cumulants[0] - radius), support.1.min(cumulants[0] + radius));

    let dx = xs[1] - xs[0];
    let u_max = distribution::kernel_cutoff(resolution).min(2.0 * PI / dx);
    let cfs = par::try_map(&active, |m| ModeCf::new(m, u_max))?;
    let cf = |u: f64| cfs.iter().fold(Complex64::new(1.0, 0.0), |acc, c| acc * c.eval(u));
    let density = distribution::invert_trapezoid(&xs, effective, resolution, cf, u_max)?;
    let density = distribution::finalize_density(&xs, density)?;
    Ok(DistributionEstimate::from_cumulants(xs, density, cumulants, Provenance::ExactInversion, resolution))
}

/// Time-sampled moments of `Z` over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub samples: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Plain sample means of `Z^n`, n = 1..4.
    pub raw: [f64; 4],
    /// Standard errors of `raw` treating samples as independent.
    pub raw_standard_error: [f64; 4],
    /// `E[Z^n]` after regressing on per-mode phase features `cos^{2p}(Λ¹t)`
    /// whose uniform-torus means are known; same estimand, lower variance.
    pub raw_adjusted: [f64; 4],
    pub feature_count: usize,
}

impl EmpiricalMoments {
    pub fn cumulants(&self) -> [f64; 4] {
        cumulants_from_raw(self.raw_adjusted)
    }
}

pub(crate) fn cumulants_from_raw([m1, m2, m3, m4]: [f64; 4]) -> [f64; 4] {
    let k2 = m2 - m1 * m1;
    let k3 = m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3);
    let k4 = m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4);
    [m1, k2, k3, k4]
}

/// Exponent vectors for control-variate features over `m` modes.
fn feature_exponents(m: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if m <= 3 {
        let mut e = vec![0u32; m];
        loop {
            let total: u32 = e.iter().sum();
            if (1..=4).contains(&total) {
                out.push(e.clone());
            }
            // odometer over 0..=4 per mode
            let mut i = 0;
            while i < m {
                e[i] += 1;
                if e[i] <= 4 {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
    } else {
        for j in 0..m {
            for p in 1..=4 {
                let mut e = vec![0u32; m];
                e[j] = p;
                out.push(e);
            }
        }
    }
    out
}

/// `⟨cos^{2p} ϑ⟩ = C(2p, p)/4^p` for uniform `ϑ`.
fn arcsine_moment(p: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..p {
        v *= (2 * i + 1) as f64 / (2 * i + 2) as f64;
    }
    v
}

const MAX_FEATURE_MODES: usize = 16;

fn draw_times(horizon: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive and finite, got {horizon}")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples).map(|_| horizon * rng.random::<f64>()).collect())
}

/// Moments of `Z(t)` at `samples` uniformly random times in `[0, horizon]`.
pub fn empirical_moments(modes: &[ModeData], horizon: f64, samples: usize, seed: u64) -> Result<EmpiricalMoments> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("moments need at least 2 samples, got {samples}")));
    }
    let times = draw_times(horizon, samples, seed)?;
    let active: Vec<ModeData> = modes.iter().filter(|m| !m.is_trivial()).copied().collect();
    // features on the modes with the widest range
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by(|&a, &b| effective_min(&active[a]).total_cmp(&effective_min(&active[b])));
    order.truncate(MAX_FEATURE_MODES);
    let exps = feature_exponents(order.len());
    let feature_means: Vec<f64> =
        exps.iter().map(|e| e.iter().map(|&p| arcsine_moment(p)).product()).collect();
    let d = exps.len() + 1;

    struct Acc {
        gram: DMatrix<f64>,
        rhs: DMatrix<f64>,
        sums: [f64; 8],
    }
    let chunks = samples.div_ceil(par::CHUNK);
    let partial = par::map_range(chunks, |c| {
        let mut acc = Acc { gram: DMatrix::zeros(d, d), rhs: DMatrix::zeros(d, 4), sums: [0.0; 8] };
        let mut x = DVector::zeros(d);
        let lo = c * par::CHUNK;
        let hi = (lo + par::CHUNK).min(samples);
        for &t in &times[lo..hi] {
            let z: f64 = active.iter().map(|m| m.log_factor(m.lambda1 * t)).sum();
            let cos2: Vec<f64> = order.iter().map(|&j| (active[j].lambda1 * t).cos().powi(2)).collect();
            x[0] = 1.0;
            for (f, (e, mean)) in exps.iter().zip(&feature_means).enumerate() {
                let v: f64 = e.iter().zip(&cos2).map(|(&p, &c)| c.powi(p as i32)).product();
                x[f + 1] = v - mean;
            }
            acc.gram.ger(1.0, &x, &x, 1.0);
            let pw = [z, z * z, z * z * z, z * z * z * z];
            for (n, &p) in pw.iter().enumerate() {
                for r in 0..d {
                    acc.rhs[(r, n)] += x[r] * p;
                }
                acc.sums[n] += p;
                acc.sums[4 + n] += p * p;
            }
        }
        acc
    });
    let mut gram = DMatrix::zeros(d, d);
    let mut rhs = DMatrix::zeros(d, 4);
    let mut sums = [0.0; 8];
    for a in partial {
        gram += a.gram;
        rhs += a.rhs;
        for (s, v) in sums.iter_mut().zip(a.sums) {
            *s += v;
        }
    }
    let n = samples as f64;
    let raw = [sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n];
    let raw_standard_error = [0, 1, 2, 3].map(|i| ((sums[4 + i] / n - raw[i] * raw[i]).max(0.0) / (n - 1.0)).sqrt());
    let raw_adjusted = match gram.clone().cholesky() {
        Some(ch) => {
            let beta = ch.solve(&rhs);
            [beta[(0, 0)], beta[(0, 1)], beta[(0, 2)], beta[(0, 3)]]
        }
        None => {
            log::warn!("control-variate regression is singular; reporting plain sample moments");
            raw
        }
    };
    Ok(EmpiricalMoments { samples, horizon, seed, raw, raw_standard_error, raw_adjusted, feature_count: exps.len() })
}

/// Density of `Z(t)` sampled at random times, smoothed with the grid's
/// resolution kernel (a histogram when the resolution is zero).
pub fn empirical_distribution_z(
    modes: &[ModeData],
    horizon: f64,
    samples: usize,
    seed: u64,
    grid: &GridSpec,
) -> Result<DistributionEstimate> {
    let times = draw_times(horizon, samples, seed)?;
    if samples == 1 {
        log::warn!("a single sample carries no distributional information");
        return Ok(DistributionEstimate::point_mass(crate::echo::log_echo_at(modes, times[0]), Provenance::Empirical));
    }
    let moments = empirical_moments(modes, horizon, samples, seed)?;
    let cumulants = moments.cumulants();
    let z = par::map(&times, |&t| crate::echo::log_echo_at(modes, t));
    if cumulants[1] <= 0.0 || z.iter().all(|&v| v == z[0]) {
        return Ok(DistributionEstimate::point_mass(z[0], Provenance::Empirical));
    }
    let support = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (xs, resolution) = grid.build(cumulants[0], cumulants[1].sqrt(), support)?;
    let n = xs.len();
    let dx = xs[1] - xs[0];
    // linear binning onto the grid
    let mut bins = vec![0.0; n];
    let mut outside = 0usize;
    for &v in &z {
        let pos = (v - xs[0]) / dx;
        if pos < -0.5 || pos > (n - 1) as f64 + 0.5 {
            outside += 1;
            continue;
        }
        let pos = pos.clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        bins[i] += 1.0 - frac;
        bins[i + 1] += frac;
    }
    let captured = 1.0 - outside as f64 / samples as f64;
    if captured < 1.0 - 1e-4 {
        return Err(Error::GridTooNarrow { mass: captured });
    }
    let norm = samples as f64;
    let density = if resolution > 0.0 {
        let reach = (8.0 * resolution / dx).ceil() as isize;
        let kernel: Vec<f64> = (-reach..=reach)
            .map(|j| {
                let x = j as f64 * dx / resolution;
                (-0.5 * x * x).exp() / (resolution * (2.0 * PI).sqrt())
            })
            .collect();
        par::map_range(n, |i| {
            let mut s = 0.0;
            for (o, &kv) in kernel.iter().enumerate() {
                let j = i as isize + o as isize - reach;
                if j >= 0 && (j as usize) < n {
                    s += kv * bins[j as usize];
                }
            }
            s / norm
        })
    } else {
        bins.iter().map(|b| b / (norm * dx)).collect()
    };
    Ok(DistributionEstimate::from_cumulants(xs, density, cumulants, Provenance::Empirical, resolution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xy_model::{mode_data, Beta};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(beta: f64, sites: usize) -> QuenchSpec {
        QuenchSpec::new(0.5, 1.0, 1.3, 0.6, Beta::new(beta).unwrap(), sites).unwrap()
    }

    /// Brute-force midpoint average over ϑ.
    fn midpoint<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
        (0..n).map(|i| f(FRAC_PI_2 * (i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
    }

    #[test]
    fn closed_form_mean_matches_quadrature() {
        for beta in [0.3, 2.0, 40.0, f64::INFINITY] {
            for m in mode_data(&spec(beta, 12)).unwrap() {
                let direct = midpoint(|t| m.log_factor(t).exp(), 200_000);
                assert_relative_eq!(mean_echo_factor(&m), direct, max_relative = 1e-9);
                assert_relative_eq!(mode_log_mgf(&m, 1.0).unwrap().exp(), direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn mode_moments_match_midpoint_rule() {
        for m in mode_data(&spec(3.0, 10)).unwrap() {
            let mm = mode_moments(&m).unwrap();
            let mean = midpoint(|t| m.log_factor(t), 400_000);
            let mu2 = midpoint(|t| (m.log_factor(t) - mean).powi(2), 400_000);
            let mu3 = midpoint(|t| (m.log_factor(t) - mean).powi(3), 400_000);
            assert_relative_eq!(mm.mean, mean, max_relative = 1e-9);
            assert_relative_eq!(mm.mu2, mu2, max_relative = 1e-8);
            assert_relative_eq!(mm.mu3, mu3, max_relative = 1e-7);
        }
    }

    #[test]
    fn tiny_modes_keep_relative_accuracy() {
        let s = QuenchSpec::new(0.5, 1.0, 0.5 + 1e-6, 1.0, Beta::new(5.0).unwrap(), 8).unwrap();
        for m in mode_data(&s).unwrap() {
            let mm = mode_moments(&m).unwrap();
            // small-rotation limit: X ≈ −A + A cos 2ϑ, variance A²/2
            let a = m.expansion_amplitude();
            assert_relative_eq!(mm.mu2, a * a / 2.0, max_relative = 1e-4);
            assert_relative_eq!(mm.mean, -a, max_relative = 1e-4);
        }
    }

    #[test]
    fn cumulant_order_is_validated() {
        let modes = mode_data(&spec(1.0, 4)).unwrap();
        assert!(cumulants_z(&modes, 0).is_err());
        assert!(cumulants_z(&modes, 5).is_err());
        assert_eq!(cumulants_z(&modes, 2).unwrap().len(), 2);
    }

    #[test]
    fn mgf_derivative_is_mean() {
        let modes = mode_data(&spec(2.0, 16)).unwrap();
        let h = 1e-5;
        let d = (log_mgf(&modes, h).unwrap() - log_mgf(&modes, -h).unwrap()) / (2.0 * h);
        assert_relative_eq!(d, cumulants_z(&modes, 1).unwrap()[0], max_relative = 1e-7);
    }

    #[test]
    fn log_mgf_grows_linearly_with_length() {
        let s = spec(2.0, 2);
        let g = log_mgf_density(&s, 1.0).unwrap();
        for sites in [200, 800] {
            let modes = mode_data(&s.with_sites(sites).unwrap()).unwrap();
            assert_relative_eq!(log_mgf(&modes, 1.0).unwrap() / sites as f64, g, max_relative = 1e-6);
        }
    }

    #[test]
    fn singular_zero_temperature_mode_is_integrable() {
        let m = ModeData::from_parts(1.0, 1.0, 1.0, 0.0, FRAC_PI_2, Beta::INFINITE);
        assert!(m.log_factor_min().is_infinite());
        // X = 2 ln cos ϑ: mean −2 ln 2, variance π²/3
        let mm = mode_moments(&m).unwrap();
        assert_relative_eq!(mm.mean, -2.0 * 2f64.ln(), max_relative = 1e-9);
        assert_relative_eq!(mm.mu2, PI * PI / 3.0, max_relative = 1e-8);
    }

    #[test]
    fn feature_sets() {
        assert_eq!(feature_exponents(1).len(), 4);
        assert_eq!(feature_exponents(2).len(), 14);
        assert_eq!(feature_exponents(3).len(), 34);
        assert_eq!(feature_exponents(5).len(), 20);
        assert_relative_eq!(arcsine_moment(2), 3.0 / 8.0);
    }

    #[test]
    fn raw_cumulant_round_trip() {
        let k = [-0.3, 0.2, 0.05, -0.01];
        let back = cumulants_from_raw(distribution::raw_from_cumulants(k));
        for (a, b) in k.iter().zip(back) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn trivial_quench_is_a_point_mass() {
        let s = QuenchSpec::new(0.5, 1.0, 0.5, 1.0, Beta::new(2.0).unwrap(), 10).unwrap();
        let d = exact_distribution_z(&mode_data(&s).unwrap(), &GridSpec::default()).unwrap();
        assert_eq!(d.point_mass, Some(0.0));
    }

    #[test]
    fn exact_distribution_of_one_mode_matches_change_of_variables() {
        // a single mode: p(x) = (2/π) / |X'(ϑ(x))|
        let m = ModeData::from_parts(1.0, 1.0, 1.0, 0.0, 0.7, Beta::new(1.5).unwrap());
        let d = exact_distribution_z(&[m], &GridSpec::with_points(2048)).unwrap();
        let c = d.numerical_cumulants();
        let mm = mode_moments(&m).unwrap().cumulants();
        for i in 0..4 {
            assert!((c[i] - mm[i]).abs() < 1e-6 * mm[1].max(1e-300).sqrt().max(mm[i].abs()), "{i}: {} {}", c[i], mm[i]);
        }
        assert_relative_eq!(d.integral(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mean_of_factor_bounded_by_extremes(dtheta in -3.0f64..3.0, x in 0.0f64..30.0) {
            let m = ModeData::from_parts(1.0, 1.0, 1.0, 0.0, dtheta, Beta::new(x).unwrap());
            let mean = mean_echo_factor(&m);
            prop_assert!(mean <= 1.0 + 1e-15);
            prop_assert!(mean >= m.log_factor_min().exp() - 1e-15);
            // Jensen: ln of the mean dominates the mean of the log
            let mm = mode_moments(&m).unwrap();
            prop_assert!(mean.ln() >= mm.mean - 1e-12);
        }
    }
}
