//! Small-quench picture: `ln L(t) ≈ Z̄ + Σ_j a_j cos(ω_j t)`, so the
//! infinite-time density of `ln L` is a shifted convolution of arcsine laws
//! (a density of states of a hypercubic tight-binding model).

use crate::distribution::{self, DistributionEstimate, GridSpec, Provenance};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Rule};
use crate::special::{bessel_j0, expint, hankel_j0_coefficients};
use crate::xy_model::ModeData;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Rotation angle above which the second-order picture is flagged as unreliable.
pub const LARGE_ROTATION: f64 = 0.3;

/// Normalization of the oscillation amplitudes.
///
/// Expanding `ln f_k` to second order in the rotation gives
/// `−A + A cos(2Λ¹t)` with `A = (1 − 1/c)Δθ²/2`. `Expansion` uses `A`;
/// `Printed` uses `2A`, the normalization found in some write-ups. The
/// density of states takes the amplitudes as given, so only `Expansion`
/// reproduces the exact distribution. The mean shift `Z̄ = −Σ A` is the same
/// under both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeConvention {
    #[default]
    Expansion,
    Printed,
}

impl AmplitudeConvention {
    /// Multiplier applied to the expansion amplitude `A`.
    pub fn factor(self) -> f64 {
        match self {
            AmplitudeConvention::Expansion => 1.0,
            AmplitudeConvention::Printed => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AmplitudeConvention::Expansion => "expansion",
            AmplitudeConvention::Printed => "printed",
        }
    }
}

impl std::str::FromStr for AmplitudeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expansion" => Ok(AmplitudeConvention::Expansion),
            "printed" => Ok(AmplitudeConvention::Printed),
            _ => Err(Error::InvalidArgument(format!("unknown amplitude convention {s:?}"))),
        }
    }
}

/// Oscillation amplitudes, sorted largest first, with their frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSet {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Label of each oscillation (a momentum, or an eigenstate index).
    pub labels: Vec<f64>,
    pub mean_shift: f64,
    pub convention: AmplitudeConvention,
    /// Largest rotation angle entering the expansion.
    pub max_rotation: f64,
}

impl AmplitudeSet {
    /// Assemble from unsorted parts; zero amplitudes are dropped.
    pub fn new(
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        labels: Vec<f64>,
        mean_shift: f64,
        convention: AmplitudeConvention,
        max_rotation: f64,
    ) -> Result<Self> {
        if amplitudes.len() != frequencies.len() || amplitudes.len() != labels.len() {
            return Err(Error::InvalidArgument("amplitude, frequency and label counts differ".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) || !mean_shift.is_finite() {
            return Err(Error::InvalidArgument("amplitudes must be finite and non-negative".into()));
        }
        let mut idx: Vec<usize> = (0..amplitudes.len()).filter(|&i| amplitudes[i] > 0.0).collect();
        idx.sort_by(|&i, &j| amplitudes[j].total_cmp(&amplitudes[i]).then(i.cmp(&j)));
        Ok(AmplitudeSet {
            amplitudes: idx.iter().map(|&i| amplitudes[i]).collect(),
            frequencies: idx.iter().map(|&i| frequencies[i]).collect(),
            labels: idx.iter().map(|&i| labels[i]).collect(),
            mean_shift,
            convention,
            max_rotation,
        })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Amplitudes `a(k)` and mean shift `Z̄` of the chain's small-quench expansion.
pub fn amplitude_set(modes: &[ModeData], convention: AmplitudeConvention) -> Result<AmplitudeSet> {
    let expansion: Vec<f64> = modes.iter().map(ModeData::expansion_amplitude).collect();
    let max_rotation = modes.iter().map(|m| m.dtheta_wrapped().abs()).fold(0.0, f64::max);
    if max_rotation > LARGE_ROTATION {
        log::warn!("largest Bogoliubov rotation {max_rotation:.3} exceeds {LARGE_ROTATION}; small-quench expansion is unreliable");
    }
    AmplitudeSet::new(
        expansion.iter().map(|a| a * convention.factor()).collect(),
        modes.iter().map(|m| 2.0 * m.lambda1).collect(),
        modes.iter().map(|m| m.k).collect(),
        -expansion.iter().sum::<f64>(),
        convention,
        max_rotation,
    )
}

/// Arcsine law of `a cos ϑ`, `ϑ` uniform: `1/(π√(a² − x²))` on `|x| < a`.
pub fn arcsine_density(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("arcsine amplitude must be positive, got {a}")));
    }
    Ok(if x.abs() < a { 1.0 / (PI * (a * a - x * x).sqrt()) } else { 0.0 })
}

/// Fraction of `Σ a²` that the kept amplitudes must carry.
pub const N_MAX_CAPTURE: f64 = 1e-3;

/// Smallest number of leading amplitudes whose discarded tail carries less
/// than 0.1% of `Σ a_j²`.
pub fn auto_n_max(set: &AmplitudeSet) -> usize {
    let total: f64 = set.amplitudes.iter().map(|a| a * a).sum();
    let mut tail = total;
    for (n, a) in set.amplitudes.iter().enumerate() {
        if tail < N_MAX_CAPTURE * total {
            return n;
        }
        tail -= a * a;
    }
    set.len()
}

/// `e^{iuZ̄} ∏_{j<n} J₀(a_j u)`.
pub fn dos_characteristic(set: &AmplitudeSet, n: usize, u: f64) -> Complex64 {
    let n = n.min(set.len());
    let prod: f64 = set.amplitudes[..n].iter().map(|a| bessel_j0(a * u)).product();
    Complex64::from_polar(prod, u * set.mean_shift)
}

/// Largest number of arcsine factors handled by pointwise inversion with the
/// asymptotic tail correction.
const TAIL_MAX_FACTORS: usize = 8;
const TAIL_TERMS: usize = 12;

/// Density of `Z̄ + Σ_{j<n} a_j cos ϑ_j` with independent uniform phases.
///
/// `n_max = None` picks [`auto_n_max`]. With a positive grid resolution the
/// density is smoothed by the Gaussian kernel like the exact route; with
/// zero resolution it is evaluated pointwise.
pub fn dos_distribution(set: &AmplitudeSet, n_max: Option<usize>, grid: &GridSpec) -> Result<DistributionEstimate> {
    let n = n_max.unwrap_or_else(|| auto_n_max(set)).min(set.len());
    if n == 0 {
        return Ok(DistributionEstimate::point_mass(set.mean_shift, Provenance::Convolution));
    }
    let a = &set.amplitudes[..n];
    let sum_a: f64 = a.iter().sum();
    let k2: f64 = a.iter().map(|x| 0.5 * x * x).sum();
    let k4: f64 = a.iter().map(|x| -0.375 * x.powi(4)).sum();
    let cumulants = [set.mean_shift, k2, 0.0, k4];
    let support = (set.mean_shift - sum_a, set.mean_shift + sum_a);
    let (xs, resolution) = grid.build(set.mean_shift, k2.sqrt(), support)?;
    let a_min = a[n - 1];
    let cf = |u: f64| dos_characteristic(set, n, u);

    let density = if resolution > 0.0 {
        let d = distribution::invert_trapezoid(&xs, support, resolution, cf, f64::INFINITY)?;
        distribution::finalize_density(&xs, d)?
    } else if n <= TAIL_MAX_FACTORS {
        let d = pointwise_with_tail(a, set.mean_shift, &xs)?;
        check_support_coverage(&xs, &d, support)?;
        d
    } else {
        let d = distribution::invert_trapezoid(&xs, support, 0.0, cf, 1e6 / a_min)?;
        check_support_coverage(&xs, &d, support)?;
        d
    };
    Ok(DistributionEstimate::from_cumulants(xs, density, cumulants, Provenance::Convolution, resolution))
}

fn check_support_coverage(xs: &[f64], density: &[f64], support: (f64, f64)) -> Result<()> {
    if xs[0] > support.0 || *xs.last().expect("non-empty grid") < support.1 {
        return Err(Error::GridTooNarrow { mass: distribution::trapezoid(xs, density, |_| 1.0) });
    }
    Ok(())
}

/// Pointwise inversion: Gauss–Legendre on `[0, U]` plus the integral of the
/// Hankel expansion of `∏J₀` over `[U, ∞)` in terms of `E_ν`.
fn pointwise_with_tail(a: &[f64], shift: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let a_min = a[n - 1];
    let u_cut = 40.0 / a_min;
    let sum_a: f64 = a.iter().sum();
    let y_max = xs.iter().map(|x| (x - shift).abs()).fold(0.0, f64::max);
    let width = 1.5 / (sum_a + y_max);
    let panels_n = (u_cut / width).ceil() as usize;
    let h = u_cut / panels_n as f64;
    let panels: Vec<(f64, f64)> = (0..panels_n).map(|i| (i as f64 * h, (i + 1) as f64 * h)).collect();
    let rule = Rule::composite(&panels, 10);
    let prod: Vec<f64> = rule.nodes.iter().map(|&u| a.iter().map(|aj| bessel_j0(aj * u)).product()).collect();

    // tail coefficients B_{σ,m} and frequencies Ω_σ = σ·a
    let hankel = hankel_j0_coefficients(TAIL_TERMS + 1);
    let prefactor = 0.5f64.powi(n as i32) * (2.0 / PI).powf(0.5 * n as f64) / a.iter().product::<f64>().sqrt();
    let mut tails: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let sigma: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let omega: f64 = sigma.iter().zip(a).map(|(s, aj)| s * aj).sum();
        let mut series = vec![Complex64::new(0.0, 0.0); TAIL_TERMS + 1];
        series[0] = Complex64::new(1.0, 0.0);
        for (s, &aj) in sigma.iter().zip(a) {
            let factor: Vec<Complex64> = (0..=TAIL_TERMS)
                .map(|k| Complex64::new(0.0, *s).powi(k as i32) * hankel[k] / aj.powi(k as i32))
                .collect();
            let mut next = vec![Complex64::new(0.0, 0.0); TAIL_TERMS + 1];
            for (i, si) in series.iter().enumerate() {
                for (k, fk) in factor.iter().enumerate().take(TAIL_TERMS + 1 - i) {
                    next[i + k] += si * fk;
                }
            }
            series = next;
        }
        let sigma_sum: f64 = sigma.iter().sum();
        let phase = Complex64::from_polar(prefactor, -FRAC_PI_2 * 0.5 * sigma_sum);
        tails.push((omega, series.into_iter().map(|c| c * phase).collect()));
    }

    let out = crate::par::map(xs, |&x| {
        let y = x - shift;
        let body: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .zip(&prod)
            .map(|((&u, &w), &p)| w * p * (u * y).cos())
            .sum();
        let mut tail = Complex64::new(0.0, 0.0);
        for (omega, coeffs) in &tails {
            let mut w = omega - y;
            for (m, b) in coeffs.iter().enumerate() {
                let nu = 0.5 * n as f64 + m as f64;
                if w == 0.0 && nu <= 1.0 {
                    w = 1e-12;
                }
                let e = expint(nu, Complex64::new(0.0, -w * u_cut));
                tail += b * u_cut.powf(1.0 - nu) * e;
            }
        }
        (body + tail.re) / PI
    });
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericAccuracy("non-finite density from pointwise inversion".into()));
    }
    Ok(out)
}

/// Outcome of matching the amplitude normalization against a direct
/// expansion of `ln f_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConventionPin {
    pub convention: AmplitudeConvention,
    /// Numerically extracted `cos(2φ)` coefficient of `ln f_k` divided by
    /// `(1 − 1/c)Δθ²` in the small-rotation limit.
    pub coefficient: f64,
    /// Relative mismatch between the chosen convention and `coefficient`.
    pub mismatch: f64,
    pub probe_k: f64,
}

/// Extract the second-order oscillation coefficient of `ln f_k` for the
/// strongest mode by shrinking its rotation, and pick the convention whose
/// `a(k)` matches it.
pub fn pin_amplitude_convention(modes: &[ModeData]) -> Result<ConventionPin> {
    let probe = modes
        .iter()
        .filter(|m| m.sech < 1.0 && m.dtheta_wrapped() != 0.0)
        .max_by(|x, y| x.expansion_amplitude().total_cmp(&y.expansion_amplitude()))
        .ok_or_else(|| Error::InvalidArgument("no mode with a non-zero quench amplitude".into()))?;
    let dtheta = probe.dtheta_wrapped();
    let ratio = |eta: f64| -> Result<f64> {
        let m = probe.with_rotation(eta * dtheta);
        // ⟨X cos 2φ⟩ over a quarter period equals A/2 for X = −A + A cos 2φ
        let r = integrate(|t| [m.log_factor(t) * (2.0 * t).cos()], 0.0, FRAC_PI_2, 1e-14, 4096)?;
        let coefficient = 2.0 * r.value[0] / FRAC_PI_2;
        Ok(coefficient / ((1.0 - m.sech) * (eta * dtheta).powi(2)))
    };
    let eta = 1e-2;
    let coefficient = (4.0 * ratio(eta / 2.0)? - ratio(eta)?) / 3.0;
    let candidates = [AmplitudeConvention::Expansion, AmplitudeConvention::Printed];
    let (convention, mismatch) = candidates
        .iter()
        .map(|&c| (c, ((0.5 * c.factor()) / coefficient - 1.0).abs()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("two candidates");
    Ok(ConventionPin { convention, coefficient, mismatch, probe_k: probe.k })
}
