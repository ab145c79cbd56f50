use quench_echo::generic_quench::{generic_logecho_distribution, SpectralQuench};
use quench_echo::quadrature::integrate_scalar;
use quench_echo::small_quench::{arcsine_density, dos_distribution, AmplitudeConvention, AmplitudeSet};
use quench_echo::{peak_structure, GridSpec, Resolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn set(amplitudes: &[f64], shift: f64) -> AmplitudeSet {
    let n = amplitudes.len();
    let freqs = (1..=n).map(|j| (j as f64).sqrt()).collect();
    let labels = (0..n).map(|j| j as f64).collect();
    AmplitudeSet::new(amplitudes.to_vec(), freqs, labels, shift, AmplitudeConvention::Expansion, 0.0).unwrap()
}

/// Density of `a₁cos ϑ₁ + a₂cos ϑ₂` by direct convolution of two arcsine laws.
fn two_term_density(a1: f64, a2: f64, x: f64) -> f64 {
    let lo = (x - a2).max(-a1);
    let hi = (x + a2).min(a1);
    if lo >= hi {
        return 0.0;
    }
    // u = c + r sin s maps the window onto [−π/2, π/2]; the Jacobian cancels
    // the inverse-square-root edge of whichever factor is singular there
    let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let inner = |s: f64| {
        let u = c + r * s.sin();
        let p1 = (a1 * a1 - u * u).max(0.0);
        let p2 = (a2 * a2 - (x - u).powi(2)).max(0.0);
        if p1 == 0.0 || p2 == 0.0 {
            return 0.0;
        }
        r * s.cos() / (p1 * p2).sqrt()
    };
    integrate_scalar(inner, -PI / 2.0, PI / 2.0, 1e-10).unwrap() / (PI * PI)
}

#[test]
fn two_amplitudes_match_direct_convolution() {
    let (a1, a2) = (1.0, 0.6);
    let d = dos_distribution(
        &set(&[a1, a2], -0.2),
        None,
        &GridSpec::with_range(-2.0, 1.6, 361).resolution(Resolution::Fixed(0.0)),
    )
    .unwrap();
    let singular = [-a1 - a2, -(a1 - a2), a1 - a2, a1 + a2];
    let mut checked = 0;
    for (&x, &p) in d.grid.iter().zip(&d.density) {
        let y = x + 0.2;
        if singular.iter().any(|s| (y - s).abs() < 0.05) {
            continue;
        }
        let oracle = two_term_density(a1, a2, y);
        assert!((p - oracle).abs() < 1e-6, "x={x}: {p} vs {oracle}");
        checked += 1;
    }
    assert!(checked > 250);
}

#[test]
fn two_amplitudes_have_log_peaks_at_inner_edges() {
    let d = dos_distribution(&set(&[1.0, 0.6], 0.0), None, &GridSpec::with_points(2001)).unwrap();
    let peaks = peak_structure(&d).unwrap();
    assert_eq!(peaks.count, 2);
    for loc in peaks.locations {
        assert!((loc.abs() - 0.4).abs() < 0.03, "peak at {loc}");
    }
}

#[test]
fn many_equal_amplitudes_look_gaussian() {
    let d = dos_distribution(&set(&[0.1; 10], -0.05), None, &GridSpec::with_points(1024).resolution(Resolution::Fixed(0.0)))
        .unwrap();
    assert!(d.gaussian_sup_error() < 0.05, "{}", d.gaussian_sup_error());
    assert!((d.variance - 10.0 * 0.01 / 2.0).abs() < 1e-15);
}

#[test]
fn arcsine_law_normalization_and_variance() {
    let a = 0.37;
    // substitute x = a sin s to remove the edge singularities
    let mass = integrate_scalar(|s| arcsine_density(a, a * s.sin()).unwrap() * a * s.cos(), -PI / 2.0, PI / 2.0, 1e-13)
        .unwrap();
    let var = integrate_scalar(
        |s| {
            let x = a * s.sin();
            x * x * arcsine_density(a, x).unwrap() * a * s.cos()
        },
        -PI / 2.0,
        PI / 2.0,
        1e-13,
    )
    .unwrap();
    assert!((mass - 1.0).abs() < 1e-12);
    assert!((var - a * a / 2.0).abs() < 1e-12);
}

fn weights_quench(mut weights: Vec<f64>, rng: &mut ChaCha8Rng) -> SpectralQuench {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut energies: Vec<f64> = (0..weights.len()).map(|i| i as f64 + 0.3 * rng.random::<f64>()).collect();
    energies.sort_by(f64::total_cmp);
    SpectralQuench { energies, weights, chi: None }
}

#[test]
fn fifty_comparable_weights_are_nearly_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut w: Vec<f64> = (0..50).map(|_| 0.002 + 0.002 * rng.random::<f64>()).collect();
    w.insert(0, 1.0 - w.iter().sum::<f64>());
    let sq = weights_quench(w, &mut rng);
    let d = generic_logecho_distribution(&sq, None, &GridSpec::with_points(2048)).unwrap();
    let k = d.numerical_cumulants();
    let skew = k[2] / k[1].powf(1.5);
    assert!(skew.abs() < 0.15, "skewness {skew}");
}

#[test]
fn two_comparable_weights_give_double_peak() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sq = weights_quench(vec![0.9, 0.055, 0.045], &mut rng);
    let d = generic_logecho_distribution(&sq, None, &GridSpec::with_points(2001)).unwrap();
    let peaks = peak_structure(&d).unwrap();
    assert_eq!(peaks.count, 2);
    let gap = 2.0 * (0.055 - 0.045);
    let zbar = sq.mean_log_echo();
    for loc in peaks.locations {
        assert!(((loc - zbar).abs() - gap).abs() < 0.02 * 0.2, "peak at {loc}");
    }
}

#[test]
fn mean_shift_tracks_exact_first_cumulant() {
    use quench_echo::small_quench::amplitude_set;
    use quench_echo::torus_stats::cumulants_z;
    use quench_echo::{mode_data, Beta, QuenchSpec};
    let gap = |delta: f64| {
        let spec = QuenchSpec::new(0.5, 1.0, 0.5 + delta, 1.0, Beta::new(40.0).unwrap(), 40).unwrap();
        let modes = mode_data(&spec).unwrap();
        let set = amplitude_set(&modes, AmplitudeConvention::Expansion).unwrap();
        (set.mean_shift - cumulants_z(&modes, 1).unwrap()[0]).abs()
    };
    let g: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&d| gap(d)).collect();
    for w in g.windows(2) {
        let r = w[0] / w[1];
        assert!((8.0..=32.0).contains(&r), "discrepancy ratio {r}");
    }
}
