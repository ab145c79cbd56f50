use proptest::prelude::*;
use quench_echo::distribution::normal_quantile;
use quench_echo::echo::log_echo_at;
use quench_echo::torus_stats::{
    cumulants_z, empirical_distribution_z, empirical_moments, exact_distribution_z, log_mgf, mode_log_mgf,
};
use quench_echo::{mode_data, Beta, GridSpec, QuenchSpec};

fn spec(h0: f64, g0: f64, h1: f64, g1: f64, beta: f64, sites: usize) -> QuenchSpec {
    QuenchSpec::new(h0, g0, h1, g1, Beta::new(beta).unwrap(), sites).unwrap()
}

// deep in the paramagnetic phase on both sides of the quench
fn off_critical(sites: usize) -> QuenchSpec {
    spec(0.5, 1.0, 0.8, 1.0, 40.0, sites)
}

#[test]
fn cumulants_are_additive_over_modes() {
    let modes = mode_data(&spec(0.3, 0.7, 1.4, 0.4, 3.0, 24)).unwrap();
    let whole = cumulants_z(&modes, 4).unwrap();
    let mut parts = [0.0; 4];
    for m in &modes {
        for (p, v) in parts.iter_mut().zip(cumulants_z(std::slice::from_ref(m), 4).unwrap()) {
            *p += v;
        }
    }
    for n in 0..4 {
        assert!((whole[n] - parts[n]).abs() <= 1e-12 * whole[n].abs().max(1e-300), "κ{}", n + 1);
    }
}

#[test]
fn exact_density_is_normalized_and_consistent() {
    let modes = mode_data(&spec(0.5, 1.0, 1.5, 0.6, 2.0, 12)).unwrap();
    let d = exact_distribution_z(&modes, &GridSpec::with_points(2048)).unwrap();
    assert!((d.integral() - 1.0).abs() < 1e-6);
    let reported = d.cumulants();
    let numeric = d.numerical_cumulants();
    assert!((numeric[0] - reported[0]).abs() < 1e-4 * reported[0].abs());
    assert!((numeric[1] - reported[1]).abs() < 1e-4 * reported[1]);
    let direct = cumulants_z(&modes, 4).unwrap();
    for n in 0..4 {
        let scale = reported[1].powf(0.5 * (n + 1) as f64).max(reported[n].abs());
        assert!((reported[n] - direct[n]).abs() < 1e-3 * scale, "κ{}: {} vs {}", n + 1, reported[n], direct[n]);
    }
}

#[test]
fn off_critical_log_echo_is_gaussian() {
    let modes = mode_data(&off_critical(400)).unwrap();
    let d = exact_distribution_z(&modes, &GridSpec::with_points(2048)).unwrap();
    let sd = (d.variance + d.resolution * d.resolution).sqrt();
    let worst = (1..20)
        .map(|i| {
            let p = i as f64 / 20.0;
            ((d.quantile(p) - d.mean) / sd - normal_quantile(p)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 5e-2, "quantile deviation {worst}");
}

#[test]
fn higher_cumulants_shrink_at_clt_rates() {
    let shape = |sites| {
        let k = cumulants_z(&mode_data(&off_critical(sites)).unwrap(), 4).unwrap();
        (k[2] / k[1].powf(1.5), k[3] / (k[1] * k[1]))
    };
    let (s1, k1) = shape(200);
    let (s2, k2) = shape(800);
    let (s3, k3) = shape(3200);
    for (a, b) in [(s1, s2), (s2, s3)] {
        let r = a.abs() / b.abs();
        assert!((1.4..=2.8).contains(&r), "skewness factor {r}");
    }
    for (a, b) in [(k1, k2), (k2, k3)] {
        let r = a.abs() / b.abs();
        assert!((2.5..=6.5).contains(&r), "kurtosis factor {r}");
    }
}

#[test]
fn log_mgf_is_extensive() {
    for lambda in [0.5, 1.0, 2.0] {
        let a = log_mgf(&mode_data(&off_critical(400)).unwrap(), lambda).unwrap();
        let b = log_mgf(&mode_data(&off_critical(800)).unwrap(), lambda).unwrap();
        assert!((b / a - 2.0).abs() < 0.02, "λ={lambda}: ratio {}", b / a);
    }
}

#[test]
fn random_and_irrational_grid_times_agree() {
    let modes = mode_data(&spec(0.5, 1.0, 1.5, 0.6, 2.0, 8)).unwrap();
    let n = 100_000;
    let random = empirical_moments(&modes, 1e5, n, 11).unwrap();
    let step = std::f64::consts::SQRT_2 * (1e5 / n as f64);
    let mut grid = [0.0; 4];
    for i in 0..n {
        let z = log_echo_at(&modes, i as f64 * step);
        for (p, g) in grid.iter_mut().enumerate() {
            *g += z.powi(p as i32 + 1) / n as f64;
        }
    }
    for p in 0..4 {
        let tol = 5.0 * std::f64::consts::SQRT_2 * random.raw_standard_error[p];
        assert!((random.raw[p] - grid[p]).abs() < tol, "moment {}: {} vs {}", p + 1, random.raw[p], grid[p]);
    }
}

#[test]
fn single_sample_is_a_flagged_point_mass() {
    let modes = mode_data(&spec(0.5, 1.0, 1.5, 0.6, 2.0, 4)).unwrap();
    let d = empirical_distribution_z(&modes, 10.0, 1, 5, &GridSpec::default()).unwrap();
    assert!(d.is_degenerate());
    assert!(d.grid.is_empty());
}

fn spec_strategy() -> impl Strategy<Value = QuenchSpec> {
    (-2.0..2.0f64, 0.05..1.5f64, -2.0..2.0f64, 0.05..1.5f64, 0.0..20.0f64, 1usize..12)
        .prop_map(|(h0, g0, h1, g1, beta, half)| spec(h0, g0, h1, g1, beta, 2 * half))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mgf_factor_is_at_most_one(spec in spec_strategy(), lambda in 0.0..4.0f64) {
        for m in mode_data(&spec).unwrap() {
            let g = mode_log_mgf(&m, lambda).unwrap();
            prop_assert!(g <= 1e-15);
            prop_assert_eq!(mode_log_mgf(&m, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn variance_is_nonnegative(spec in spec_strategy()) {
        let k = cumulants_z(&mode_data(&spec).unwrap(), 2).unwrap();
        prop_assert!(k[1] >= 0.0);
        prop_assert!(k[0] <= 0.0);
    }
}
