use crate::args::{Couplings, DistArgs, EchoArgs, FidelityArgs, GenericArgs, Method, SweepArgs};
use crate::{input, UsageError};
use anyhow::bail;
use clap::ValueEnum;
use quench_echo::distribution::PeakReport;
use quench_echo::echo::{sample_series, uniform_times};
use quench_echo::generic_quench::{
    generic_logecho_distribution, ground_state, random_gue, spectral_quench_exact, spectral_quench_perturbative,
};
use quench_echo::small_quench::{amplitude_set, dos_distribution, AmplitudeConvention};
use quench_echo::thermal_fidelity::gibbs_fidelity;
use quench_echo::torus_stats::{
    cumulants_z, empirical_distribution_z, empirical_moments, exact_distribution_z, mean_echo_closed_form,
    EmpiricalMoments,
};
use quench_echo::{mode_data, peak_structure, Beta, DistributionEstimate, GridSpec, Provenance, QuenchSpec, Resolution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const EMPIRICAL_HORIZON: f64 = 1e4;
const EMPIRICAL_SAMPLES: usize = 100_000;
const GENERIC_STRENGTH: f64 = 1e-3;

/// Header shared by every JSON document.
#[derive(Serialize)]
struct Envelope<C, R> {
    version: &'static str,
    command: &'static str,
    amplitude_convention: AmplitudeConvention,
    config: C,
    #[serde(flatten)]
    result: R,
}

fn to_json<C: Serialize, R: Serialize>(
    command: &'static str,
    convention: AmplitudeConvention,
    config: C,
    result: R,
) -> anyhow::Result<String> {
    let doc = Envelope { version: VERSION, command, amplitude_convention: convention, config, result };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn quench_spec(c: &Couplings, sites: usize) -> anyhow::Result<QuenchSpec> {
    Ok(QuenchSpec::new(c.h0, c.gamma0, c.h1, c.gamma1, c.beta, sites)?)
}

#[derive(Serialize)]
struct EchoConfig<'a> {
    #[serde(flatten)]
    couplings: &'a Couplings,
    #[serde(rename = "L")]
    sites: usize,
    horizon: f64,
    grid: usize,
}

pub fn echo(args: &EchoArgs) -> anyhow::Result<String> {
    let spec = quench_spec(&args.couplings, args.sites)?;
    let series = sample_series(&mode_data(&spec)?, &uniform_times(args.horizon, args.grid)?)?;
    let config = EchoConfig { couplings: &args.couplings, sites: args.sites, horizon: args.horizon, grid: args.grid };
    let mut out = String::new();
    writeln!(out, "# quench-echo {VERSION}")?;
    writeln!(out, "# amplitude_convention {}", AmplitudeConvention::default().name())?;
    writeln!(out, "# config {}", serde_json::to_string(&config)?)?;
    writeln!(out, "t,L,lnL")?;
    for ((t, l), z) in series.times.iter().zip(&series.echo).zip(&series.log_echo) {
        writeln!(out, "{t},{l},{z}")?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct DistConfig<'a> {
    #[serde(flatten)]
    couplings: &'a Couplings,
    #[serde(rename = "L")]
    sites: usize,
    method: Method,
    grid: usize,
    /// `null` selects the automatic width.
    resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
}

#[derive(Serialize)]
struct Moments {
    mean: f64,
    variance: f64,
    skewness: f64,
    excess_kurtosis: f64,
}

#[derive(Serialize)]
struct DistResult {
    provenance: Provenance,
    moments: Moments,
    point_mass: Option<f64>,
    peaks: Option<PeakReport>,
    resolution: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_moments: Option<EmpiricalMoments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_rotation: Option<f64>,
    grid: Vec<f64>,
    density: Vec<f64>,
}

fn dist_result(d: DistributionEstimate) -> anyhow::Result<DistResult> {
    let peaks = if d.is_degenerate() { None } else { Some(peak_structure(&d)?) };
    Ok(DistResult {
        provenance: d.provenance,
        moments: Moments {
            mean: d.mean,
            variance: d.variance,
            skewness: d.skewness,
            excess_kurtosis: d.excess_kurtosis,
        },
        point_mass: d.point_mass,
        peaks,
        resolution: d.resolution,
        empirical_moments: None,
        amplitudes_used: None,
        max_rotation: None,
        grid: d.grid,
        density: d.density,
    })
}

fn reject(method: Method, flags: &[(&str, bool)]) -> anyhow::Result<()> {
    for (name, given) in flags {
        if *given {
            let method = method.to_possible_value().expect("no skipped variants");
            bail!(UsageError(format!("--{name} does not apply to method {}", method.get_name())));
        }
    }
    Ok(())
}

pub fn dist(args: &DistArgs) -> anyhow::Result<String> {
    let spec = quench_spec(&args.couplings, args.sites)?;
    let modes = mode_data(&spec)?;
    let resolution = match args.resolution {
        Some(r) => Resolution::Fixed(r),
        None => Resolution::Auto,
    };
    let grid = GridSpec::with_points(args.grid).resolution(resolution);
    let mut config = DistConfig {
        couplings: &args.couplings,
        sites: args.sites,
        method: args.method,
        grid: args.grid,
        resolution: args.resolution,
        horizon: None,
        samples: None,
        seed: None,
        n_max: None,
    };
    let mut convention = AmplitudeConvention::default();
    let result = match args.method {
        Method::Exact => {
            reject(
                args.method,
                &[
                    ("horizon", args.horizon.is_some()),
                    ("samples", args.samples.is_some()),
                    ("seed", args.seed.is_some()),
                    ("convention", args.convention.is_some()),
                    ("n-max", args.n_max.is_some()),
                ],
            )?;
            dist_result(exact_distribution_z(&modes, &grid)?)?
        }
        Method::Empirical => {
            reject(args.method, &[("convention", args.convention.is_some()), ("n-max", args.n_max.is_some())])?;
            let horizon = args.horizon.unwrap_or(EMPIRICAL_HORIZON);
            let samples = args.samples.unwrap_or(EMPIRICAL_SAMPLES);
            let seed = args.seed.unwrap_or(0);
            (config.horizon, config.samples, config.seed) = (Some(horizon), Some(samples), Some(seed));
            let mut r = dist_result(empirical_distribution_z(&modes, horizon, samples, seed, &grid)?)?;
            if samples >= 2 {
                r.empirical_moments = Some(empirical_moments(&modes, horizon, samples, seed)?);
            }
            r
        }
        Method::SmallQuench => {
            reject(
                args.method,
                &[
                    ("horizon", args.horizon.is_some()),
                    ("samples", args.samples.is_some()),
                    ("seed", args.seed.is_some()),
                ],
            )?;
            convention = args.convention.map(Into::into).unwrap_or_default();
            let set = amplitude_set(&modes, convention)?;
            let n = args.n_max.unwrap_or_else(|| quench_echo::small_quench::auto_n_max(&set)).min(set.len());
            config.n_max = Some(n);
            let mut r = dist_result(dos_distribution(&set, Some(n), &grid)?)?;
            r.amplitudes_used = Some(n);
            r.max_rotation = Some(set.max_rotation);
            r
        }
    };
    to_json("dist", convention, config, result)
}

#[derive(Serialize)]
struct SweepConfig<'a> {
    #[serde(flatten)]
    couplings: &'a Couplings,
    #[serde(rename = "L")]
    sites: &'a [usize],
}

#[derive(Serialize)]
struct SweepRow {
    #[serde(rename = "L")]
    sites: usize,
    cumulants: Vec<f64>,
    per_site: Vec<f64>,
    skewness: f64,
    excess_kurtosis: f64,
}

#[derive(Serialize)]
struct SweepResult {
    rows: Vec<SweepRow>,
    /// `(max − min)/|mean|` of `κ_n/L` across the sweep, n = 1..4.
    per_site_spread: Vec<f64>,
}

fn parse_sites(s: &str) -> anyhow::Result<Vec<usize>> {
    let sites: Vec<usize> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| UsageError(format!("bad chain length {t:?}"))))
        .collect::<Result<_, _>>()?;
    if sites.is_empty() {
        bail!(UsageError("empty sweep list".into()));
    }
    Ok(sites)
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<String> {
    let sites = parse_sites(&args.sites)?;
    let mut rows = Vec::with_capacity(sites.len());
    for &l in &sites {
        let k = cumulants_z(&mode_data(&quench_spec(&args.couplings, l)?)?, 4)?;
        let shape = |n: usize| if k[1] > 0.0 { k[n] / k[1].powf(0.5 * n as f64 + 0.5) } else { 0.0 };
        rows.push(SweepRow {
            sites: l,
            per_site: k.iter().map(|v| v / l as f64).collect(),
            skewness: shape(2),
            excess_kurtosis: shape(3),
            cumulants: k,
        });
    }
    let per_site_spread = (0..4)
        .map(|n| {
            let v: Vec<f64> = rows.iter().map(|r| r.per_site[n]).collect();
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            if mean == 0.0 {
                0.0
            } else {
                (hi - lo) / mean.abs()
            }
        })
        .collect();
    let config = SweepConfig { couplings: &args.couplings, sites: &sites };
    to_json("sweep", AmplitudeConvention::default(), config, SweepResult { rows, per_site_spread })
}

#[derive(Serialize)]
struct FidelityConfig<'a> {
    #[serde(flatten)]
    couplings: &'a Couplings,
    #[serde(rename = "L")]
    sites: usize,
}

#[derive(Serialize)]
struct BetaScan {
    betas: Vec<Beta>,
    fidelities: Vec<f64>,
    /// Whether `F` decreases along the scan towards the pure-state value.
    monotone: bool,
}

#[derive(Serialize)]
struct FidelityResult {
    fidelity: f64,
    log_fidelity: f64,
    fidelity_squared: f64,
    mean_echo: f64,
    pure_overlap: f64,
    beta_scan: BetaScan,
    momenta: Vec<f64>,
    per_mode: Vec<f64>,
}

pub fn fidelity(args: &FidelityArgs) -> anyhow::Result<String> {
    let spec = quench_spec(&args.couplings, args.sites)?;
    let report = gibbs_fidelity(&spec)?;
    let pure = gibbs_fidelity(&QuenchSpec { beta: Beta::INFINITE, ..spec.clone() })?;
    let mut betas: Vec<Beta> = if spec.beta.is_infinite() {
        Vec::new()
    } else {
        (-2..=2).map(|j| Beta::new(spec.beta.value() * 2f64.powi(j))).collect::<Result<_, _>>()?
    };
    betas.push(Beta::INFINITE);
    let fidelities = betas
        .iter()
        .map(|&b| gibbs_fidelity(&QuenchSpec { beta: b, ..spec.clone() }).map(|r| r.fidelity))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = fidelities.windows(2).all(|w| w[1] <= w[0]);
    if !monotone {
        log::warn!("fidelity is not monotone in beta for this quench");
    }
    let result = FidelityResult {
        fidelity: report.fidelity,
        log_fidelity: report.log_fidelity,
        fidelity_squared: report.fidelity * report.fidelity,
        mean_echo: mean_echo_closed_form(&mode_data(&spec)?),
        pure_overlap: pure.fidelity,
        beta_scan: BetaScan { betas, fidelities, monotone },
        momenta: report.momenta,
        per_mode: report.per_mode,
    };
    to_json("fidelity", AmplitudeConvention::default(), FidelityConfig { couplings: &args.couplings, sites: args.sites }, result)
}

#[derive(Serialize)]
struct GenericConfig {
    input: Option<String>,
    dim: usize,
    strength: f64,
    seed: Option<u64>,
    grid: Option<usize>,
}

#[derive(Serialize)]
struct GenericResult {
    chi: f64,
    kappa2: f64,
    kappa2_bound: f64,
    bound_holds: bool,
    mean_echo: f64,
    mean_log_echo: f64,
    /// Largest deviation of the perturbative weights from exact diagonalization of `H₀ + εV`.
    exact_weight_error: f64,
    exact_mean_echo: f64,
    energies: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distribution: Option<DistResult>,
}

pub fn generic(args: &GenericArgs) -> anyhow::Result<String> {
    let (h0, v, strength, config) = match &args.input {
        Some(path) => {
            if args.seed.is_some() {
                bail!(UsageError("--seed does not apply to an input file".into()));
            }
            let inp = input::read(path)?;
            let strength = args.strength.or(inp.strength).unwrap_or(GENERIC_STRENGTH);
            let dim = inp.h0.nrows();
            if inp.v.shape() != inp.h0.shape() {
                bail!(UsageError("h0 and v differ in shape".into()));
            }
            let config =
                GenericConfig { input: Some(path.display().to_string()), dim, strength, seed: None, grid: args.grid };
            (inp.h0, inp.v, strength, config)
        }
        None => {
            if args.dim < 2 {
                bail!(UsageError(format!("dimension must be at least 2, got {}", args.dim)));
            }
            let seed = args.seed.unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h0 = random_gue(args.dim, &mut rng);
            let v = random_gue(args.dim, &mut rng);
            let strength = args.strength.unwrap_or(GENERIC_STRENGTH);
            let config = GenericConfig { input: None, dim: args.dim, strength, seed: Some(seed), grid: args.grid };
            (h0, v, strength, config)
        }
    };
    let pert = spectral_quench_perturbative(&h0, &v, strength)?;
    let psi0 = ground_state(&h0)?;
    let h1 = &h0 + v.map(|z| z * strength);
    let exact = spectral_quench_exact(&h1, &psi0)?;
    let exact_weight_error =
        pert.weights.iter().zip(&exact.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let chi = pert.chi.unwrap_or(0.0);
    let kappa2 = pert.kappa2();
    let distribution = match args.grid {
        Some(points) => Some(dist_result(generic_logecho_distribution(&pert, None, &GridSpec::with_points(points))?)?),
        None => None,
    };
    let result = GenericResult {
        chi,
        kappa2,
        kappa2_bound: 2.0 * chi,
        bound_holds: kappa2 <= 2.0 * chi,
        mean_echo: pert.mean_echo(),
        mean_log_echo: pert.mean_log_echo(),
        exact_weight_error,
        exact_mean_echo: exact.mean_echo(),
        energies: pert.energies.clone(),
        weights: pert.weights.clone(),
        distribution,
    };
    to_json("generic", AmplitudeConvention::default(), config, result)
}
