use clap::{Args, Parser, Subcommand, ValueEnum};
use quench_echo::small_quench::AmplitudeConvention;
use quench_echo::Beta;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "quench-echo", version, about = "Loschmidt echo statistics of the quenched XY chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time series t, L(t), ln L(t) as CSV.
    Echo(EchoArgs),
    /// Infinite-time density of ln L as JSON.
    Dist(DistArgs),
    /// Cumulants of ln L per site over a list of chain lengths.
    Sweep(SweepArgs),
    /// Uhlmann fidelity of the initial and final Gibbs states.
    Fidelity(FidelityArgs),
    /// Spectral quench of a generic Hamiltonian.
    Generic(GenericArgs),
}

fn parse_beta(s: &str) -> Result<Beta, String> {
    s.parse().map_err(|e: quench_echo::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Couplings {
    #[arg(long, allow_negative_numbers = true)]
    pub h0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub h1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma1: f64,
    /// Inverse temperature; `inf` for the ground state.
    #[arg(long, value_parser = parse_beta)]
    pub beta: Beta,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EchoArgs {
    #[command(flatten)]
    pub couplings: Couplings,
    #[arg(long = "L")]
    pub sites: usize,
    /// Last sampled time.
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    /// Number of equally spaced times in [0, horizon].
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Empirical,
    SmallQuench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Expansion,
    Printed,
}

impl From<Convention> for AmplitudeConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Expansion => AmplitudeConvention::Expansion,
            Convention::Printed => AmplitudeConvention::Printed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub couplings: Couplings,
    #[arg(long = "L")]
    pub sites: usize,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Number of density grid points.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Gaussian smoothing width; defaults to 2.5 grid steps, 0 for pointwise.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Sampling horizon (empirical only).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of sampled times (empirical only).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed for the sampled times (empirical only).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Amplitude normalization (small-quench only).
    #[arg(long, value_enum)]
    pub convention: Option<Convention>,
    /// Number of leading amplitudes kept (small-quench only).
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub couplings: Couplings,
    /// Comma-separated chain lengths.
    #[arg(long = "L")]
    pub sites: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub couplings: Couplings,
    #[arg(long = "L")]
    pub sites: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct GenericArgs {
    /// JSON file with `h0`, `v` and optionally `strength`; a random GUE pair
    /// is drawn from `--seed` when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Hilbert-space dimension of the random instance.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Quench strength ε in H₁ = H₀ + εV.
    #[arg(long)]
    pub strength: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also emit the small-quench density on this many points.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}
