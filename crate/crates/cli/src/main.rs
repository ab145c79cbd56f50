mod args;
mod commands;
mod input;

use args::{Cli, Command};
use clap::Parser;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_DEGENERACY: u8 = 4;

/// Invalid configuration detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use quench_echo::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidSpec(_) | E::InvalidArgument(_)) => EXIT_USAGE,
        Some(E::NumericAccuracy(_) | E::GridTooNarrow { .. } | E::Internal(_)) => EXIT_NUMERIC,
        Some(E::DegenerateMode { .. } | E::Degeneracy { .. }) => EXIT_DEGENERACY,
        None => 1,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QUENCH_ECHO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| UsageError(format!("QUENCH_ECHO_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> anyhow::Result<()> {
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let (text, out) = match &cli.command {
        Command::Echo(a) => (commands::echo(a)?, &a.output.out),
        Command::Dist(a) => (commands::dist(a)?, &a.output.out),
        Command::Sweep(a) => (commands::sweep(a)?, &a.output.out),
        Command::Fidelity(a) => (commands::fidelity(a)?, &a.output.out),
        Command::Generic(a) => (commands::generic(a)?, &a.output.out),
    };
    emit(&text, out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on its own usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
