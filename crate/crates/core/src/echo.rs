//! Time-dependent Loschmidt echo `L(t) = ∏_k f_k(Λ¹_k t)` of the thermal
//! initial state, evaluated in log space.

use crate::error::{Error, Result};
use crate::par;
use crate::xy_model::ModeData;
use serde::{Deserialize, Serialize};

/// Per-mode factor `f_k = [(1 + √(c² − (c² − 1)α sin²φ)) / (1 + c)]²` at phase `φ = Λ¹t`.
pub fn per_mode_factor(mode: &ModeData, phase: f64) -> f64 {
    log_per_mode_factor(mode, phase).exp()
}

/// `ln f_k` at phase `φ`.
pub fn log_per_mode_factor(mode: &ModeData, phase: f64) -> f64 {
    mode.log_factor(phase)
}

/// `ln L(t) = Σ_k ln f_k(Λ¹_k t)`.
pub fn log_echo_at(modes: &[ModeData], t: f64) -> f64 {
    // the trailing + 0.0 turns an all-zero sum of −0.0 terms into +0.0
    modes.iter().map(|m| log_per_mode_factor(m, m.lambda1 * t)).sum::<f64>() + 0.0
}

pub fn echo_at(modes: &[ModeData], t: f64) -> f64 {
    log_echo_at(modes, t).exp()
}

/// Which quantity a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Echo,
    LogEcho,
}

/// Samples of the echo on a time grid. Both `L` and `ln L` are kept so that
/// values below the smallest double remain available in log form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub echo: Vec<f64>,
    pub log_echo: Vec<f64>,
}

impl TimeSeries {
    pub fn values(&self, kind: SeriesKind) -> &[f64] {
        match kind {
            SeriesKind::Echo => &self.echo,
            SeriesKind::LogEcho => &self.log_echo,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evaluate the echo at strictly increasing, finite times.
pub fn sample_series(modes: &[ModeData], times: &[f64]) -> Result<TimeSeries> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    let log_echo = par::map(times, |&t| log_echo_at(modes, t));
    let echo = log_echo.iter().map(|v| v.exp()).collect();
    Ok(TimeSeries { times: times.to_vec(), echo, log_echo })
}

/// `n` evenly spaced times on `[0, horizon]`; a single point is `t = 0`.
pub fn uniform_times(horizon: f64, n: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!("need horizon > 0 and at least 1 sample, got {horizon}, {n}")));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    Ok((0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect())
}

/// Running time average `(1/T)∫₀^T L dt` by the trapezoid rule over the series.
pub fn time_average(series: &TimeSeries) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidArgument("time average needs at least two samples".into()));
    }
    let span = series.times[n - 1] - series.times[0];
    let mut s = 0.0;
    for i in 1..n {
        s += 0.5 * (series.echo[i] + series.echo[i - 1]) * (series.times[i] - series.times[i - 1]);
    }
    Ok(s / span)
}
