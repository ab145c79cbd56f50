//! Quasi-momentum modes of the periodic XY chain in a transverse field and
//! their single-particle spectra, Bogoliubov angles and thermal factors.

use crate::error::{Error, Result};
use crate::par;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;

/// Inverse temperature, possibly infinite (ground-state initial condition).
///
/// Serialized as a JSON number, or the string `"inf"` when infinite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const INFINITE: Beta = Beta(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidSpec(format!("inverse temperature must be >= 0, got {value}")));
        }
        Ok(Beta(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Beta::INFINITE),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("cannot parse inverse temperature {s:?}")))
                .and_then(Beta::new),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Number(v) => Beta::new(v),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A quench of the XY chain: initial field and anisotropy, final field and
/// anisotropy, inverse temperature of the initial Gibbs state and chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpec {
    pub h0: f64,
    pub gamma0: f64,
    pub h1: f64,
    pub gamma1: f64,
    pub beta: Beta,
    /// Number of sites, even and at least 2.
    pub sites: usize,
}

impl QuenchSpec {
    pub fn new(h0: f64, gamma0: f64, h1: f64, gamma1: f64, beta: Beta, sites: usize) -> Result<Self> {
        let spec = QuenchSpec { h0, gamma0, h1, gamma1, beta, sites };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h0", self.h0), ("gamma0", self.gamma0), ("h1", self.h1), ("gamma1", self.gamma1)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite, got {v}")));
            }
        }
        Beta::new(self.beta.0)?;
        if self.sites < 2 || self.sites % 2 != 0 {
            return Err(Error::InvalidSpec(format!("chain length must be even and >= 2, got {}", self.sites)));
        }
        Ok(())
    }

    /// The same quench on a chain of a different length.
    pub fn with_sites(&self, sites: usize) -> Result<Self> {
        QuenchSpec::new(self.h0, self.gamma0, self.h1, self.gamma1, self.beta, sites)
    }

    pub fn modes(&self) -> Result<Vec<ModeData>> {
        mode_data(self)
    }
}

/// Positive antiperiodic momenta `k = (2n+1)π/L`, `n = 0..L/2`.
pub fn mode_grid(sites: usize) -> Result<Vec<f64>> {
    if sites < 2 || sites % 2 != 0 {
        return Err(Error::InvalidSpec(format!("chain length must be even and >= 2, got {sites}")));
    }
    Ok((0..sites / 2).map(|n| (2 * n + 1) as f64 * PI / sites as f64).collect())
}

/// Single-particle energy `Λ = √((cos k + h)² + γ² sin² k)`.
pub fn dispersion(k: f64, h: f64, gamma: f64) -> f64 {
    (k.cos() + h).hypot(gamma * k.sin())
}

/// Gaps below this are treated as closed.
pub const GAP_TOLERANCE: f64 = 1e-13;

/// Bogoliubov angle `θ = atan2(γ sin k, h + cos k)`; undefined where the gap closes.
pub fn bogoliubov_angle(k: f64, h: f64, gamma: f64) -> Result<f64> {
    let (y, x) = (gamma * k.sin(), h + k.cos());
    if x.hypot(y) < GAP_TOLERANCE {
        return Err(Error::DegenerateMode { k });
    }
    Ok(y.atan2(x))
}

/// Reduce an angle difference to `[-π/2, π/2]`. The quench only sees the
/// rotation modulo π (`sin²` and `cos²` of it), so amplitudes use this branch.
pub fn wrap_half_turn(dtheta: f64) -> f64 {
    dtheta - PI * (dtheta / PI).round()
}

/// Everything the echo needs about one momentum mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub k: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub theta0: f64,
    pub theta1: f64,
    /// `θ₁ − θ₀`, unwrapped.
    pub dtheta: f64,
    /// `cosh(βΛ⁰)`; infinite at zero temperature or on overflow.
    pub c: f64,
    /// `1/cosh(βΛ⁰)`, kept separately so zero temperature stays finite.
    pub sech: f64,
    /// `sin²(θ₁ − θ₀)`.
    pub alpha: f64,
    /// `(1 − 1/c²) α`, the modulus of the phase average.
    pub b: f64,
    /// `1 − b = cos²Δθ + α/c²`, computed without cancellation.
    pub b_complement: f64,
}

impl ModeData {
    /// Mode data at an arbitrary momentum (not necessarily on the chain's grid).
    pub fn at(k: f64, spec: &QuenchSpec) -> Result<Self> {
        let lambda0 = dispersion(k, spec.h0, spec.gamma0);
        let lambda1 = dispersion(k, spec.h1, spec.gamma1);
        let theta0 = bogoliubov_angle(k, spec.h0, spec.gamma0)?;
        let theta1 = bogoliubov_angle(k, spec.h1, spec.gamma1)?;
        Ok(Self::from_parts(k, lambda0, lambda1, theta0, theta1, spec.beta))
    }

    /// Assemble mode data from spectra and angles directly.
    pub fn from_parts(k: f64, lambda0: f64, lambda1: f64, theta0: f64, theta1: f64, beta: Beta) -> Self {
        let x = beta.value() * lambda0;
        // 0·∞ at β = ∞, Λ⁰ = 0 is excluded by the degeneracy check upstream
        let c = if x.is_nan() { 1.0 } else { x.cosh() };
        let sech = if c.is_infinite() { 0.0 } else { 1.0 / c };
        let dtheta = theta1 - theta0;
        let alpha = dtheta.sin().powi(2);
        let b = ((1.0 - sech) * (1.0 + sech) * alpha).clamp(0.0, 1.0);
        let b_complement = dtheta.cos().powi(2) + sech * sech * alpha;
        ModeData { k, lambda0, lambda1, theta0, theta1, dtheta, c, sech, alpha, b, b_complement }
    }

    /// The same mode with the final angle moved so that `θ₁ − θ₀ = dtheta`.
    pub fn with_rotation(&self, dtheta: f64) -> Self {
        let alpha = dtheta.sin().powi(2);
        let e = self.sech;
        ModeData {
            theta1: self.theta0 + dtheta,
            dtheta,
            alpha,
            b: ((1.0 - e) * (1.0 + e) * alpha).clamp(0.0, 1.0),
            b_complement: dtheta.cos().powi(2) + e * e * alpha,
            ..*self
        }
    }

    /// `Δθ` on the branch `[-π/2, π/2]`.
    pub fn dtheta_wrapped(&self) -> f64 {
        wrap_half_turn(self.dtheta)
    }

    /// Amplitude `(1 − 1/c)Δθ²/2` of the `cos(2Λ¹t)` term in the second-order
    /// expansion of `ln f_k`.
    pub fn expansion_amplitude(&self) -> f64 {
        0.5 * (1.0 - self.sech) * self.dtheta_wrapped().powi(2)
    }

    /// `ln f_k` at phase `φ = Λ¹t`:
    /// `2 ln[(1/c + √(1 − b sin²φ)) / (1/c + 1)]`, finite for every temperature
    /// and accurate relative to its own size for weak modes.
    pub fn log_factor(&self, phase: f64) -> f64 {
        let (sin, cos) = phase.sin_cos();
        let r_minus_one = -self.b * sin * sin;
        let r = if cos * cos >= 0.5 { 1.0 + r_minus_one } else { self.b_complement + self.b * cos * cos };
        self.log_factor_from(r, r_minus_one)
    }

    /// Most negative value of `ln f_k` over all phases (attained at `φ = π/2`);
    /// `-∞` for a zero-temperature mode rotated by exactly π/2.
    pub fn log_factor_min(&self) -> f64 {
        self.log_factor_from(self.b_complement, -self.b)
    }

    fn log_factor_from(&self, r: f64, r_minus_one: f64) -> f64 {
        let sqrt_r_minus_one = r_minus_one / (r.max(0.0).sqrt() + 1.0);
        2.0 * (sqrt_r_minus_one / (1.0 + self.sech)).ln_1p()
    }

    /// A mode whose factor is identically 1 contributes nothing.
    pub fn is_trivial(&self) -> bool {
        self.b == 0.0
    }
}

/// Mode data for every positive momentum of the chain.
pub fn mode_data(spec: &QuenchSpec) -> Result<Vec<ModeData>> {
    spec.validate()?;
    let ks = mode_grid(spec.sites)?;
    par::try_map(&ks, |&k| ModeData::at(k, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_is_antiperiodic_and_positive() {
        let ks = mode_grid(8).unwrap();
        assert_eq!(ks.len(), 4);
        assert_relative_eq!(ks[0], PI / 8.0);
        assert_relative_eq!(ks[3], 7.0 * PI / 8.0);
        assert!(mode_grid(7).is_err());
        assert!(mode_grid(0).is_err());
    }

    #[test]
    fn critical_ising_gap_closes_at_pi() {
        assert!(bogoliubov_angle(PI, 1.0, 1.0).is_err());
        // antiperiodic grid never hits k = π exactly
        let spec = QuenchSpec::new(1.0, 1.0, 1.2, 1.0, Beta::INFINITE, 100).unwrap();
        assert!(mode_data(&spec).is_ok());
    }

    #[test]
    fn degenerate_mode_is_reported() {
        // h = 0, γ = 0 closes the gap at k = π/2, the only mode of L = 2
        let spec = QuenchSpec::new(0.0, 0.0, 0.5, 1.0, Beta::INFINITE, 2).unwrap();
        assert!(matches!(mode_data(&spec), Err(Error::DegenerateMode { .. })));
    }

    #[test]
    fn beta_parsing_and_serialization() {
        assert!("inf".parse::<Beta>().unwrap().is_infinite());
        assert_eq!("2.5".parse::<Beta>().unwrap().value(), 2.5);
        assert!("-1".parse::<Beta>().is_err());
        let spec = QuenchSpec::new(0.5, 1.0, 0.6, 1.0, Beta::INFINITE, 10).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"beta\":\"inf\""));
        let back: QuenchSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn zero_temperature_mode_is_finite() {
        let spec = QuenchSpec::new(0.5, 1.0, 0.6, 1.0, Beta::INFINITE, 10).unwrap();
        for m in mode_data(&spec).unwrap() {
            assert_eq!(m.sech, 0.0);
            assert!(m.c.is_infinite());
            assert!(m.log_factor_min().is_finite());
            assert_relative_eq!(m.b, m.alpha);
        }
    }

    #[test]
    fn infinite_temperature_modes_are_trivial() {
        let spec = QuenchSpec::new(0.5, 1.0, 0.6, 1.0, Beta::new(0.0).unwrap(), 10).unwrap();
        assert!(mode_data(&spec).unwrap().iter().all(|m| m.is_trivial()));
    }

    #[test]
    fn wrapped_angle_handles_sign_flip_of_anisotropy() {
        // γ: 0.01 → −0.01 at h = 0.5 rotates by nearly nothing modulo π for small k
        let spec = QuenchSpec::new(0.5, 0.01, 0.5, -0.01, Beta::new(40.0).unwrap(), 50).unwrap();
        for m in mode_data(&spec).unwrap() {
            assert!(m.dtheta_wrapped().abs() <= PI / 2.0 + 1e-15);
            assert_relative_eq!(m.dtheta_wrapped().sin().powi(2), m.alpha, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn angle_matches_spectrum(k in 0.01f64..3.13, h in -2.0f64..2.0, g in -2.0f64..2.0) {
            prop_assume!(dispersion(k, h, g) > 1e-6);
            let t = bogoliubov_angle(k, h, g).unwrap();
            let lam = dispersion(k, h, g);
            prop_assert!((lam * t.cos() - (h + k.cos())).abs() < 1e-12);
            prop_assert!((lam * t.sin() - g * k.sin()).abs() < 1e-12);
        }

        #[test]
        fn factor_stays_in_unit_interval(
            k in 0.01f64..3.13, h0 in -2.0f64..2.0, h1 in -2.0f64..2.0,
            g0 in 0.05f64..2.0, g1 in -2.0f64..2.0, beta in 0.0f64..100.0, phase in -10.0f64..10.0,
        ) {
            let spec = QuenchSpec::new(h0, g0, h1, g1, Beta::new(beta).unwrap(), 2).unwrap();
            if let Ok(m) = ModeData::at(k, &spec) {
                let lf = m.log_factor(phase);
                prop_assert!(lf <= 1e-15 && lf.is_finite());
                prop_assert!(lf >= m.log_factor_min() - 1e-12);
                prop_assert!((m.b + m.b_complement - 1.0).abs() < 1e-14);
            }
        }
    }
}
