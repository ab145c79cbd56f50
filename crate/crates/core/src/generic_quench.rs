//! Quench of a generic non-degenerate Hamiltonian from a pure state:
//! `L(t) = |Σ_n p_n e^{−iE_n t}|²` with `p_n = |⟨n|ψ₀⟩|²`.

use crate::distribution::{DistributionEstimate, GridSpec};
use crate::error::{Error, Result};
use crate::small_quench::{dos_distribution, AmplitudeConvention, AmplitudeSet};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Relative gap (in units of the spectral range) below which levels count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Spectrum of the post-quench Hamiltonian and the initial state's weights on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralQuench {
    /// Ascending, non-degenerate.
    pub energies: Vec<f64>,
    /// Non-negative, summing to 1.
    pub weights: Vec<f64>,
    /// Fidelity susceptibility `Σ_{n>0} p_n`, set by the perturbative branch.
    pub chi: Option<f64>,
}

impl SpectralQuench {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Index of the largest weight (the reference level for the expansion).
    pub fn reference(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// `L(t)`.
    pub fn echo_at(&self, t: f64) -> f64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &p)| Complex64::from_polar(p, -e * t))
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Infinite-time average `L̄ = Σ p_n²`.
    pub fn mean_echo(&self) -> f64 {
        self.weights.iter().map(|p| p * p).sum()
    }

    /// `κ₂(Z) = 2Σ_{n≠ref} p_n²` at second order.
    pub fn kappa2(&self) -> f64 {
        let r = self.reference();
        2.0 * self.weights.iter().enumerate().filter(|(i, _)| *i != r).map(|(_, p)| p * p).sum::<f64>()
    }

    /// `Z̄ = ln L̄ − κ₂/2`.
    pub fn mean_log_echo(&self) -> f64 {
        self.mean_echo().ln() - 0.5 * self.kappa2()
    }

    /// Amplitudes `a_n = 2p_n` at frequencies `E_n − E_ref` for the small-quench density.
    pub fn amplitude_set(&self, convention: AmplitudeConvention) -> Result<AmplitudeSet> {
        let r = self.reference();
        let others: Vec<usize> = (0..self.dim()).filter(|&i| i != r).collect();
        AmplitudeSet::new(
            others.iter().map(|&i| 2.0 * self.weights[i] * convention.factor()).collect(),
            others.iter().map(|&i| self.energies[i] - self.energies[r]).collect(),
            others.iter().map(|&i| i as f64).collect(),
            self.mean_log_echo(),
            convention,
            (1.0 - self.weights[r]).sqrt(),
        )
    }
}

fn check_hermitian(h: &DMatrix<Complex64>, name: &str) -> Result<()> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be a non-empty square matrix")));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asym = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(asym <= 1e-12 * scale.max(1.0)) {
        return Err(Error::InvalidArgument(format!("{name} is not Hermitian (deviation {asym:e})")));
    }
    Ok(())
}

/// Fail with the offending pair when two levels are closer than the tolerance.
pub fn check_nondegenerate(energies: &[f64]) -> Result<()> {
    if energies.len() < 2 {
        return Ok(());
    }
    let range = energies[energies.len() - 1] - energies[0];
    for i in 1..energies.len() {
        let gap = energies[i] - energies[i - 1];
        if !(gap > DEGENERACY_TOLERANCE * range) {
            return Err(Error::Degeneracy { i: i - 1, j: i, gap });
        }
    }
    Ok(())
}

/// Ascending eigenvalues and matching eigenvectors (columns).
fn eigh(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (energies, vectors)
}

/// Weights of `ψ₀` on the exact eigenbasis of `H₁`.
pub fn spectral_quench_exact(h1: &DMatrix<Complex64>, psi0: &DVector<Complex64>) -> Result<SpectralQuench> {
    check_hermitian(h1, "H1")?;
    if psi0.len() != h1.nrows() {
        return Err(Error::InvalidArgument(format!("state has dimension {}, matrix {}", psi0.len(), h1.nrows())));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("initial state has norm {norm}")));
    }
    let (energies, vectors) = eigh(h1);
    check_nondegenerate(&energies)?;
    let raw: Vec<f64> = (0..energies.len()).map(|n| vectors.column(n).dotc(psi0).norm_sqr()).collect();
    let total: f64 = raw.iter().sum();
    Ok(SpectralQuench { energies, weights: raw.iter().map(|p| p / total).collect(), chi: None })
}

/// Ground state of `H₀`, required to be non-degenerate.
pub fn ground_state(h0: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    check_hermitian(h0, "H0")?;
    let (energies, vectors) = eigh(h0);
    check_nondegenerate(&energies[..energies.len().min(2)])?;
    Ok(vectors.column(0).into_owned())
}

/// First-order weights for `H₁ = H₀ + εV` starting from the ground state of `H₀`:
/// `p_n = ε²|⟨n|V|0⟩|²/(E_n − E_0)²`, `p_0 = 1 − Σ_{n>0} p_n`. Energies are
/// those of `H₀` shifted by the first-order corrections `εV_nn`.
pub fn spectral_quench_perturbative(
    h0: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
    strength: f64,
) -> Result<SpectralQuench> {
    check_hermitian(h0, "H0")?;
    check_hermitian(v, "V")?;
    if v.shape() != h0.shape() {
        return Err(Error::InvalidArgument("H0 and V differ in shape".into()));
    }
    if !strength.is_finite() {
        return Err(Error::InvalidArgument(format!("strength must be finite, got {strength}")));
    }
    let (e0, vectors) = eigh(h0);
    check_nondegenerate(&e0)?;
    let v_eig = vectors.adjoint() * v * &vectors;
    let d = e0.len();
    let min_gap = (1..d).map(|i| e0[i] - e0[i - 1]).fold(f64::INFINITY, f64::min);
    let max_shift = (0..d).map(|i| (strength * v_eig[(i, i)].re).abs()).fold(0.0, f64::max);
    if max_shift > 0.1 * min_gap {
        log::warn!("first-order level shift {max_shift:e} exceeds 10% of the minimum gap {min_gap:e}");
    }
    let mut weights = vec![0.0; d];
    for n in 1..d {
        weights[n] = (strength * v_eig[(n, 0)].norm() / (e0[n] - e0[0])).powi(2);
    }
    let chi: f64 = weights[1..].iter().sum();
    if chi > 1.0 {
        return Err(Error::NumericAccuracy(format!("perturbative weights sum to {chi} > 1; quench too strong")));
    }
    weights[0] = 1.0 - chi;
    let energies: Vec<f64> = (0..d).map(|i| e0[i] + strength * v_eig[(i, i)].re).collect();
    check_nondegenerate(&energies)?;
    Ok(SpectralQuench { energies, weights, chi: Some(chi) })
}

/// Small-quench density of `ln L` with amplitudes `a_n = 2p_n`.
pub fn generic_logecho_distribution(
    sq: &SpectralQuench,
    n_max: Option<usize>,
    grid: &GridSpec,
) -> Result<DistributionEstimate> {
    dos_distribution(&sq.amplitude_set(AmplitudeConvention::Expansion)?, n_max, grid)
}

/// Gaussian unitary ensemble matrix with `E|H_ij|² = 1/d`.
pub fn random_gue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let s = (1.0 / dim as f64).sqrt();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let x: f64 = rng.sample(StandardNormal);
        h[(i, i)] = Complex64::new(s * x, 0.0);
        for j in 0..i {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * (s * std::f64::consts::FRAC_1_SQRT_2);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Haar-random unit vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eigenstate_has_constant_echo() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_gue(8, &mut rng);
        let (_, vecs) = eigh(&h);
        let sq = spectral_quench_exact(&h, &vecs.column(3).into_owned()).unwrap();
        assert_relative_eq!(sq.weights[3], 1.0, epsilon = 1e-12);
        for t in [0.0, 1.3, 100.0] {
            assert_relative_eq!(sq.echo_at(t), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_level_echo() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let psi = DVector::from_vec(vec![c(0.5f64.sqrt()), c(0.5f64.sqrt())]);
        let sq = spectral_quench_exact(&h, &psi).unwrap();
        assert_relative_eq!(sq.mean_echo(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(sq.echo_at(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(sq.echo_at(std::f64::consts::FRAC_PI_2), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn validation_errors() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(-1.0)]);
        let psi = DVector::from_vec(vec![c(1.0), c(0.0)]);
        assert!(matches!(spectral_quench_exact(&h, &psi), Err(Error::InvalidArgument(_))));
        let deg = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]);
        assert!(matches!(spectral_quench_exact(&deg, &psi), Err(Error::Degeneracy { i: 0, j: 1, .. })));
        let unnormalized = DVector::from_vec(vec![c(1.0), c(1.0)]);
        let good = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        assert!(spectral_quench_exact(&good, &unnormalized).is_err());
    }

    #[test]
    fn zero_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h0 = random_gue(16, &mut rng);
        let sq = spectral_quench_perturbative(&h0, &DMatrix::zeros(16, 16), 0.3).unwrap();
        assert_eq!(sq.weights[0], 1.0);
        assert_eq!(sq.chi, Some(0.0));
    }

    #[test]
    fn mean_echo_matches_time_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_gue(64, &mut rng);
        let psi = random_state(64, &mut rng);
        let sq = spectral_quench_exact(&h, &psi).unwrap();
        assert_relative_eq!(sq.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let n = 200_000;
        let avg: f64 = (0..n).map(|_| sq.echo_at(1e6 * rng.random::<f64>())).sum::<f64>() / n as f64;
        assert!((avg / sq.mean_echo() - 1.0).abs() < 1e-2, "{avg} vs {}", sq.mean_echo());
    }

    #[test]
    fn single_dominant_weight_gives_arcsine() {
        let sq = SpectralQuench { energies: vec![0.0, 1.0], weights: vec![0.95, 0.05], chi: Some(0.05) };
        let d = generic_logecho_distribution(&sq, None, &GridSpec::with_points(512)).unwrap();
        let r = crate::peak_structure(&d).unwrap();
        assert_eq!(r.count, 2);
        assert_relative_eq!(d.variance, 0.5 * 0.1f64.powi(2), max_relative = 1e-12);
    }
}
