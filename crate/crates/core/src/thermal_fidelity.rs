//! Uhlmann fidelity between the Gibbs states of the initial and final
//! Hamiltonians, factorized over the four-dimensional `(k, −k)` sectors.

use crate::error::Result;
use crate::xy_model::{bogoliubov_angle, dispersion, mode_grid, Beta, QuenchSpec};
use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Sector Hamiltonian in the basis `{|00⟩, |11⟩, |10⟩, |01⟩}` of the pair
/// `(k, −k)`: the even-parity block has energies `±Λ`, the odd block is zero.
/// The same normalization of `Λ` as the echo's thermal factor `cosh(βΛ)`.
pub fn sector_hamiltonian(k: f64, h: f64, gamma: f64) -> Matrix4<f64> {
    let x = h + k.cos();
    let y = gamma * k.sin();
    let mut m = Matrix4::zeros();
    m[(0, 0)] = -x;
    m[(1, 1)] = x;
    m[(0, 1)] = y;
    m[(1, 0)] = y;
    m
}

/// Sector Hamiltonians of the initial and final couplings at one momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    pub k: f64,
    pub h0_block: Matrix4<f64>,
    pub h1_block: Matrix4<f64>,
}

/// One block per positive momentum of the chain.
pub fn sector_blocks(spec: &QuenchSpec) -> Result<Vec<SectorBlock>> {
    spec.validate()?;
    Ok(mode_grid(spec.sites)?
        .into_iter()
        .map(|k| SectorBlock {
            k,
            h0_block: sector_hamiltonian(k, spec.h0, spec.gamma0),
            h1_block: sector_hamiltonian(k, spec.h1, spec.gamma1),
        })
        .collect())
}

/// Normalized `e^{−βH}`; at infinite β the projector on the ground level.
pub fn gibbs_state(h: &Matrix4<f64>, beta: Beta) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*h);
    let e_min = eig.eigenvalues.min();
    let weights = eig.eigenvalues.map(|e| {
        let gap = e - e_min;
        if beta.is_infinite() {
            if gap <= 1e-12 * (1.0 + e_min.abs()) {
                1.0
            } else {
                0.0
            }
        } else {
            (-beta.value() * gap).exp()
        }
    });
    let z = weights.sum();
    let v = &eig.eigenvectors;
    v * Matrix4::from_diagonal(&(weights / z)) * v.transpose()
}

/// Square root of a symmetric positive semi-definite matrix.
fn psd_sqrt(m: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let v = &eig.eigenvectors;
    v * Matrix4::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt())) * v.transpose()
}

/// `F(ρ, σ) = (tr √(√ρ σ √ρ))²` by eigendecomposition; loses accuracy when
/// the states are close to pure.
pub fn uhlmann_fidelity(rho: &Matrix4<f64>, sigma: &Matrix4<f64>) -> f64 {
    let s = psd_sqrt(rho);
    psd_sqrt(&(s * sigma * s)).trace().powi(2)
}

/// Gibbs weights `(ground, excited, each odd level)` of a sector with gap
/// parameter `Λ`, scaled to avoid overflow at large `βΛ`.
fn sector_weights(beta: Beta, lambda: f64) -> (f64, f64, f64) {
    let q = if beta.is_infinite() { 0.0 } else { (-beta.value() * lambda).exp() };
    let ground = 1.0 / ((1.0 + q) * (1.0 + q));
    (ground, ground * q * q, ground * q)
}

/// Fidelity of the Gibbs states of one sector.
///
/// Both states are block diagonal with 2×2 blocks, where
/// `(tr√(√ρ σ √ρ))² = tr ρσ + 2√(det ρ det σ)`; every term is written in the
/// eigenweights and the rotation `θ₁ − θ₀`, which keeps full precision for
/// nearly pure states.
pub fn mode_fidelity(k: f64, spec: &QuenchSpec) -> Result<f64> {
    let t0 = bogoliubov_angle(k, spec.h0, spec.gamma0)?;
    let t1 = bogoliubov_angle(k, spec.h1, spec.gamma1)?;
    let (p_g, p_e, p_o) = sector_weights(spec.beta, dispersion(k, spec.h0, spec.gamma0));
    let (q_g, q_e, q_o) = sector_weights(spec.beta, dispersion(k, spec.h1, spec.gamma1));
    let half = 0.5 * (t1 - t0);
    let (c2, s2) = (half.cos().powi(2), half.sin().powi(2));
    let overlap = (p_g * q_g + p_e * q_e) * c2 + (p_g * q_e + p_e * q_g) * s2;
    let even = (overlap + 2.0 * (p_g * p_e * q_g * q_e).sqrt()).sqrt();
    let odd = 2.0 * (p_o * q_o).sqrt();
    Ok((even + odd).powi(2).min(1.0))
}

/// Product of sector fidelities over the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub log_fidelity: f64,
    pub momenta: Vec<f64>,
    pub per_mode: Vec<f64>,
}

/// Uhlmann fidelity `F = ∏_k F_k` of the initial and final Gibbs states at
/// the configured inverse temperature.
pub fn gibbs_fidelity(spec: &QuenchSpec) -> Result<FidelityReport> {
    spec.validate()?;
    let momenta = mode_grid(spec.sites)?;
    let per_mode = crate::par::try_map(&momenta, |&k| mode_fidelity(k, spec))?;
    let log_fidelity = per_mode.iter().map(|f| f.ln()).sum::<f64>();
    Ok(FidelityReport { fidelity: log_fidelity.exp(), log_fidelity, momenta, per_mode })
}
