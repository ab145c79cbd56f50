//! Loschmidt echo of the quantum XY chain prepared in a Gibbs state and
//! quenched to new couplings: time series, infinite-time statistics of
//! `ln L`, the small-quench density of states, Uhlmann fidelity of the two
//! Gibbs states, and the spectral picture for generic Hamiltonians.

pub mod distribution;
pub mod echo;
pub mod error;
pub mod generic_quench;
mod par;
pub mod quadrature;
pub mod small_quench;
pub mod special;
pub mod thermal_fidelity;
pub mod torus_stats;
pub mod xy_model;

pub use distribution::{peak_structure, DistributionEstimate, GridSpec, PeakReport, Provenance, Resolution};
pub use error::{Error, Result};
pub use par::is_parallel;
pub use xy_model::{mode_data, Beta, ModeData, QuenchSpec};
