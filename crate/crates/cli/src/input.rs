//! JSON input for generic quenches.
//!
//! ```json
//! { "h0": [[1, 0], [0, -1]], "v": [[0, [0.5, 0.1]], [[0.5, -0.1], 0]], "strength": 0.05 }
//! ```
//!
//! Matrices are lists of rows; an entry is a real number or a `[re, im]` pair.

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    h0: Vec<Vec<Entry>>,
    v: Vec<Vec<Entry>>,
    strength: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GenericInput {
    pub h0: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub strength: Option<f64>,
}

fn to_matrix(rows: Vec<Vec<Entry>>, name: &str) -> anyhow::Result<DMatrix<Complex64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!(crate::UsageError(format!("{name} must be a non-empty square matrix")));
    }
    let flat: Vec<Complex64> = rows
        .into_iter()
        .flatten()
        .map(|e| match e {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        })
        .collect();
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

pub fn read(path: &Path) -> anyhow::Result<GenericInput> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: RawInput = serde_json::from_str(&text)
        .map_err(|e| crate::UsageError(format!("malformed input {}: {e}", path.display())))?;
    Ok(GenericInput { h0: to_matrix(raw.h0, "h0")?, v: to_matrix(raw.v, "v")?, strength: raw.strength })
}
