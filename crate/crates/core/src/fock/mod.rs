//! Truncated Fock-space kernel.
//!
//! Every mode is truncated to the same dimension `dim`, so a state over `N`
//! modes lives in a space of size `dim^N`. Multi-mode indices follow the
//! consecutive-group convention: mode 0 is the most significant digit of the
//! flat index, i.e. `index = n_0 * dim^(N-1) + n_1 * dim^(N-2) + ... + n_(N-1)`,
//! which is exactly the ordering produced by Kronecker products
//! `op_0 ⊗ op_1 ⊗ ...`.
//!
//! ħ = 1 throughout, so `x̂ = (â + â†)/√2` and `p̂ = -i(â - â†)/√2`.

mod embed;
mod expm;
mod gates;
mod hermite;
mod ladder;
mod measure;
mod overlap;
mod state;
mod wigner;

pub use embed::{apply_to_modes, embed_operator};
pub use expm::expm;
pub use gates::{build_gate, GateKind, GateParams};
pub use hermite::{hermite_functions, hermite_polynomial};
pub use ladder::{identity, ladder_operators, position_operator, LadderOperators, ModeOperator, OperatorKind};
pub use measure::{
    mean_photon_number, mode_mean_photon_number, photon_number_distribution, quadrature_pdf,
    OutcomeTable, QuadratureGrid, QuadratureKind,
};
pub use overlap::{closed_form_overlap, OverlapKind, OverlapParams};
pub use state::{inner_product, partial_trace, prepare_state, StateRepr, StateSpec, TruncatedFockState};
pub use wigner::{default_wigner_axis, wigner_grid, WignerGrid};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the kernel.
pub type C64 = Complex64;

/// Default tolerance for norms and traces.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Default bound on the probability mass lost when truncating a series.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid cutoff {0}: a mode needs at least two basis states")]
    InvalidCutoff(usize),
    #[error("photon number {n} does not fit under cutoff {dim}")]
    CutoffExceeded { n: usize, dim: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid mode selection: {0}")]
    InvalidModes(String),
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("operation requires a pure state")]
    NotPure,
}

pub type Result<T> = std::result::Result<T, FockError>;

/// Number of retained basis states per mode (`|0⟩ … |dim-1⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(FockError::InvalidCutoff(dim));
        }
        Ok(Self(dim))
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.0
    }

    /// Dimension of the joint space of `modes` modes.
    pub fn space_dim(self, modes: usize) -> usize {
        self.0.pow(modes as u32)
    }
}

impl TryFrom<usize> for FockCutoff {
    type Error = FockError;

    fn try_from(dim: usize) -> Result<Self> {
        Self::new(dim)
    }
}

impl From<FockCutoff> for usize {
    fn from(c: FockCutoff) -> usize {
        c.0
    }
}

/// Splits a flat index into per-mode photon numbers.
pub fn index_to_occupation(mut index: usize, modes: usize, dim: usize) -> Vec<usize> {
    let mut occ = vec![0; modes];
    for slot in occ.iter_mut().rev() {
        *slot = index % dim;
        index /= dim;
    }
    occ
}

/// Inverse of [`index_to_occupation`].
pub fn occupation_to_index(occ: &[usize], dim: usize) -> usize {
    occ.iter().fold(0, |acc, &n| acc * dim + n)
}

pub(crate) fn check_finite(value: f64, name: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(FockError::NonFinite(name))
    }
}

pub(crate) fn check_finite_c(value: C64, name: &'static str) -> Result<()> {
    check_finite(value.re, name)?;
    check_finite(value.im, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_rejects_tiny_dims() {
        assert_eq!(FockCutoff::new(1), Err(FockError::InvalidCutoff(1)));
        assert_eq!(FockCutoff::new(0), Err(FockError::InvalidCutoff(0)));
        assert_eq!(FockCutoff::new(2).unwrap().dim(), 2);
    }

    #[test]
    fn occupation_round_trip() {
        let occ = index_to_occupation(occupation_to_index(&[1, 0, 2], 3), 3, 3);
        assert_eq!(occ, vec![1, 0, 2]);
        // mode 0 is the most significant digit
        assert_eq!(occupation_to_index(&[1, 0], 4), 4);
    }
}
