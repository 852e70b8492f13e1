use serde::{Deserialize, Serialize};

use super::hermite::hermite_functions;
use super::state::{coherent_coefficients, partial_trace, TruncatedFockState};
use super::{FockError, Result, C64};

/// Photon-number outcome probabilities in lexicographic order of `(n_0, n_1, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub modes: usize,
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl OutcomeTable {
    pub fn get(&self, occupation: &[usize]) -> f64 {
        self.entries.iter().find(|(o, _)| o.as_slice() == occupation).map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Entries above `eps`, still in lexicographic order.
    pub fn nonzero(&self, eps: f64) -> Vec<(Vec<usize>, f64)> {
        self.entries.iter().filter(|(_, p)| *p > eps).cloned().collect()
    }
}

/// Expected total photon number `Σ_k ⟨n̂_k⟩`.
pub fn mean_photon_number(state: &TruncatedFockState) -> f64 {
    state
        .populations()
        .iter()
        .enumerate()
        .map(|(i, p)| p * state.occupation(i).iter().sum::<usize>() as f64)
        .sum()
}

/// `⟨n̂⟩` of a single mode.
pub fn mode_mean_photon_number(state: &TruncatedFockState, mode: usize) -> Result<f64> {
    if mode >= state.modes() {
        return Err(FockError::InvalidModes(format!("mode {mode} out of range")));
    }
    Ok(state.populations().iter().enumerate().map(|(i, p)| p * state.occupation(i)[mode] as f64).sum())
}

/// `p(n) = Tr[ρ |n⟩⟨n|]` over every retained outcome.
pub fn photon_number_distribution(state: &TruncatedFockState) -> OutcomeTable {
    let entries = state
        .populations()
        .into_iter()
        .enumerate()
        .map(|(i, p)| (state.occupation(i), p))
        .collect();
    OutcomeTable { modes: state.modes(), entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureKind {
    /// `x̂_φ = cos φ x̂ + sin φ p̂`.
    Homodyne { phi: f64 },
    /// Husimi density `(1/π)⟨α|ρ|α⟩`.
    Heterodyne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureGrid {
    /// Quadrature eigenvalues for homodyne detection.
    Line(Vec<f64>),
    /// `Re α` × `Im α` for heterodyne detection; output is row-major over `re`.
    Plane { re: Vec<f64>, im: Vec<f64> },
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(FockError::EmptyGrid);
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(FockError::NonFinite("grid"));
    }
    if axis.windows(2).any(|w| w[0] > w[1]) {
        return Err(FockError::InvalidParameter("grid must be sorted".into()));
    }
    Ok(())
}

/// Sampled homodyne or heterodyne density of one mode.
pub fn quadrature_pdf(state: &TruncatedFockState, mode: usize, kind: QuadratureKind, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let rho = partial_trace(state, &[mode])?.density_matrix();
    let dim = state.cutoff().dim();
    match (kind, grid) {
        (QuadratureKind::Homodyne { phi }, QuadratureGrid::Line(xs)) => {
            check_axis(xs)?;
            // ⟨x_φ|n⟩ = e^{-inφ} ψ_n(x)
            let phases: Vec<C64> = (0..dim).map(|n| C64::from_polar(1.0, -(n as f64) * phi)).collect();
            Ok(xs
                .iter()
                .map(|&x| {
                    let psi = hermite_functions(x, dim);
                    let bra: Vec<C64> = (0..dim).map(|n| phases[n] * psi[n]).collect();
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..dim {
                        for n in 0..dim {
                            acc += rho[(m, n)] * bra[m] * bra[n].conj();
                        }
                    }
                    acc.re
                })
                .collect())
        }
        (QuadratureKind::Heterodyne, QuadratureGrid::Plane { re, im }) => {
            check_axis(re)?;
            check_axis(im)?;
            let mut out = Vec::with_capacity(re.len() * im.len());
            for &x in re {
                for &y in im {
                    let ket = coherent_coefficients(C64::new(x, y), dim);
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..dim {
                        for n in 0..dim {
                            acc += ket[m].conj() * rho[(m, n)] * ket[n];
                        }
                    }
                    out.push(acc.re / std::f64::consts::PI);
                }
            }
            Ok(out)
        }
        _ => Err(FockError::InvalidParameter("homodyne needs a line grid, heterodyne a plane grid".into())),
    }
}
