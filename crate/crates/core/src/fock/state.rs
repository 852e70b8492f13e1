use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::embed::{apply_to_modes, validate_targets};
use super::ladder::ModeOperator;
use super::{check_finite_c, index_to_occupation, FockCutoff, FockError, Result, C64, NORM_TOLERANCE, TAIL_TOLERANCE};

/// Single-mode preparations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Vacuum,
    Fock { n: usize },
    Coherent { alpha: C64 },
    Squeezed { z: C64 },
    Dss { alpha: C64, z: C64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

/// A pure or mixed state over `modes` modes sharing one cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockState {
    modes: usize,
    cutoff: FockCutoff,
    repr: StateRepr,
    norm_tolerance: f64,
    truncation_loss: f64,
}

impl TruncatedFockState {
    pub fn vacuum(modes: usize, cutoff: FockCutoff) -> Self {
        let mut v = DVector::zeros(cutoff.space_dim(modes));
        v[0] = C64::new(1.0, 0.0);
        Self { modes, cutoff, repr: StateRepr::Pure(v), norm_tolerance: NORM_TOLERANCE, truncation_loss: 0.0 }
    }

    /// Basis state `|n_0, n_1, …⟩`.
    pub fn basis(occupation: &[usize], cutoff: FockCutoff) -> Result<Self> {
        let dim = cutoff.dim();
        if let Some(&n) = occupation.iter().find(|&&n| n >= dim) {
            return Err(FockError::CutoffExceeded { n, dim });
        }
        let mut v = DVector::zeros(cutoff.space_dim(occupation.len()));
        v[super::occupation_to_index(occupation, dim)] = C64::new(1.0, 0.0);
        Ok(Self::from_parts(occupation.len(), cutoff, StateRepr::Pure(v)))
    }

    pub fn from_amplitudes(amplitudes: DVector<C64>, modes: usize, cutoff: FockCutoff) -> Result<Self> {
        if amplitudes.len() != cutoff.space_dim(modes) {
            return Err(FockError::ShapeMismatch(format!(
                "{} amplitudes for {modes} mode(s) at dim {}",
                amplitudes.len(),
                cutoff.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE.sqrt() {
            return Err(FockError::InvalidParameter(format!("amplitude vector has norm {norm}")));
        }
        Ok(Self::from_parts(modes, cutoff, StateRepr::Pure(amplitudes / C64::new(norm, 0.0))))
    }

    pub fn from_density(rho: DMatrix<C64>, modes: usize, cutoff: FockCutoff) -> Result<Self> {
        let n = cutoff.space_dim(modes);
        if rho.nrows() != n || rho.ncols() != n {
            return Err(FockError::ShapeMismatch(format!("{}x{} density for {modes} mode(s)", rho.nrows(), rho.ncols())));
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > NORM_TOLERANCE {
            return Err(FockError::InvalidParameter(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > NORM_TOLERANCE {
            return Err(FockError::InvalidParameter(format!("density matrix has trace {trace}")));
        }
        Ok(Self::from_parts(modes, cutoff, StateRepr::Mixed(rho)))
    }

    pub(crate) fn from_parts(modes: usize, cutoff: FockCutoff, repr: StateRepr) -> Self {
        Self::from_parts_with_loss(modes, cutoff, repr, 0.0)
    }

    pub(crate) fn from_parts_with_loss(modes: usize, cutoff: FockCutoff, repr: StateRepr, truncation_loss: f64) -> Self {
        Self { modes, cutoff, repr, norm_tolerance: NORM_TOLERANCE, truncation_loss }
    }

    #[inline]
    pub fn modes(&self) -> usize {
        self.modes
    }

    #[inline]
    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    #[inline]
    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    #[inline]
    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    pub fn with_norm_tolerance(mut self, tol: f64) -> Self {
        self.norm_tolerance = tol;
        self
    }

    /// Probability mass discarded by truncating the preparation series.
    #[inline]
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    /// Set when the discarded tail exceeded the default tail tolerance.
    pub fn tail_warning(&self) -> bool {
        self.truncation_loss > TAIL_TOLERANCE
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C64>> {
        match &self.repr {
            StateRepr::Pure(v) => Some(v),
            StateRepr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            StateRepr::Pure(v) => v * v.adjoint(),
            StateRepr::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self { repr: StateRepr::Mixed(self.density_matrix()), ..self.clone() }
    }

    /// `‖ψ‖²` or `Tr ρ`.
    pub fn trace(&self) -> f64 {
        match &self.repr {
            StateRepr::Pure(v) => v.norm_squared(),
            StateRepr::Mixed(m) => m.trace().re,
        }
    }

    /// Smallest eigenvalue of the density matrix (0 for pure states up to rounding).
    pub fn min_eigenvalue(&self) -> f64 {
        let rho = self.density_matrix();
        rho.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Populations of the flat basis, i.e. the diagonal of ρ.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            StateRepr::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateRepr::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn occupation(&self, index: usize) -> Vec<usize> {
        index_to_occupation(index, self.modes, self.cutoff.dim())
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(FockError::ShapeMismatch("tensoring states of different cutoff".into()));
        }
        let repr = match (&self.repr, &other.repr) {
            (StateRepr::Pure(a), StateRepr::Pure(b)) => StateRepr::Pure(a.kronecker(b)),
            _ => StateRepr::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
        };
        Ok(Self {
            modes: self.modes + other.modes,
            cutoff: self.cutoff,
            repr,
            norm_tolerance: self.norm_tolerance.max(other.norm_tolerance),
            truncation_loss: self.truncation_loss + other.truncation_loss,
        })
    }

    /// Applies `op` to `targets` (ρ → O ρ O† for mixed states). Not renormalized.
    pub fn apply(&self, op: &ModeOperator, targets: &[usize]) -> Result<Self> {
        if op.cutoff() != self.cutoff || op.arity() != targets.len() {
            return Err(FockError::ShapeMismatch("operator does not match state".into()));
        }
        self.apply_matrix(op.matrix(), targets)
    }

    pub(crate) fn apply_matrix(&self, op: &DMatrix<C64>, targets: &[usize]) -> Result<Self> {
        validate_targets(targets, self.modes)?;
        let dim = self.cutoff.dim();
        let repr = match &self.repr {
            StateRepr::Pure(v) => {
                let mut data = v.as_slice().to_vec();
                apply_to_modes(&mut data, op, targets, self.modes, dim)?;
                StateRepr::Pure(DVector::from_vec(data))
            }
            StateRepr::Mixed(m) => {
                // Column-major storage is a vector over (column modes, row modes):
                // rows transform with O, columns with conj(O).
                let n = self.modes;
                let mut data = m.as_slice().to_vec();
                let rows: Vec<usize> = targets.iter().map(|t| t + n).collect();
                apply_to_modes(&mut data, op, &rows, 2 * n, dim)?;
                apply_to_modes(&mut data, &op.map(|z| z.conj()), targets, 2 * n, dim)?;
                StateRepr::Mixed(DMatrix::from_vec(m.nrows(), m.ncols(), data))
            }
        };
        Ok(Self { repr, ..self.clone() })
    }

    /// Rescales to unit norm / unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= f64::MIN_POSITIVE {
            return Err(FockError::Singular("cannot normalize a zero state".into()));
        }
        let repr = match &self.repr {
            StateRepr::Pure(v) => StateRepr::Pure(v / C64::new(t.sqrt(), 0.0)),
            StateRepr::Mixed(m) => StateRepr::Mixed(m / C64::new(t, 0.0)),
        };
        Ok(Self { repr, ..self.clone() })
    }

    /// Mixes `self` and `other` as `w·self + (1-w)·other` (density matrices).
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(FockError::ShapeMismatch("mixing states of different shape".into()));
        }
        let rho = self.density_matrix() * C64::new(weight, 0.0) + other.density_matrix() * C64::new(1.0 - weight, 0.0);
        Ok(Self { repr: StateRepr::Mixed(rho), ..self.clone() })
    }

    /// `⟨ψ|ρ|ψ⟩` style overlap; at least one side must be pure.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        check_same_shape(self, other)?;
        match (&self.repr, &other.repr) {
            (StateRepr::Pure(a), StateRepr::Pure(b)) => Ok(a.dotc(b).norm_sqr()),
            (StateRepr::Pure(a), StateRepr::Mixed(m)) | (StateRepr::Mixed(m), StateRepr::Pure(a)) => {
                Ok(a.dotc(&(m * a)).re)
            }
            _ => Err(FockError::NotPure),
        }
    }

    /// Projects `mode` onto photon number `n` and renormalizes. Returns the
    /// outcome probability and the post-measurement state.
    pub fn project_mode(&self, mode: usize, n: usize) -> Result<(f64, Self)> {
        validate_targets(&[mode], self.modes)?;
        let dim = self.cutoff.dim();
        if n >= dim {
            return Err(FockError::CutoffExceeded { n, dim });
        }
        let mut proj = DMatrix::<C64>::zeros(dim, dim);
        proj[(n, n)] = C64::new(1.0, 0.0);
        let projected = self.apply_matrix(&proj, &[mode])?;
        let p = projected.trace();
        if p <= 0.0 {
            return Ok((0.0, projected));
        }
        Ok((p, projected.normalized()?))
    }
}

fn check_same_shape(a: &TruncatedFockState, b: &TruncatedFockState) -> Result<()> {
    if a.modes != b.modes || a.cutoff != b.cutoff {
        return Err(FockError::ShapeMismatch(format!(
            "{} mode(s) at dim {} vs {} mode(s) at dim {}",
            a.modes,
            a.cutoff.dim(),
            b.modes,
            b.cutoff.dim()
        )));
    }
    Ok(())
}

/// Truncated Fock-basis series of `spec`, renormalized to unit norm; the
/// discarded mass is kept in [`TruncatedFockState::truncation_loss`].
pub fn prepare_state(spec: &StateSpec, cutoff: FockCutoff) -> Result<TruncatedFockState> {
    let dim = cutoff.dim();
    let coeffs: Vec<C64> = match *spec {
        StateSpec::Vacuum => return Ok(TruncatedFockState::vacuum(1, cutoff)),
        StateSpec::Fock { n } => return TruncatedFockState::basis(&[n], cutoff),
        StateSpec::Coherent { alpha } => {
            check_finite_c(alpha, "alpha")?;
            coherent_coefficients(alpha, dim)
        }
        StateSpec::Squeezed { z } => {
            check_finite_c(z, "z")?;
            squeezed_coefficients(z, dim)
        }
        StateSpec::Dss { alpha, z } => {
            check_finite_c(alpha, "alpha")?;
            check_finite_c(z, "z")?;
            dss_coefficients(alpha, z, dim)
        }
    };
    let v = DVector::from_vec(coeffs);
    let kept = v.norm_squared();
    let mut state = TruncatedFockState::from_parts(1, cutoff, StateRepr::Pure(v / C64::new(kept.sqrt(), 0.0)));
    state.truncation_loss = (1.0 - kept).max(0.0);
    Ok(state)
}

/// `e^{-|α|²/2} αⁿ/√n!` for `n < dim`.
pub(crate) fn coherent_coefficients(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    out.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// `√sech r · √(2n)!/(2ⁿ n!) · (-e^{iφ} tanh r)ⁿ` on even photon numbers.
fn squeezed_coefficients(z: C64, dim: usize) -> Vec<C64> {
    let (r, phi) = (z.norm(), z.arg());
    let ratio = -C64::from_polar(r.tanh(), phi);
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let mut c = C64::new((1.0 / r.cosh()).sqrt(), 0.0);
    let mut k = 0usize;
    while 2 * k < dim {
        out[2 * k] = c;
        let kf = k as f64;
        c = c * ratio * (((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0)));
        k += 1;
    }
    out
}

/// Displaced squeezed vacuum `D(α)S(z)|0⟩` via its Hermite-polynomial series.
///
/// The factors `[½e^{iφ}tanh r]^{n/2}` and `H_n(γ/√(e^{iφ}sinh 2r))` are
/// combined into `h_n = qⁿ H_n(X)/√n!`, whose recurrence only involves
/// `2qX = γ/cosh r` and `q² = ½e^{iφ}tanh r`. That removes the branch choice
/// of the square roots and the 0/0 at `r = 0`.
fn dss_coefficients(alpha: C64, z: C64, dim: usize) -> Vec<C64> {
    let (r, phi) = (z.norm(), z.arg());
    let e_phi = C64::from_polar(1.0, phi);
    let gamma = alpha * r.cosh() + alpha.conj() * e_phi * r.sinh();
    let two_qx = gamma / r.cosh();
    let two_q2 = e_phi * r.tanh();
    let prefactor = (-0.5 * alpha.norm_sqr() - 0.5 * alpha.conj() * alpha.conj() * e_phi * r.tanh()).exp() / r.cosh().sqrt();

    let mut out = Vec::with_capacity(dim);
    let mut h_prev = C64::new(1.0, 0.0);
    out.push(prefactor * h_prev);
    if dim == 1 {
        return out;
    }
    let mut h = two_qx;
    out.push(prefactor * h);
    for n in 1..dim - 1 {
        let nf = n as f64;
        let next = (two_qx * h - two_q2 * nf.sqrt() * h_prev) / (nf + 1.0).sqrt();
        h_prev = h;
        h = next;
        out.push(prefactor * h);
    }
    out
}

/// `⟨a|b⟩`, conjugate-linear in `a`. Both states must be pure.
pub fn inner_product(a: &TruncatedFockState, b: &TruncatedFockState) -> Result<C64> {
    check_same_shape(a, b)?;
    match (&a.repr, &b.repr) {
        (StateRepr::Pure(x), StateRepr::Pure(y)) => Ok(x.dotc(y)),
        _ => Err(FockError::NotPure),
    }
}

/// Reduced density matrix on `keep` (in the given order).
pub fn partial_trace(state: &TruncatedFockState, keep: &[usize]) -> Result<TruncatedFockState> {
    if keep.is_empty() {
        return Err(FockError::InvalidModes("keep set is empty".into()));
    }
    validate_targets(keep, state.modes)?;
    let dim = state.cutoff.dim();
    let env: Vec<usize> = (0..state.modes).filter(|m| !keep.contains(m)).collect();
    let keep_dim = dim.pow(keep.len() as u32);
    let env_dim = dim.pow(env.len() as u32);
    let stride = |mode: usize| dim.pow((state.modes - 1 - mode) as u32);
    let offsets = |modes: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|s| {
                let mut rem = s;
                let mut off = 0;
                for &m in modes.iter().rev() {
                    off += (rem % dim) * stride(m);
                    rem /= dim;
                }
                off
            })
            .collect()
    };
    let keep_off = offsets(keep, keep_dim);
    let env_off = offsets(&env, env_dim);

    let rho = match &state.repr {
        StateRepr::Pure(v) => {
            let psi = DMatrix::from_fn(keep_dim, env_dim, |k, e| v[keep_off[k] + env_off[e]]);
            &psi * psi.adjoint()
        }
        StateRepr::Mixed(m) => DMatrix::from_fn(keep_dim, keep_dim, |i, j| {
            env_off.iter().map(|e| m[(keep_off[i] + e, keep_off[j] + e)]).sum()
        }),
    };
    Ok(TruncatedFockState { modes: keep.len(), repr: StateRepr::Mixed(rho), ..state.clone() })
}
