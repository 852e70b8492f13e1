use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expm::expm;
use super::ladder::{ladder_operators, position_operator, ModeOperator, OperatorKind};
use super::{check_finite, check_finite_c, FockCutoff, FockError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Displacement,
    Squeeze,
    Rotation,
    Beamsplitter,
    CubicPhase,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Beamsplitter => 2,
            _ => 1,
        }
    }
}

impl FromStr for GateKind {
    type Err = FockError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "displacement" => GateKind::Displacement,
            "squeeze" => GateKind::Squeeze,
            "rotation" => GateKind::Rotation,
            "beamsplitter" => GateKind::Beamsplitter,
            "cubic_phase" => GateKind::CubicPhase,
            other => return Err(FockError::InvalidParameter(format!("unknown gate kind '{other}'"))),
        })
    }
}

/// Parameters shared by all gates; each gate reads only the fields it needs.
///
/// Beam splitter: `t = cos θ` is the transmittivity and `r = e^{iφ} sin θ`
/// the reflectivity, so `θ = π/4, φ = 0` is the 50:50 splitter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GateParams {
    pub alpha: C64,
    pub z: C64,
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl GateParams {
    pub fn displacement(alpha: C64) -> Self {
        Self { alpha, ..Self::default() }
    }

    pub fn squeeze(z: C64) -> Self {
        Self { z, ..Self::default() }
    }

    pub fn rotation(phi: f64) -> Self {
        Self { phi, ..Self::default() }
    }

    pub fn beamsplitter(theta: f64, phi: f64) -> Self {
        Self { theta, phi, ..Self::default() }
    }

    pub fn cubic_phase(gamma: f64) -> Self {
        Self { gamma, ..Self::default() }
    }
}

/// Builds the anti-Hermitian generator of `kind` from truncated ladder
/// matrices.
fn generator(kind: GateKind, p: &GateParams, cutoff: FockCutoff) -> Result<DMatrix<C64>> {
    let l = ladder_operators(cutoff);
    let a = l.annihilation.matrix();
    let ad = l.creation.matrix();
    let i = C64::i();
    Ok(match kind {
        GateKind::Displacement => {
            check_finite_c(p.alpha, "alpha")?;
            ad * p.alpha - a * p.alpha.conj()
        }
        GateKind::Squeeze => {
            check_finite_c(p.z, "z")?;
            ((a * a) * p.z.conj() - (ad * ad) * p.z) * C64::new(0.5, 0.0)
        }
        GateKind::Rotation => {
            check_finite(p.phi, "phi")?;
            l.number.matrix() * (i * p.phi)
        }
        GateKind::Beamsplitter => {
            check_finite(p.theta, "theta")?;
            check_finite(p.phi, "phi")?;
            let eye = DMatrix::<C64>::identity(cutoff.dim(), cutoff.dim());
            let a1 = a.kronecker(&eye);
            let a2 = eye.kronecker(a);
            let a1d = a1.adjoint();
            let a2d = a2.adjoint();
            let phase = C64::from_polar(1.0, p.phi);
            ((&a1 * &a2d) * phase - (&a1d * &a2) * phase.conj()) * C64::new(p.theta, 0.0)
        }
        GateKind::CubicPhase => {
            check_finite(p.gamma, "gamma")?;
            let x = position_operator(cutoff);
            (&x * &x * &x) * (i * (p.gamma / 3.0))
        }
    })
}

/// Dense unitary for `kind`, obtained by exponentiating its truncated generator.
pub fn build_gate(kind: GateKind, params: &GateParams, cutoff: FockCutoff) -> Result<ModeOperator> {
    let matrix = expm(&generator(kind, params, cutoff)?);
    let op_kind = match kind {
        GateKind::Displacement => OperatorKind::Displacement,
        GateKind::Squeeze => OperatorKind::Squeeze,
        GateKind::Rotation => OperatorKind::Rotation,
        GateKind::Beamsplitter => OperatorKind::Beamsplitter,
        GateKind::CubicPhase => OperatorKind::CubicPhase,
    };
    ModeOperator::new(matrix, kind.arity(), cutoff, op_kind)
}
