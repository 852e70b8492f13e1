use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FockCutoff, FockError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Ladder,
    Number,
    Displacement,
    Squeeze,
    Rotation,
    Beamsplitter,
    CubicPhase,
    Projector,
    Custom,
}

/// Dense operator acting on `arity` modes of a common cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    arity: usize,
    cutoff: FockCutoff,
    matrix: DMatrix<C64>,
    kind: OperatorKind,
}

impl ModeOperator {
    pub fn new(matrix: DMatrix<C64>, arity: usize, cutoff: FockCutoff, kind: OperatorKind) -> Result<Self> {
        let expected = cutoff.space_dim(arity);
        if arity == 0 || matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(FockError::ShapeMismatch(format!(
                "{}x{} matrix for {arity} mode(s) at dim {}",
                matrix.nrows(),
                matrix.ncols(),
                cutoff.dim()
            )));
        }
        Ok(Self { arity, cutoff, matrix, kind })
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    #[inline]
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), ..self.clone() }
    }

    /// `self · other`; both must act on the same modes.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.arity != other.arity || self.cutoff != other.cutoff {
            return Err(FockError::ShapeMismatch("composing operators of different shape".into()));
        }
        Ok(Self { matrix: &self.matrix * &other.matrix, kind: OperatorKind::Custom, ..self.clone() })
    }

    /// `self ⊗ other`, acting on the modes of `self` followed by those of `other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(FockError::ShapeMismatch("tensoring operators of different cutoff".into()));
        }
        Ok(Self {
            arity: self.arity + other.arity,
            cutoff: self.cutoff,
            matrix: self.matrix.kronecker(&other.matrix),
            kind: OperatorKind::Custom,
        })
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let prod = self.matrix.adjoint() * &self.matrix;
        let eye = DMatrix::<C64>::identity(n, n);
        (prod - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Row-major CSV dump, one `re,im` cell per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("\"{:e},{:e}\"", z.re, z.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// `â`, `â†` and `n̂` for one mode.
#[derive(Debug, Clone)]
pub struct LadderOperators {
    pub annihilation: ModeOperator,
    pub creation: ModeOperator,
    pub number: ModeOperator,
}

pub fn ladder_operators(cutoff: FockCutoff) -> LadderOperators {
    let dim = cutoff.dim();
    let mut creation = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim - 1 {
        creation[(n + 1, n)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    let annihilation = creation.adjoint();
    let number = &creation * &annihilation;
    LadderOperators {
        annihilation: ModeOperator { arity: 1, cutoff, matrix: annihilation, kind: OperatorKind::Ladder },
        creation: ModeOperator { arity: 1, cutoff, matrix: creation, kind: OperatorKind::Ladder },
        number: ModeOperator { arity: 1, cutoff, matrix: number, kind: OperatorKind::Number },
    }
}

pub fn identity(cutoff: FockCutoff, arity: usize) -> ModeOperator {
    let n = cutoff.space_dim(arity);
    ModeOperator { arity, cutoff, matrix: DMatrix::identity(n, n), kind: OperatorKind::Custom }
}

/// Truncated `x̂ = (â + â†)/√2`.
pub fn position_operator(cutoff: FockCutoff) -> DMatrix<C64> {
    let l = ladder_operators(cutoff);
    (l.annihilation.matrix + l.creation.matrix) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}
