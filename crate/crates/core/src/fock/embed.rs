use nalgebra::{DMatrix, DVector};

use super::ladder::{ModeOperator, OperatorKind};
use super::{FockError, Result, C64};

pub(crate) fn validate_targets(targets: &[usize], total_modes: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= total_modes {
            return Err(FockError::InvalidModes(format!("mode {t} out of range for {total_modes} mode(s)")));
        }
        if targets[..i].contains(&t) {
            return Err(FockError::InvalidModes(format!("mode {t} listed twice")));
        }
    }
    Ok(())
}

/// Flat-index offsets of every sub-basis state of `targets` (first target
/// most significant), plus every base index whose target digits are zero.
fn layout(targets: &[usize], total_modes: usize, dim: usize) -> (Vec<usize>, Vec<usize>) {
    let stride = |mode: usize| dim.pow((total_modes - 1 - mode) as u32);
    let sub = dim.pow(targets.len() as u32);
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            let mut rem = s;
            let mut off = 0;
            for &t in targets.iter().rev() {
                off += (rem % dim) * stride(t);
                rem /= dim;
            }
            off
        })
        .collect();
    let total = dim.pow(total_modes as u32);
    let bases = (0..total)
        .filter(|&idx| targets.iter().all(|&t| (idx / stride(t)) % dim == 0))
        .collect();
    (offsets, bases)
}

/// Applies `op` (acting on `targets.len()` modes) in place to a flat
/// amplitude vector over `total_modes` modes of dimension `dim`.
pub fn apply_to_modes(data: &mut [C64], op: &DMatrix<C64>, targets: &[usize], total_modes: usize, dim: usize) -> Result<()> {
    validate_targets(targets, total_modes)?;
    let sub = dim.pow(targets.len() as u32);
    if op.nrows() != sub || op.ncols() != sub || data.len() != dim.pow(total_modes as u32) {
        return Err(FockError::ShapeMismatch("operator does not match the selected modes".into()));
    }
    let (offsets, bases) = layout(targets, total_modes, dim);
    let mut buf = DVector::<C64>::zeros(sub);
    for base in bases {
        for (k, off) in offsets.iter().enumerate() {
            buf[k] = data[base + off];
        }
        let out = op * &buf;
        for (k, off) in offsets.iter().enumerate() {
            data[base + off] = out[k];
        }
    }
    Ok(())
}

/// Lifts `op` to the full `total_modes` space: `op` on `targets`, identity elsewhere.
pub fn embed_operator(op: &ModeOperator, targets: &[usize], total_modes: usize) -> Result<ModeOperator> {
    if targets.len() != op.arity() {
        return Err(FockError::InvalidModes(format!(
            "{} target(s) given for an operator on {} mode(s)",
            targets.len(),
            op.arity()
        )));
    }
    validate_targets(targets, total_modes)?;
    let dim = op.cutoff().dim();
    let n = dim.pow(total_modes as u32);
    let (offsets, bases) = layout(targets, total_modes, dim);
    let mut m = DMatrix::<C64>::zeros(n, n);
    let src = op.matrix();
    for base in bases {
        for (r, ro) in offsets.iter().enumerate() {
            for (c, co) in offsets.iter().enumerate() {
                m[(base + ro, base + co)] = src[(r, c)];
            }
        }
    }
    let kind = if total_modes == op.arity() && targets.windows(2).all(|w| w[0] < w[1]) {
        op.kind()
    } else {
        OperatorKind::Custom
    };
    ModeOperator::new(m, total_modes, op.cutoff(), kind)
}
