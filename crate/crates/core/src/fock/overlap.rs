//! Closed-form overlaps of Gaussian pure states, used as oracles for the
//! numeric inner product.
//!
//! All three forms are `⟨left|right⟩`, conjugate-linear in `left`.

use serde::{Deserialize, Serialize};

use super::{check_finite_c, FockError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    Coherent,
    Squeezed,
    Dss,
}

/// Displacement `alpha` and squeezing `z = r e^{iφ}`; each kind reads what it needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OverlapParams {
    pub alpha: C64,
    pub z: C64,
}

impl OverlapParams {
    pub fn new(alpha: C64, z: C64) -> Self {
        Self { alpha, z }
    }
}

const SINGULAR_BETA: f64 = 1e-12;

fn beta(z1: C64, z2: C64) -> C64 {
    let (r1, p1) = (z1.norm(), z1.arg());
    let (r2, p2) = (z2.norm(), z2.arg());
    C64::new(r2.cosh() * r1.cosh(), 0.0) - C64::from_polar(r2.sinh() * r1.sinh(), p2 - p1)
}

pub fn closed_form_overlap(kind: OverlapKind, left: &OverlapParams, right: &OverlapParams) -> Result<C64> {
    for p in [left, right] {
        check_finite_c(p.alpha, "alpha")?;
        check_finite_c(p.z, "z")?;
    }
    match kind {
        OverlapKind::Coherent => {
            let (a, b) = (left.alpha, right.alpha);
            Ok((-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp())
        }
        OverlapKind::Squeezed => {
            let b21 = beta(left.z, right.z);
            if b21.norm() < SINGULAR_BETA {
                return Err(FockError::Singular(format!("β21 = {b21}")));
            }
            Ok(C64::new(1.0, 0.0) / b21.sqrt())
        }
        OverlapKind::Dss => {
            let (a1, a2) = (left.alpha, right.alpha);
            let (r1, p1) = (left.z.norm(), left.z.arg());
            let (r2, p2) = (right.z.norm(), right.z.arg());
            let b21 = beta(left.z, right.z);
            if b21.norm() < SINGULAR_BETA {
                return Err(FockError::Singular(format!("β21 = {b21}")));
            }
            let g21 = (a2 - a1) * r2.cosh() + C64::from_polar(r2.sinh(), p2) * (a2.conj() - a1.conj());
            let g12 = (a1 - a2) * r1.cosh() + C64::from_polar(r1.sinh(), p1) * (a1.conj() - a2.conj());
            let exponent = g21 * g12.conj() / (b21 * 2.0) + (a2 * a1.conj() - a2.conj() * a1) / 2.0;
            Ok(exponent.exp() / b21.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identical_coherent_states() {
        let p = OverlapParams::new(c(0.6, -0.2), c(0.0, 0.0));
        assert!((closed_form_overlap(OverlapKind::Coherent, &p, &p).unwrap().norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_modulus_matches_distance_law() {
        let (a, b) = (OverlapParams::new(c(0.4, 0.1), c(0.0, 0.0)), OverlapParams::new(c(-0.3, 0.5), c(0.0, 0.0)));
        let v = closed_form_overlap(OverlapKind::Coherent, &a, &b).unwrap();
        assert!((v.norm_sqr() - (-(a.alpha - b.alpha).norm_sqr()).exp()).abs() < 1e-15);
    }

    #[test]
    fn identical_squeezed_states() {
        let p = OverlapParams::new(c(0.0, 0.0), c(0.5, 0.0));
        let v = closed_form_overlap(OverlapKind::Squeezed, &p, &p).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dss_reduces_to_squeezed_without_displacement() {
        let a = OverlapParams::new(c(0.0, 0.0), C64::from_polar(0.3, 0.4));
        let b = OverlapParams::new(c(0.0, 0.0), C64::from_polar(0.8, 2.0));
        let dss = closed_form_overlap(OverlapKind::Dss, &a, &b).unwrap();
        let sq = closed_form_overlap(OverlapKind::Squeezed, &a, &b).unwrap();
        assert!((dss - sq).norm() < 1e-15);
    }

    #[test]
    fn dss_reduces_to_coherent_without_squeezing() {
        let a = OverlapParams::new(c(0.2, 0.3), c(0.0, 0.0));
        let b = OverlapParams::new(c(-0.5, 0.1), c(0.0, 0.0));
        let dss = closed_form_overlap(OverlapKind::Dss, &a, &b).unwrap();
        let coh = closed_form_overlap(OverlapKind::Coherent, &a, &b).unwrap();
        assert!((dss - coh).norm() < 1e-15);
    }

    #[test]
    fn non_finite_params_fail() {
        let bad = OverlapParams::new(c(f64::NAN, 0.0), c(0.0, 0.0));
        assert!(closed_form_overlap(OverlapKind::Coherent, &bad, &bad).is_err());
    }
}
