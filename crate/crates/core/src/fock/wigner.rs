use serde::{Deserialize, Serialize};

use super::hermite::hermite_functions;
use super::state::{partial_trace, TruncatedFockState};
use super::{FockError, Result, C64};

/// `W(x_i, p_j)` stored row-major: `values[i * p_axis.len() + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Riemann sum over the grid cells; assumes uniform axes.
    pub fn integral(&self) -> f64 {
        let step = |axis: &[f64]| if axis.len() > 1 { (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64 } else { 1.0 };
        self.values.iter().sum::<f64>() * step(&self.x_axis) * step(&self.p_axis)
    }

    /// Grid point with the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
        (self.x_axis[k / self.p_axis.len()], self.p_axis[k % self.p_axis.len()])
    }
}

/// `[-5, 5]` sampled at 101 points.
pub fn default_wigner_axis() -> Vec<f64> {
    (0..101).map(|i| -5.0 + 0.1 * i as f64).collect()
}

/// Integration step for the `y` integral. The integrand is band-limited
/// by the oscillator functions and the `e^{2ipy}` kernel, and the
/// trapezoid rule converges geometrically for such integrands.
const Y_STEP: f64 = 0.04;

/// Wigner function of one mode:
/// `W(x,p) = (1/π) ∫ ⟨x-y|ρ|x+y⟩ e^{2ipy} dy` with `ħ = 1`.
pub fn wigner_grid(state: &TruncatedFockState, mode: usize, x_grid: &[f64], p_grid: &[f64]) -> Result<WignerGrid> {
    if x_grid.is_empty() || p_grid.is_empty() {
        return Err(FockError::EmptyGrid);
    }
    if x_grid.iter().chain(p_grid).any(|v| !v.is_finite()) {
        return Err(FockError::NonFinite("wigner grid"));
    }
    let rho = partial_trace(state, &[mode])?.density_matrix();
    let dim = state.cutoff().dim();

    // ψ_n(u) is negligible once |u| exceeds the classical turning point by a few units.
    let reach = ((2 * dim + 1) as f64).sqrt() + 7.0;
    let ny = (2.0 * reach / Y_STEP).ceil() as usize + 1;
    let ys: Vec<f64> = (0..ny).map(|k| -reach + k as f64 * Y_STEP).collect();

    let kernel: Vec<Vec<C64>> = p_grid
        .iter()
        .map(|&p| ys.iter().map(|&y| C64::from_polar(1.0, 2.0 * p * y)).collect())
        .collect();

    let mut values = Vec::with_capacity(x_grid.len() * p_grid.len());
    let mut correlation = vec![C64::new(0.0, 0.0); ny];
    for &x in x_grid {
        for (k, &y) in ys.iter().enumerate() {
            let minus = hermite_functions(x - y, dim);
            let plus = hermite_functions(x + y, dim);
            let mut acc = C64::new(0.0, 0.0);
            for (m, &lm) in minus.iter().enumerate() {
                if lm == 0.0 {
                    continue;
                }
                let mut row = C64::new(0.0, 0.0);
                for (n, &pn) in plus.iter().enumerate() {
                    row += rho[(m, n)] * pn;
                }
                acc += row * lm;
            }
            correlation[k] = acc;
        }
        for kern in &kernel {
            let integral: C64 = correlation.iter().zip(kern).map(|(c, e)| c * e).sum::<C64>() * Y_STEP;
            values.push(integral.re / std::f64::consts::PI);
        }
    }
    Ok(WignerGrid { x_axis: x_grid.to_vec(), p_axis: p_grid.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{prepare_state, FockCutoff, StateSpec};
    use std::f64::consts::PI;

    /// Fock-state Wigner function `(-1)^n/π e^{-r²} L_n(2r²)`.
    fn fock_wigner(n: usize, x: f64, p: f64) -> f64 {
        let r2 = x * x + p * p;
        let u = 2.0 * r2;
        let (mut l_prev, mut l) = (1.0, 1.0 - u);
        if n == 0 {
            l = 1.0;
        }
        for k in 1..n {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - u) * l - kf * l_prev) / (kf + 1.0);
            l_prev = l;
            l = next;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign / PI * (-r2).exp() * l
    }

    #[test]
    fn fock_states_match_laguerre_form() {
        let axis = [-2.3, -0.7, 0.0, 0.4, 1.9];
        for n in 0..4 {
            let s = prepare_state(&StateSpec::Fock { n }, FockCutoff::new(6).unwrap()).unwrap();
            let w = wigner_grid(&s, 0, &axis, &axis).unwrap();
            for (i, &x) in axis.iter().enumerate() {
                for (j, &p) in axis.iter().enumerate() {
                    assert!((w.at(i, j) - fock_wigner(n, x, p)).abs() < 1e-10, "n={n} x={x} p={p}");
                }
            }
        }
    }

    #[test]
    fn coherent_peak_sits_at_sqrt_two_alpha() {
        let s = prepare_state(&StateSpec::Coherent { alpha: C64::new(1.0, 0.0) }, FockCutoff::new(20).unwrap()).unwrap();
        let axis: Vec<f64> = (0..141).map(|i| -0.5 + 0.02 * i as f64).collect();
        let w = wigner_grid(&s, 0, &axis, &[0.0]).unwrap();
        let (x, _) = w.argmax();
        assert!((x - 2f64.sqrt()).abs() <= 0.01 + 1e-12, "peak at {x}");
    }

    #[test]
    fn rejects_bad_grids() {
        let s = prepare_state(&StateSpec::Vacuum, FockCutoff::new(3).unwrap()).unwrap();
        assert_eq!(wigner_grid(&s, 0, &[], &[0.0]), Err(FockError::EmptyGrid));
        assert!(wigner_grid(&s, 0, &[f64::NAN], &[0.0]).is_err());
    }
}
