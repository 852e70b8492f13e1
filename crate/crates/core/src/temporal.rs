//! Gaussian temporal envelopes, their overlap, and beam splitting of
//! partially distinguishable wave packets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{
    build_gate, FockCutoff, FockError, GateKind, GateParams, ModeOperator, StateRepr, TruncatedFockState, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("overlap weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("quadrature did not converge (error estimate {0:e})")]
    NoConvergence(f64),
    #[error("photon number {0} exceeds the operator cutoff")]
    CutoffExceeded(usize),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type Result<T> = std::result::Result<T, TemporalError>;

/// `ψ(t) = (σ√π)^{-1/2} exp(-(t-t0)²/(2σ²)) exp(iωt)`, normalized in `L²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnvelope {
    /// Center time in seconds.
    pub t0: f64,
    /// Width in seconds.
    pub sigma: f64,
    /// Central angular frequency in rad/s.
    pub omega: f64,
}

impl GaussianEnvelope {
    pub fn new(t0: f64, sigma: f64, omega: f64) -> Result<Self> {
        let env = Self { t0, sigma, omega };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(TemporalError::InvalidEnvelope(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.t0.is_finite() || !self.omega.is_finite() {
            return Err(TemporalError::InvalidEnvelope("t0 and omega must be finite".into()));
        }
        Ok(())
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        let u = (t - self.t0) / self.sigma;
        let norm = (self.sigma * std::f64::consts::PI.sqrt()).powf(-0.5);
        C64::from_polar(norm * (-0.5 * u * u).exp(), self.omega * t)
    }

    /// Same pulse shifted by `dt` seconds.
    pub fn delayed(&self, dt: f64) -> Self {
        Self { t0: self.t0 + dt, ..*self }
    }
}

/// Closed interval of detection times; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TimeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(TemporalError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn full_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    /// `None` when the intervals are disjoint.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMethod {
    PaperFormula,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapWeight {
    pub lambda: f64,
    pub method: OverlapMethod,
}

impl OverlapWeight {
    pub fn new(lambda: f64, method: OverlapMethod) -> Result<Self> {
        if !(0.0..=1.0 + 1e-12).contains(&lambda) {
            return Err(TemporalError::WeightOutOfRange(lambda));
        }
        Ok(Self { lambda: lambda.min(1.0), method })
    }
}

/// `exp(-(t_a-t_b)²/(4σ_aσ_b)) · exp(-σ_a²σ_b²Δω²/(σ_a²+σ_b²))`.
///
/// Its frequency factor is not the Fourier overlap of the envelopes above; for
/// equal widths the exact value is `exp(-σ²Δω²/4)`, not `exp(-σ²Δω²/2)`.
/// [`overlap_lambda_quadrature`] is the one used by devices.
pub fn overlap_lambda_paper(a: &GaussianEnvelope, b: &GaussianEnvelope) -> OverlapWeight {
    let dt = a.t0 - b.t0;
    let dw = a.omega - b.omega;
    let (sa2, sb2) = (a.sigma * a.sigma, b.sigma * b.sigma);
    let lambda = (-dt * dt / (4.0 * a.sigma * b.sigma)).exp() * (-sa2 * sb2 * dw * dw / (sa2 + sb2)).exp();
    OverlapWeight { lambda, method: OverlapMethod::PaperFormula }
}

/// Center and width of the Gaussian `|ψ_a ψ_b|`.
fn product_window(a: &GaussianEnvelope, b: &GaussianEnvelope) -> (f64, f64) {
    let (sa2, sb2) = (a.sigma * a.sigma, b.sigma * b.sigma);
    let center = (a.t0 * sb2 + b.t0 * sa2) / (sa2 + sb2);
    let width = a.sigma * b.sigma / (sa2 + sb2).sqrt();
    (center, width)
}

/// Half-width of integration windows in units of the combined width.
const WINDOW_WIDTHS: f64 = 8.0;

/// `|∫ ψ_a*(t) ψ_b(t) dt|` by adaptive Gauss–Kronrod quadrature.
pub fn overlap_lambda_quadrature(a: &GaussianEnvelope, b: &GaussianEnvelope, abs_tol: f64) -> Result<OverlapWeight> {
    a.validate()?;
    b.validate()?;
    if !(abs_tol > 0.0) {
        return Err(TemporalError::InvalidEnvelope(format!("abs_tol must be positive, got {abs_tol}")));
    }
    let (center, width) = product_window(a, b);
    // Integrate in u = t - center; the dropped factor e^{iΔω·center} is a pure phase.
    let dw = b.omega - a.omega;
    let f = |u: f64| {
        let t = u + center;
        let ma = a.amplitude(t).norm();
        let mb = b.amplitude(t).norm();
        C64::from_polar(ma * mb, dw * u)
    };
    let half = WINDOW_WIDTHS * width;
    let value = integrate_adaptive(&f, -half, half, abs_tol)?;
    OverlapWeight::new(value.norm(), OverlapMethod::Quadrature)
}

/// `∫_{I∩J} |φ(s)ψ(s)|² ds`.
pub fn coincidence_weight(phi: &GaussianEnvelope, psi: &GaussianEnvelope, i: &TimeInterval, j: &TimeInterval) -> Result<f64> {
    phi.validate()?;
    psi.validate()?;
    let Some(window) = i.intersect(j) else {
        return Ok(0.0);
    };
    // |φψ|² is a Gaussian of width σ_w with 1/σ_w² = 2/σ_φ² + 2/σ_ψ².
    let (center, width) = product_window(phi, psi);
    let width = width / 2f64.sqrt();
    let lo = window.lo.max(center - WINDOW_WIDTHS * width);
    let hi = window.hi.min(center + WINDOW_WIDTHS * width);
    if lo >= hi {
        return Ok(0.0);
    }
    let f = |s: f64| C64::new(phi.amplitude(s).norm_sqr() * psi.amplitude(s).norm_sqr(), 0.0);
    Ok(integrate_adaptive(&f, lo, hi, 1e-12)?.re)
}

/// Probability of `k` photons in window `I` on the first output and `l` in
/// window `J` on the second, for inputs `|n⟩` (envelope φ) and `|m⟩`
/// (envelope ψ):
///
/// `p = w·|⟨k,l|BS|n,m⟩|² + (1 - w)·δ(k,m)·δ(l,n)`, with `w = ∫_{I∩J}|φψ|²`.
#[allow(clippy::too_many_arguments)]
pub fn detection_probability(
    n: usize,
    m: usize,
    k: usize,
    l: usize,
    i: &TimeInterval,
    j: &TimeInterval,
    phi: &GaussianEnvelope,
    psi: &GaussianEnvelope,
    bs: &ModeOperator,
) -> Result<f64> {
    for iv in [i, j] {
        TimeInterval::new(iv.lo, iv.hi)?;
    }
    if bs.arity() != 2 {
        return Err(TemporalError::Fock(FockError::ShapeMismatch("beam splitter must act on two modes".into())));
    }
    let dim = bs.cutoff().dim();
    if let Some(&bad) = [n, m, k, l].iter().find(|&&x| x >= dim) {
        return Err(TemporalError::CutoffExceeded(bad));
    }
    let w = coincidence_weight(phi, psi, i, j)?;
    if w > 1.0 + 1e-12 {
        return Err(TemporalError::WeightOutOfRange(w));
    }
    let amp = bs.matrix()[(k * dim + l, n * dim + m)];
    let pass = if k == m && l == n { 1.0 } else { 0.0 };
    Ok(w * amp.norm_sqr() + (1.0 - w) * pass)
}

/// Two-mode version of [`partial_overlap_bs_apply_on`] acting on modes (0, 1).
pub fn partial_overlap_bs_apply(
    two_mode: &TruncatedFockState,
    lambda: f64,
    theta: f64,
    phi: f64,
) -> Result<TruncatedFockState> {
    if two_mode.modes() != 2 {
        return Err(TemporalError::Fock(FockError::ShapeMismatch(format!(
            "expected a two-mode state, got {} mode(s)",
            two_mode.modes()
        ))));
    }
    partial_overlap_bs_apply_on(two_mode, 0, 1, lambda, theta, phi)
}

/// Beam splitter `ℬ(θ, φ)` between `mode_a` and `mode_b` for wave packets of
/// overlap `λ`.
///
/// Two vacuum ancillas are adjoined: `c` (the `b` port in `a`'s time bin)
/// and `d` (the `a` port in `b`'s time bin). The result is the channel
/// mixture `λ·[ℬ on (a,b)] + (1-λ)·[ℬ on (a,c) ⊗ ℬ on (d,b)]`. The ancillas
/// are then traced out with their photons credited to the output port they
/// leave through (`c` to `b`, `d` to `a`), which discards only the time-bin
/// label. Returns a density matrix over the original modes.
pub fn partial_overlap_bs_apply_on(
    state: &TruncatedFockState,
    mode_a: usize,
    mode_b: usize,
    lambda: f64,
    theta: f64,
    phi: f64,
) -> Result<TruncatedFockState> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(TemporalError::WeightOutOfRange(lambda));
    }
    let n = state.modes();
    if mode_a >= n || mode_b >= n || mode_a == mode_b {
        return Err(TemporalError::Fock(FockError::InvalidModes(format!("beam splitter modes ({mode_a}, {mode_b})"))));
    }
    let cutoff = state.cutoff();
    let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(theta, phi), cutoff)?;
    let extended = state.tensor(&TruncatedFockState::vacuum(2, cutoff))?;
    let (anc_c, anc_d) = (n, n + 1);

    let joint = extended.apply(&bs, &[mode_a, mode_b])?;
    let separate = extended.apply(&bs, &[mode_a, anc_c])?.apply(&bs, &[anc_d, mode_b])?;
    let mixed = joint.mix(&separate, lambda)?;
    Ok(merge_ancillas(&mixed, n, mode_a, mode_b, cutoff)?)
}

/// Traces out the two trailing ancilla modes, adding the photons of ancilla
/// `n` to `mode_b` and of ancilla `n + 1` to `mode_a`. Amplitude that would
/// exceed the cutoff is dropped and reported as truncation loss.
fn merge_ancillas(
    state: &TruncatedFockState,
    n: usize,
    mode_a: usize,
    mode_b: usize,
    cutoff: FockCutoff,
) -> std::result::Result<TruncatedFockState, FockError> {
    let dim = cutoff.dim();
    let total = n + 2;
    let rho = state.density_matrix();
    let out_dim = cutoff.space_dim(n);
    let anc_block = dim * dim;
    let mut out = nalgebra::DMatrix::<C64>::zeros(out_dim, out_dim);

    // Target index of (system index, ancilla photons), or None on overflow.
    let shift = |sys: usize, c: usize, d: usize| -> Option<usize> {
        let mut occ = crate::fock::index_to_occupation(sys, n, dim);
        occ[mode_b] += c;
        occ[mode_a] += d;
        (occ[mode_a] < dim && occ[mode_b] < dim).then(|| crate::fock::occupation_to_index(&occ, dim))
    };

    for anc in 0..anc_block {
        let (c, d) = (anc / dim, anc % dim);
        let targets: Vec<Option<usize>> = (0..out_dim).map(|s| shift(s, c, d)).collect();
        for (si, ti) in targets.iter().enumerate() {
            let Some(ti) = ti else { continue };
            let row = si * anc_block + anc;
            for (sj, tj) in targets.iter().enumerate() {
                let Some(tj) = tj else { continue };
                out[(*ti, *tj)] += rho[(row, sj * anc_block + anc)];
            }
        }
    }
    debug_assert_eq!(state.modes(), total);

    let kept = out.trace().re;
    let merged = TruncatedFockState::from_parts_with_loss(n, cutoff, StateRepr::Mixed(out), 1.0 - kept);
    if kept < 1.0 - 1e-12 {
        merged.normalized()
    } else {
        Ok(merged)
    }
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod estimate and its difference to the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * GK_WEIGHTS_K[7];
    let mut gauss = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * GK_WEIGHTS_K[i];
        if i % 2 == 1 {
            gauss += pair * GK_WEIGHTS_G[i / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

/// Globally adaptive bisection on the interval with the largest error.
pub(crate) fn integrate_adaptive(f: &impl Fn(f64) -> C64, a: f64, b: f64, abs_tol: f64) -> Result<C64> {
    const MAX_INTERVALS: usize = 2000;
    // Start from a few panels so narrow features are not skipped.
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut parts: Vec<(f64, f64, C64, f64)> = (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (v, e) = gk15(f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol {
            return Ok(parts.iter().map(|p| p.2).sum());
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(TemporalError::NoConvergence(err));
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{photon_number_distribution, mode_mean_photon_number};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn env(t0: f64, sigma: f64, omega: f64) -> GaussianEnvelope {
        GaussianEnvelope::new(t0, sigma, omega).unwrap()
    }

    fn cut(d: usize) -> FockCutoff {
        FockCutoff::new(d).unwrap()
    }

    #[test]
    fn envelope_is_normalized() {
        let e = env(1e-9, 2e-12, 3e14);
        let f = |t: f64| C64::new(e.amplitude(t).norm_sqr(), 0.0);
        let total = integrate_adaptive(&f, e.t0 - 10.0 * e.sigma, e.t0 + 10.0 * e.sigma, 1e-12).unwrap();
        assert!((total.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn paper_formula_values() {
        let a = env(0.0, 1.0, 0.0);
        assert_eq!(overlap_lambda_paper(&a, &a).lambda, 1.0);
        assert!((overlap_lambda_paper(&a, &a.delayed(2.0)).lambda - (-1f64).exp()).abs() < 1e-15);
        assert!(overlap_lambda_paper(&a, &a.delayed(1e3)).lambda < 1e-300);
    }

    #[test]
    fn quadrature_matches_analytic_gaussian_integrals() {
        let a = env(0.0, 1.0, 0.0);
        let tol = 1e-12;
        assert!((overlap_lambda_quadrature(&a, &a, tol).unwrap().lambda - 1.0).abs() < tol);
        // exp(-Δt²/(4σ²)) at Δt = 2, σ = 1
        let shifted = overlap_lambda_quadrature(&a, &a.delayed(2.0), tol).unwrap();
        assert!((shifted.lambda - (-1f64).exp()).abs() < 1e-10);
        // exp(-σ²Δω²/4) at Δω = 1
        let detuned = overlap_lambda_quadrature(&a, &env(0.0, 1.0, 1.0), tol).unwrap();
        assert!((detuned.lambda - (-0.25f64).exp()).abs() < 1e-10);
        assert!((detuned.lambda - 0.7788).abs() < 1e-4);
    }

    #[test]
    fn quadrature_handles_physical_units() {
        let a = env(0.0, 1e-12, 2.4e15);
        let b = env(1.5e-12, 1e-12, 2.4e15);
        let q = overlap_lambda_quadrature(&a, &b, 1e-12).unwrap().lambda;
        assert!((q - (-(1.5f64 * 1.5) / 4.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn unit_gaussian_weight() {
        let phi = env(0.0, FRAC_1_SQRT_2, 0.0);
        let full = TimeInterval::full_line();
        let w = coincidence_weight(&phi, &phi, &full, &full).unwrap();
        assert!((w - 1.0 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hom_mixture_probability() {
        let phi = env(0.0, FRAC_1_SQRT_2, 0.0);
        let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(FRAC_PI_4, 0.0), cut(3)).unwrap();
        let full = TimeInterval::full_line();
        let p = detection_probability(1, 1, 1, 1, &full, &full, &phi, &phi, &bs).unwrap();
        assert!((p - (1.0 - 1.0 / PI.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn disjoint_windows_pass_through() {
        let phi = env(0.0, FRAC_1_SQRT_2, 0.0);
        let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(FRAC_PI_4, 0.0), cut(3)).unwrap();
        let i = TimeInterval::new(-1.0, 0.0).unwrap();
        let j = TimeInterval::new(0.5, 1.0).unwrap();
        assert_eq!(detection_probability(1, 0, 0, 1, &i, &j, &phi, &phi, &bs).unwrap(), 1.0);
        assert!(TimeInterval::new(1.0, 0.0).is_err());
        let bad = TimeInterval { lo: 2.0, hi: 1.0 };
        assert!(matches!(
            detection_probability(1, 0, 0, 1, &bad, &j, &phi, &phi, &bs),
            Err(TemporalError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn detection_probability_sums_to_one() {
        let phi = env(0.0, FRAC_1_SQRT_2, 0.0);
        let psi = env(0.3, 0.9, 0.0);
        let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(0.6, 0.2), cut(5)).unwrap();
        let full = TimeInterval::full_line();
        for (n, m) in [(1, 1), (2, 1), (1, 0)] {
            let mut total = 0.0;
            for k in 0..=(n + m) {
                for l in 0..=(n + m - k) {
                    total += detection_probability(n, m, k, l, &full, &full, &phi, &psi, &bs).unwrap();
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "({n},{m}) total {total}");
        }
    }

    #[test]
    fn full_overlap_reduces_to_hom() {
        let s = TruncatedFockState::basis(&[1, 1], cut(3)).unwrap();
        let out = partial_overlap_bs_apply(&s, 1.0, FRAC_PI_4, 0.0).unwrap();
        let t = photon_number_distribution(&out);
        assert!((t.get(&[2, 0]) - 0.5).abs() < 1e-12);
        assert!((t.get(&[0, 2]) - 0.5).abs() < 1e-12);
        assert!(t.get(&[1, 1]) < 1e-12);
    }

    #[test]
    fn distinguishable_single_photon_splits_evenly() {
        let s = TruncatedFockState::basis(&[1, 0], cut(3)).unwrap();
        let out = partial_overlap_bs_apply(&s, 0.0, FRAC_PI_4, 0.0).unwrap();
        assert!((mode_mean_photon_number(&out, 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((mode_mean_photon_number(&out, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn half_overlap_coincidence_is_branch_mean() {
        let s = TruncatedFockState::basis(&[1, 1], cut(3)).unwrap();
        let coinc = |lambda: f64| {
            let out = partial_overlap_bs_apply(&s, lambda, FRAC_PI_4, 0.0).unwrap();
            photon_number_distribution(&out).get(&[1, 1])
        };
        let (c0, c1, ch) = (coinc(0.0), coinc(1.0), coinc(0.5));
        assert!((c0 - 0.5).abs() < 1e-12);
        assert!((ch - 0.5 * (c0 + c1)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_lambda() {
        let s = TruncatedFockState::basis(&[1, 1], cut(3)).unwrap();
        assert!(matches!(partial_overlap_bs_apply(&s, 1.5, FRAC_PI_4, 0.0), Err(TemporalError::WeightOutOfRange(_))));
        assert!(OverlapWeight::new(-0.1, OverlapMethod::Quadrature).is_err());
    }
}
