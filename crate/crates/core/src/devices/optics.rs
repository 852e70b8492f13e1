use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::params::{ParamError, ParamResult, ParamSpec, ParamType, Params};
use super::{take_quantum, DeviceInfo, SPEED_OF_LIGHT};
use crate::des::{
    Device, DesError, DeviceContext, Emission, PortSpec, QuantumPayload, QuantumRegistry, Signal, SimTime,
    GENERIC_QUANTUM_SIGNAL, PHOTONIC_QUANTUM_SIGNAL,
};
use crate::fock::{build_gate, GateKind, GateParams, C64};

/// Digits used for the phase reduction `ωτ mod 2π`.
const PHASE_PRECISION: u32 = 36;
const TWO_PI: &str = "6.28318530717958647692528676655900577";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    /// Meters, as a decimal.
    pub length: SimTime,
    pub refractive_index: f64,
}

impl FiberParams {
    pub fn new(length: SimTime, refractive_index: f64) -> Result<Self, DesError> {
        if length.is_negative() {
            return Err(DesError::device("ideal_fiber", "length must be non-negative"));
        }
        if !(refractive_index >= 1.0 && refractive_index.is_finite()) {
            return Err(DesError::device("ideal_fiber", "refractive index must be at least 1"));
        }
        Ok(Self { length, refractive_index })
    }

    /// `τ = l·n / c` in decimal arithmetic.
    pub fn delay(&self, precision: u32) -> Result<SimTime, DesError> {
        let n = SimTime::from_f64(self.refractive_index)?;
        let c = SimTime::new(SPEED_OF_LIGHT as i128, 0);
        self.length.mul_with_precision(&n, precision)?.div_with_precision(&c, precision)
    }
}

/// `ωτ` reduced to `[0, 2π)`, with the reduction done in decimal so large
/// products keep their fractional part.
pub fn fiber_phase(omega: f64, tau: SimTime) -> Result<f64, DesError> {
    let w = SimTime::from_f64(omega)?;
    let two_pi = SimTime::parse_with_precision(TWO_PI, PHASE_PRECISION)?;
    let x = w.mul_with_precision(&tau, PHASE_PRECISION)?;
    let turns = x.div_with_precision(&two_pi, PHASE_PRECISION)?.trunc();
    let rest = x.sub_with_precision(&turns.mul_with_precision(&two_pi, PHASE_PRECISION)?, PHASE_PRECISION)?;
    Ok(rest.to_f64().rem_euclid(2.0 * std::f64::consts::PI))
}

/// Applies `exp(iωτ n̂)` to the signal's mode and delays it by `τ`.
pub fn fiber_transform(
    registry: &mut QuantumRegistry,
    signal: QuantumPayload,
    params: &FiberParams,
    t_in: SimTime,
    precision: u32,
) -> Result<(QuantumPayload, SimTime), DesError> {
    let tau = params.delay(precision)?;
    if tau == SimTime::ZERO {
        return Ok((signal, t_in));
    }
    let phase = fiber_phase(signal.envelope.omega, tau)?;
    let gate = build_gate(GateKind::Rotation, &GateParams::rotation(phase), registry.cutoff())?;
    registry.apply(&gate, &[signal.mode])?;
    let envelope = signal.envelope.delayed(tau.to_f64());
    Ok((QuantumPayload { mode: signal.mode, envelope }, t_in.add_with_precision(&tau, precision)?))
}

fn io_ports() -> Vec<PortSpec> {
    vec![PortSpec::input("in", GENERIC_QUANTUM_SIGNAL), PortSpec::output("out", PHOTONIC_QUANTUM_SIGNAL)]
}

pub struct IdealFiber {
    params: FiberParams,
}

impl Device for IdealFiber {
    fn type_name(&self) -> &'static str {
        "ideal_fiber"
    }

    fn ports(&self) -> Vec<PortSpec> {
        io_ports()
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, mut inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        let q = take_quantum(ctx, &mut inputs, "in")?;
        let (out, t) = fiber_transform(ctx.quantum, q, &self.params, ctx.now, ctx.precision)?;
        ctx.note("delay", json!(t.checked_sub(&ctx.now)?));
        Ok(vec![Emission::new("out", Signal::photonic(out.mode, out.envelope), t)])
    }
}

pub(crate) fn fiber_info() -> DeviceInfo {
    DeviceInfo {
        type_name: "ideal_fiber",
        description: "Lossless fiber: delay l*n/c and phase exp(i*omega*tau*n)",
        ports: io_ports(),
        parameters: vec![
            ParamSpec::new("length", ParamType::Decimal, json!("0"), "fiber length (decimal)").unit("m"),
            ParamSpec::new("refractive_index", ParamType::Number, json!(1.45), "core refractive index"),
        ],
    }
}

pub(crate) fn build_fiber(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &fiber_info().parameters)?;
    let length = p.decimal("length", SimTime::ZERO)?;
    let n = p.number("refractive_index", 1.45)?;
    let params = FiberParams::new(length, n).map_err(|e| {
        let name = if length.is_negative() { "length" } else { "refractive_index" };
        ParamError::new(name, e.to_string())
    })?;
    Ok(Box::new(IdealFiber { params }))
}

/// Single-mode gate device: phase shifter or displacer.
pub struct ModeGate {
    type_name: &'static str,
    kind: GateKind,
    params: GateParams,
}

impl Device for ModeGate {
    fn type_name(&self) -> &'static str {
        self.type_name
    }

    fn ports(&self) -> Vec<PortSpec> {
        io_ports()
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, mut inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        let q = take_quantum(ctx, &mut inputs, "in")?;
        let gate = build_gate(self.kind, &self.params, ctx.cutoff())?;
        ctx.quantum.apply(&gate, &[q.mode])?;
        Ok(vec![Emission::new("out", Signal::photonic(q.mode, q.envelope), ctx.now)])
    }
}

pub(crate) fn phase_shifter_info() -> DeviceInfo {
    DeviceInfo {
        type_name: "phase_shifter",
        description: "Phase shift exp(i*phi*n)",
        ports: io_ports(),
        parameters: vec![ParamSpec::new("phi", ParamType::Number, json!(0.0), "phase").unit("rad")],
    }
}

pub(crate) fn displacer_info() -> DeviceInfo {
    DeviceInfo {
        type_name: "displacer",
        description: "Displacement D(alpha)",
        ports: io_ports(),
        parameters: vec![ParamSpec::new("alpha", ParamType::Complex, json!({ "re": 0.0, "im": 0.0 }), "displacement")],
    }
}

pub(crate) fn build_phase_shifter(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &phase_shifter_info().parameters)?;
    let phi = p.number("phi", 0.0)?;
    Ok(Box::new(ModeGate { type_name: "phase_shifter", kind: GateKind::Rotation, params: GateParams::rotation(phi) }))
}

pub(crate) fn build_displacer(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &displacer_info().parameters)?;
    let alpha = p.complex("alpha", C64::new(0.0, 0.0))?;
    Ok(Box::new(ModeGate { type_name: "displacer", kind: GateKind::Displacement, params: GateParams::displacement(alpha) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{prepare_state, FockCutoff, StateSpec};
    use crate::temporal::GaussianEnvelope;

    fn t(s: &str) -> SimTime {
        s.parse().unwrap()
    }

    #[test]
    fn one_meter_delay() {
        let tau = FiberParams::new(t("1"), 1.45).unwrap().delay(24).unwrap();
        // τ·c reproduces l·n to the working precision.
        let back = tau.checked_mul(&SimTime::new(299_792_458, 0)).unwrap();
        assert!((back.to_f64() - 1.45).abs() < 1e-20);
        assert!((tau.to_f64() - 1.45 / 299_792_458.0).abs() < 1e-24);
        // 1.45 / 299792458 to 24 significant digits, computed independently.
        assert_eq!(tau.to_string(), "0.00000000483667938037320471884586");
    }

    #[test]
    fn zero_length_is_identity() {
        let cut = FockCutoff::new(5).unwrap();
        let mut reg = QuantumRegistry::new(cut);
        let mode = reg.insert(prepare_state(&StateSpec::Fock { n: 1 }, cut).unwrap()).unwrap()[0];
        let env = GaussianEnvelope::new(0.0, 1e-12, 1e15).unwrap();
        let before = reg.reduced_state(&[mode]).unwrap();
        let q = QuantumPayload { mode, envelope: env };
        let (out, time) = fiber_transform(&mut reg, q, &FiberParams::new(SimTime::ZERO, 1.45).unwrap(), t("3e-9"), 24).unwrap();
        assert_eq!(time, t("3e-9"));
        assert_eq!(out, q);
        assert_eq!(reg.reduced_state(&[mode]).unwrap(), before);
    }

    #[test]
    fn phase_reduction_matches_f64_for_small_products() {
        let phase = fiber_phase(2.0, t("1.5")).unwrap();
        assert!((phase - 3.0).abs() < 1e-15);
        let wrapped = fiber_phase(1.0, t("7")).unwrap();
        assert!((wrapped - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FiberParams::new(t("-1"), 1.45).is_err());
        assert!(FiberParams::new(t("1"), 0.9).is_err());
        let err = build_fiber(&json!({ "refractive_index": 0.5 })).err().unwrap();
        assert_eq!(err.parameter.as_deref(), Some("refractive_index"));
    }
}
