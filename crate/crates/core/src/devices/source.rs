use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::params::{ParamResult, ParamSpec, ParamType, Params};
use super::{DeviceInfo, SPEED_OF_LIGHT};
use crate::des::{Device, DesError, DeviceContext, Emission, PortSpec, QuantumRegistry, Signal, SimTime, PHOTONIC_QUANTUM_SIGNAL};
use crate::fock::{mean_photon_number, prepare_state, StateSpec, C64};
use crate::temporal::GaussianEnvelope;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    SinglePhoton,
    Coherent { alpha: C64 },
}

/// Creates the source state in the registry and returns the signal leaving
/// the `out` port at `t`.
pub fn source_emit(
    registry: &mut QuantumRegistry,
    kind: SourceKind,
    envelope: GaussianEnvelope,
    t: SimTime,
) -> Result<Emission, DesError> {
    envelope.validate()?;
    let spec = match kind {
        SourceKind::SinglePhoton => StateSpec::Fock { n: 1 },
        SourceKind::Coherent { alpha } => StateSpec::Coherent { alpha },
    };
    let state = prepare_state(&spec, registry.cutoff())?;
    let mode = registry.insert(state)?[0];
    Ok(Emission::new("out", Signal::photonic(mode, envelope), t))
}

/// 1550 nm carrier.
pub fn default_omega() -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / 1.55e-6
}

pub(crate) fn envelope_specs() -> Vec<ParamSpec> {
    vec![
        ParamSpec::new("emit_time", ParamType::Decimal, json!("0"), "simulation time of the emission").unit("s"),
        ParamSpec::new("delay", ParamType::Number, json!(0.0), "offset of the envelope center from emit_time").unit("s"),
        ParamSpec::new("sigma", ParamType::Number, json!(1e-12), "temporal width of the Gaussian envelope").unit("s"),
        ParamSpec::new("omega", ParamType::Number, json!(default_omega()), "carrier angular frequency").unit("rad/s"),
    ]
}

/// Emission time and the envelope centered at `emit_time + delay`.
pub(crate) fn parse_envelope(p: &Params<'_>) -> ParamResult<(SimTime, GaussianEnvelope)> {
    use super::params::ParamError;
    let emit = p.decimal("emit_time", SimTime::ZERO)?;
    if emit.is_negative() {
        return Err(ParamError::new("emit_time", "emit_time must be non-negative"));
    }
    let delay = p.number("delay", 0.0)?;
    let sigma = p.number("sigma", 1e-12)?;
    if sigma <= 0.0 {
        return Err(ParamError::new("sigma", "sigma must be positive"));
    }
    let omega = p.number("omega", default_omega())?;
    let env = GaussianEnvelope::new(emit.to_f64() + delay, sigma, omega).map_err(|e| ParamError::new("sigma", e.to_string()))?;
    Ok((emit, env))
}

/// Emits one pulse at `emit_time`.
pub struct Source {
    kind: SourceKind,
    emit: SimTime,
    envelope: GaussianEnvelope,
    mean_photons: Option<f64>,
}

impl Source {
    pub fn new(kind: SourceKind, emit: SimTime, envelope: GaussianEnvelope) -> Self {
        Self { kind, emit, envelope, mean_photons: None }
    }
}

impl Device for Source {
    fn type_name(&self) -> &'static str {
        match self.kind {
            SourceKind::SinglePhoton => "single_photon_source",
            SourceKind::Coherent { .. } => "coherent_source",
        }
    }

    fn ports(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("out", PHOTONIC_QUANTUM_SIGNAL)]
    }

    fn init(&mut self, ctx: &mut DeviceContext<'_>) -> Result<Vec<Emission>, DesError> {
        let e = source_emit(ctx.quantum, self.kind, self.envelope, self.emit)?;
        let mode = e.signal.quantum().expect("photonic").mode;
        let n = mean_photon_number(&ctx.quantum.reduced_state(&[mode])?);
        self.mean_photons = Some(n);
        ctx.note("mean_photon_number", json!(n));
        Ok(vec![e])
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, _: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        Err(ctx.error("sources have no inputs"))
    }

    fn report(&self) -> Option<Value> {
        self.mean_photons.map(|n| json!({ "mean_photon_number": n }))
    }
}

pub(crate) fn single_photon_info() -> DeviceInfo {
    DeviceInfo {
        type_name: "single_photon_source",
        description: "Deterministic single-photon source emitting |1> once",
        ports: vec![PortSpec::output("out", PHOTONIC_QUANTUM_SIGNAL)],
        parameters: envelope_specs(),
    }
}

pub(crate) fn coherent_info() -> DeviceInfo {
    let mut parameters = vec![ParamSpec::new("alpha", ParamType::Complex, json!({ "re": 0.4, "im": 0.0 }), "coherent amplitude")];
    parameters.extend(envelope_specs());
    DeviceInfo {
        type_name: "coherent_source",
        description: "Laser pulse in the coherent state |alpha>",
        ports: vec![PortSpec::output("out", PHOTONIC_QUANTUM_SIGNAL)],
        parameters,
    }
}

pub(crate) fn build_single_photon(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &single_photon_info().parameters)?;
    let (emit, env) = parse_envelope(&p)?;
    Ok(Box::new(Source::new(SourceKind::SinglePhoton, emit, env)))
}

pub(crate) fn build_coherent(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &coherent_info().parameters)?;
    let alpha = p.complex("alpha", C64::new(0.4, 0.0))?;
    let (emit, env) = parse_envelope(&p)?;
    Ok(Box::new(Source::new(SourceKind::Coherent { alpha }, emit, env)))
}
