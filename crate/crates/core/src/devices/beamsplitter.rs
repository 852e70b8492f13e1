use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::params::{ParamResult, ParamSpec, ParamType, Params};
use super::DeviceInfo;
use crate::des::{
    Device, DesError, DeviceContext, Emission, PortSpec, QuantumPayload, QuantumRegistry, Signal, GENERIC_QUANTUM_SIGNAL,
    PHOTONIC_QUANTUM_SIGNAL,
};
use crate::fock::{build_gate, GateKind, GateParams};
use crate::temporal::{overlap_lambda_paper, overlap_lambda_quadrature, partial_overlap_bs_apply_on, OverlapMethod};

/// Absolute tolerance of the overlap quadrature.
const OVERLAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterParams {
    pub theta: f64,
    pub phi: f64,
    pub overlap: OverlapMethod,
}

impl Default for BeamSplitterParams {
    fn default() -> Self {
        Self { theta: FRAC_PI_4, phi: 0.0, overlap: OverlapMethod::Quadrature }
    }
}

/// Result of one beam-splitter interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterOutput {
    pub out1: QuantumPayload,
    pub out2: QuantumPayload,
    /// Envelope overlap used; `None` when only one input was present.
    pub lambda: Option<f64>,
}

/// Mixes the inputs present at one instant. A missing input is vacuum; two
/// inputs interfere according to the overlap of their envelopes.
pub fn beamsplitter_device(
    registry: &mut QuantumRegistry,
    in1: Option<QuantumPayload>,
    in2: Option<QuantumPayload>,
    params: &BeamSplitterParams,
) -> Result<BeamSplitterOutput, DesError> {
    let gate = || build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(params.theta, params.phi), registry.cutoff());
    match (in1, in2) {
        (Some(a), Some(b)) => {
            let lambda = match params.overlap {
                OverlapMethod::Quadrature => overlap_lambda_quadrature(&a.envelope, &b.envelope, OVERLAP_TOL)?.lambda,
                OverlapMethod::PaperFormula => overlap_lambda_paper(&a.envelope, &b.envelope).lambda,
            };
            let (theta, phi) = (params.theta, params.phi);
            registry.update(&[a.mode, b.mode], |state, pos| {
                Ok(partial_overlap_bs_apply_on(state, pos[0], pos[1], lambda, theta, phi)?)
            })?;
            Ok(BeamSplitterOutput { out1: a, out2: b, lambda: Some(lambda) })
        }
        (Some(a), None) => {
            let g = gate()?;
            let vac = registry.insert_vacuum();
            registry.apply(&g, &[a.mode, vac])?;
            Ok(BeamSplitterOutput { out1: a, out2: QuantumPayload { mode: vac, envelope: a.envelope }, lambda: None })
        }
        (None, Some(b)) => {
            let g = gate()?;
            let vac = registry.insert_vacuum();
            registry.apply(&g, &[vac, b.mode])?;
            Ok(BeamSplitterOutput { out1: QuantumPayload { mode: vac, envelope: b.envelope }, out2: b, lambda: None })
        }
        (None, None) => Err(DesError::device("beam_splitter", "no quantum input")),
    }
}

fn ports() -> Vec<PortSpec> {
    vec![
        PortSpec::input("in1", GENERIC_QUANTUM_SIGNAL),
        PortSpec::input("in2", GENERIC_QUANTUM_SIGNAL),
        PortSpec::output("out1", PHOTONIC_QUANTUM_SIGNAL),
        PortSpec::output("out2", PHOTONIC_QUANTUM_SIGNAL),
    ]
}

pub struct BeamSplitter {
    params: BeamSplitterParams,
    lambdas: Vec<f64>,
}

impl Device for BeamSplitter {
    fn type_name(&self) -> &'static str {
        "beam_splitter"
    }

    fn ports(&self) -> Vec<PortSpec> {
        ports()
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        let mut quantum = Vec::new();
        for (port, sig) in &inputs {
            let q = sig.quantum().ok_or_else(|| ctx.error(format!("classical signal on {port}")))?;
            quantum.push(q);
        }
        if quantum.len() > 2 {
            return Err(ctx.error(format!("{} quantum inputs; at most two are supported", quantum.len())));
        }
        let pick = |port: &str| inputs.get(port).and_then(Signal::quantum).copied();
        let out = beamsplitter_device(ctx.quantum, pick("in1"), pick("in2"), &self.params)
            .map_err(|e| ctx.error(e.to_string()))?;
        if let Some(l) = out.lambda {
            self.lambdas.push(l);
            ctx.note("lambda", json!(l));
        }
        Ok(vec![
            Emission::new("out1", Signal::photonic(out.out1.mode, out.out1.envelope), ctx.now),
            Emission::new("out2", Signal::photonic(out.out2.mode, out.out2.envelope), ctx.now),
        ])
    }

    fn report(&self) -> Option<Value> {
        Some(json!({ "lambda": self.lambdas }))
    }
}

pub(crate) fn info() -> DeviceInfo {
    DeviceInfo {
        type_name: "beam_splitter",
        description: "Non-polarizing beam splitter B(theta, phi) aware of temporal-mode overlap",
        ports: ports(),
        parameters: vec![
            ParamSpec::new("theta", ParamType::Number, json!(FRAC_PI_4), "mixing angle; pi/4 is 50:50").unit("rad"),
            ParamSpec::new("phi", ParamType::Number, json!(0.0), "phase").unit("rad"),
            ParamSpec::new("overlap", ParamType::Choice, json!("quadrature"), "how the envelope overlap is computed")
                .choices(&["quadrature", "paper_formula"]),
        ],
    }
}

pub(crate) fn build(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &info().parameters)?;
    let overlap = match p.choice("overlap", &["quadrature", "paper_formula"], "quadrature")? {
        "paper_formula" => OverlapMethod::PaperFormula,
        _ => OverlapMethod::Quadrature,
    };
    let params = BeamSplitterParams { theta: p.number("theta", FRAC_PI_4)?, phi: p.number("phi", 0.0)?, overlap };
    Ok(Box::new(BeamSplitter { params, lambdas: Vec::new() }))
}
