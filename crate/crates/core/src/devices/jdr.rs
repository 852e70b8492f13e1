//! Sequential joint-detection receiver for BPSK-encoded coherent pulses.
//!
//! Bit `b` is sent as amplitude `(-1)^b·α`. For each guess `g` in turn the
//! receiver displaces pulse `p` by `-(-1)^{g_p}·α`, which maps a matching
//! pulse to vacuum, and tests the vacuum projector `M_Y` on all pulses.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::params::{ParamError, ParamResult, ParamSpec, ParamType, Params};
use super::DeviceInfo;
use crate::des::{
    Device, DesError, DeviceContext, Emission, ModeId, PortSpec, QuantumPayload, Signal, DETECTION_SIGNAL,
    GENERIC_QUANTUM_SIGNAL,
};
use crate::fock::{
    build_gate, default_wigner_axis, partial_trace, wigner_grid, FockCutoff, GateKind, GateParams, ModeOperator,
    StateRepr, TruncatedFockState, WignerGrid, C64,
};

/// `p(Y)` at or above this counts as a certain detection.
const CERTAIN: f64 = 1.0 - 1e-6;

/// `M_Y = |0⟩⟨0|^{⊗P}` and `M_N = 1 - M_Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PovmPair {
    pub pulses: usize,
    pub cutoff: FockCutoff,
}

impl PovmPair {
    pub fn new(pulses: usize, cutoff: FockCutoff) -> Self {
        Self { pulses, cutoff }
    }

    fn check(&self, state: &TruncatedFockState) -> Result<(), DesError> {
        if state.modes() != self.pulses || state.cutoff() != self.cutoff {
            return Err(DesError::device("jdr_receiver", "state does not match the POVM"));
        }
        Ok(())
    }

    /// `Tr[ρ M_Y]`, the population of the all-vacuum basis state.
    pub fn probability_yes(&self, state: &TruncatedFockState) -> Result<f64, DesError> {
        self.check(state)?;
        Ok(match state.repr() {
            StateRepr::Pure(v) => v[0].norm_sqr(),
            StateRepr::Mixed(m) => m[(0, 0)].re,
        })
    }

    /// Lüders update for outcome N: `M_N ρ M_N / Tr[ρ M_N]`. Returns `p(N)` too.
    pub fn project_no(&self, state: &TruncatedFockState) -> Result<(f64, TruncatedFockState), DesError> {
        self.check(state)?;
        let removed = match state.repr() {
            StateRepr::Pure(v) => {
                let mut w = v.clone();
                w[0] = C64::new(0.0, 0.0);
                TruncatedFockState::from_parts(self.pulses, self.cutoff, StateRepr::Pure(w))
            }
            StateRepr::Mixed(m) => {
                let mut r = m.clone();
                r.row_mut(0).fill(C64::new(0.0, 0.0));
                r.column_mut(0).fill(C64::new(0.0, 0.0));
                TruncatedFockState::from_parts(self.pulses, self.cutoff, StateRepr::Mixed(r))
            }
        };
        let p_no = removed.trace();
        if p_no <= f64::MIN_POSITIVE {
            return Err(DesError::device("jdr_receiver", "outcome N has zero probability"));
        }
        Ok((p_no, removed.normalized()?))
    }

    /// Dense `(M_Y, M_N)`; only sensible for small spaces.
    pub fn matrices(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let n = self.cutoff.space_dim(self.pulses);
        let mut yes = DMatrix::zeros(n, n);
        yes[(0, 0)] = C64::new(1.0, 0.0);
        let no = DMatrix::identity(n, n) - &yes;
        (yes, no)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuessOrder {
    /// `000, 001, …, 111`.
    #[serde(rename = "from_000")]
    From000,
    /// `001, 010, …, 111, 000`.
    #[serde(rename = "from_001")]
    From001,
}

impl GuessOrder {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "from_000" => Some(Self::From000),
            "from_001" => Some(Self::From001),
            _ => None,
        }
    }

    /// Codeword indices in the order they are tried.
    pub fn sequence(self, pulses: usize) -> Vec<usize> {
        let n = 1usize << pulses;
        match self {
            Self::From000 => (0..n).collect(),
            Self::From001 => (1..n).chain(std::iter::once(0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JdrMode {
    /// Reports `p(Y)` for every guess; RNG-free.
    Probability,
    /// Draws Y/N outcomes and stops at the first Y.
    Sampled,
}

/// Bits of `m` with pulse 0 as the most significant.
pub fn codeword_bits(m: usize, pulses: usize) -> Vec<u8> {
    (0..pulses).map(|p| ((m >> (pulses - 1 - p)) & 1) as u8).collect()
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Outcome of testing one guess.
#[derive(Debug, Clone, PartialEq)]
pub struct JdrStep {
    pub p_yes: f64,
    /// State after the nulling displacements, before measurement.
    pub displaced: TruncatedFockState,
    /// The displaced state with the displacements undone.
    pub restored: TruncatedFockState,
}

struct Displacements {
    plus: ModeOperator,
    minus: ModeOperator,
}

impl Displacements {
    fn new(alpha: f64, cutoff: FockCutoff) -> Result<Self, DesError> {
        let d = |a: f64| build_gate(GateKind::Displacement, &GateParams::displacement(C64::new(a, 0.0)), cutoff);
        Ok(Self { plus: d(alpha)?, minus: d(-alpha)? })
    }

    /// `D(s·α)` on each pulse, where `s_p = ±1`.
    fn apply(&self, state: &TruncatedFockState, signs: &[f64]) -> Result<TruncatedFockState, DesError> {
        let mut s = state.clone();
        for (p, &sg) in signs.iter().enumerate() {
            s = s.apply(if sg > 0.0 { &self.plus } else { &self.minus }, &[p])?;
        }
        Ok(s)
    }
}

fn step_with(d: &Displacements, povm: &PovmPair, state: &TruncatedFockState, guess: &[u8]) -> Result<JdrStep, DesError> {
    if guess.len() != state.modes() {
        return Err(DesError::device(
            "jdr_receiver",
            format!("guess has {} bits for {} pulses", guess.len(), state.modes()),
        ));
    }
    let null: Vec<f64> = guess.iter().map(|&g| -sign(g)).collect();
    let undo: Vec<f64> = guess.iter().map(|&g| sign(g)).collect();
    let displaced = d.apply(state, &null)?;
    let p_yes = povm.probability_yes(&displaced)?;
    let restored = d.apply(&displaced, &undo)?;
    Ok(JdrStep { p_yes, displaced, restored })
}

/// One receiver test of `guess` against the `P`-pulse `state`.
pub fn jdr_receiver_step(state: &TruncatedFockState, guess: &[u8], alpha: f64) -> Result<JdrStep, DesError> {
    let d = Displacements::new(alpha, state.cutoff())?;
    step_with(&d, &PovmPair::new(state.modes(), state.cutoff()), state, guess)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JdrRow {
    /// 1-based position in the guess order.
    pub round: usize,
    pub guess: String,
    /// Probability mode: `p(Y)` on the received state. Sampled mode: `p(Y)`
    /// on the state left by the previous N outcomes.
    pub p_yes: f64,
    /// Probability mode only: `p(Y)` conditioned on N for all earlier rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_yes_after_no: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JdrSnapshot {
    pub label: String,
    pub pulse: usize,
    pub grid: WignerGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JdrTranscript {
    pub pulses: usize,
    pub alpha: f64,
    pub mode: JdrMode,
    pub order: GuessOrder,
    pub rows: Vec<JdrRow>,
    /// Detected codeword: the first certain row in probability mode, the
    /// first Y in sampled mode.
    pub declared: Option<String>,
    pub stop_round: Option<usize>,
    pub snapshots: Vec<JdrSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub alpha: f64,
    pub order: GuessOrder,
    pub mode: JdrMode,
    /// Phase-space axis for Wigner snapshots; `None` disables them.
    pub snapshot_axis: Option<Vec<f64>>,
}

fn snapshot(state: &TruncatedFockState, label: &str, axis: &Option<Vec<f64>>, out: &mut Vec<JdrSnapshot>) -> Result<(), DesError> {
    let Some(axis) = axis else { return Ok(()) };
    for pulse in 0..state.modes() {
        let single = partial_trace(state, &[pulse])?;
        let grid = wigner_grid(&single, 0, axis, axis)?;
        out.push(JdrSnapshot { label: label.into(), pulse, grid });
    }
    Ok(())
}

/// Runs the sequential decoder on the received `P`-pulse state.
pub fn decode<R: Rng + ?Sized>(state: &TruncatedFockState, cfg: &DecoderConfig, rng: &mut R) -> Result<JdrTranscript, DesError> {
    let pulses = state.modes();
    if pulses == 0 || pulses > 16 {
        return Err(DesError::device("jdr_receiver", format!("unsupported pulse count {pulses}")));
    }
    let d = Displacements::new(cfg.alpha, state.cutoff())?;
    let povm = PovmPair::new(pulses, state.cutoff());
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut declared = None;
    let mut stop_round = None;
    snapshot(state, "after_encoding", &cfg.snapshot_axis, &mut snapshots)?;

    // State conditioned on N for every earlier guess.
    let mut branch = state.clone();
    for (k, index) in cfg.order.sequence(pulses).into_iter().enumerate() {
        let round = k + 1;
        let bits = codeword_bits(index, pulses);
        let guess = bits_to_string(&bits);
        match cfg.mode {
            JdrMode::Probability => {
                let fresh = step_with(&d, &povm, state, &bits)?;
                let mut row = JdrRow { round, guess: guess.clone(), p_yes: fresh.p_yes, p_yes_after_no: None, outcome: None };
                if stop_round.is_none() {
                    let seq = step_with(&d, &povm, &branch, &bits)?;
                    row.p_yes_after_no = Some(seq.p_yes);
                    if fresh.p_yes >= CERTAIN {
                        stop_round = Some(round);
                        declared = Some(guess);
                    } else {
                        branch = condition_on_no(&d, &povm, &seq, &bits)?;
                        snapshot(&branch, &format!("after_no_round_{round}"), &cfg.snapshot_axis, &mut snapshots)?;
                    }
                }
                rows.push(row);
            }
            JdrMode::Sampled => {
                let seq = step_with(&d, &povm, &branch, &bits)?;
                let yes = rng.gen::<f64>() < seq.p_yes;
                rows.push(JdrRow {
                    round,
                    guess: guess.clone(),
                    p_yes: seq.p_yes,
                    p_yes_after_no: None,
                    outcome: Some(if yes { "Y" } else { "N" }.into()),
                });
                if yes {
                    stop_round = Some(round);
                    declared = Some(guess);
                    break;
                }
                branch = condition_on_no(&d, &povm, &seq, &bits)?;
                snapshot(&branch, &format!("after_no_round_{round}"), &cfg.snapshot_axis, &mut snapshots)?;
            }
        }
    }
    Ok(JdrTranscript { pulses, alpha: cfg.alpha, mode: cfg.mode, order: cfg.order, rows, declared, stop_round, snapshots })
}

/// Applies `M_N` in the displaced frame and undoes the displacement.
fn condition_on_no(d: &Displacements, povm: &PovmPair, step: &JdrStep, bits: &[u8]) -> Result<TruncatedFockState, DesError> {
    let (_, projected) = povm.project_no(&step.displaced)?;
    let undo: Vec<f64> = bits.iter().map(|&g| sign(g)).collect();
    d.apply(&projected, &undo)
}

/// Product state `⊗_p |(-1)^{b_p} α⟩` as prepared by the transmitter.
pub fn encoded_state(bits: &[u8], alpha: f64, cutoff: FockCutoff) -> Result<TruncatedFockState, DesError> {
    let mut state: Option<TruncatedFockState> = None;
    for &b in bits {
        let pulse = crate::fock::prepare_state(&crate::fock::StateSpec::Coherent { alpha: C64::new(sign(b) * alpha, 0.0) }, cutoff)?;
        state = Some(match state {
            None => pulse,
            Some(s) => s.tensor(&pulse)?,
        });
    }
    state.ok_or_else(|| DesError::device("jdr_receiver", "no pulses"))
}

fn ports(pulses: usize) -> Vec<PortSpec> {
    let mut v: Vec<PortSpec> = (0..pulses).map(|p| PortSpec::input(&format!("in{p}"), GENERIC_QUANTUM_SIGNAL)).collect();
    v.push(PortSpec::output("out", DETECTION_SIGNAL));
    v
}

/// Collects `P` pulses (possibly over several events) and decodes them.
pub struct JdrReceiver {
    pulses: usize,
    config: DecoderConfig,
    pending: BTreeMap<usize, QuantumPayload>,
    transcript: Option<JdrTranscript>,
}

impl JdrReceiver {
    pub fn new(pulses: usize, config: DecoderConfig) -> Self {
        Self { pulses, config, pending: BTreeMap::new(), transcript: None }
    }
}

impl Device for JdrReceiver {
    fn type_name(&self) -> &'static str {
        "jdr_receiver"
    }

    fn ports(&self) -> Vec<PortSpec> {
        ports(self.pulses)
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        for (port, sig) in inputs {
            let p: usize = port.strip_prefix("in").and_then(|s| s.parse().ok()).ok_or_else(|| ctx.error(format!("bad port {port}")))?;
            let q = *sig.quantum().ok_or_else(|| ctx.error(format!("classical signal on {port}")))?;
            if self.pending.insert(p, q).is_some() {
                return Err(ctx.error(format!("second pulse on {port}")));
            }
        }
        if self.pending.len() < self.pulses {
            ctx.note("waiting_for", json!(self.pulses - self.pending.len()));
            return Ok(Vec::new());
        }
        let modes: Vec<ModeId> = self.pending.values().map(|q| q.mode).collect();
        let state = ctx.quantum.reduced_state(&modes)?;
        let transcript = decode(&state, &self.config, &mut *ctx.rng)?;
        for m in modes {
            ctx.quantum.discard(m)?;
        }
        self.pending.clear();
        let value = json!({ "declared": transcript.declared, "stop_round": transcript.stop_round });
        ctx.note("decoded", value.clone());
        self.transcript = Some(transcript);
        Ok(vec![Emission::new("out", Signal::classical(DETECTION_SIGNAL, value), ctx.now)])
    }

    fn report(&self) -> Option<Value> {
        self.transcript.as_ref().map(|t| serde_json::to_value(t).expect("transcript serializes"))
    }
}

pub(crate) fn param_specs() -> Vec<ParamSpec> {
    vec![
        ParamSpec::new("pulses", ParamType::Integer, json!(3), "number of pulses P per codeword"),
        ParamSpec::new("alpha", ParamType::Number, json!(0.4), "coherent amplitude of each pulse"),
        ParamSpec::new("mode", ParamType::Choice, json!("probability"), "report all p(Y) or sample outcomes")
            .choices(&["probability", "sampled"]),
        ParamSpec::new("order", ParamType::Choice, json!("from_000"), "first codeword tried")
            .choices(&["from_000", "from_001"]),
        ParamSpec::new("snapshots", ParamType::Boolean, json!(true), "record per-pulse Wigner grids"),
    ]
}

pub(crate) fn info() -> DeviceInfo {
    DeviceInfo {
        type_name: "jdr_receiver",
        description: "Sequential joint-detection receiver with a vacuum-test POVM; ports in0..in{P-1}",
        ports: ports(3),
        parameters: param_specs(),
    }
}

pub(crate) fn build(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &param_specs())?;
    let pulses = p.integer("pulses", 3)? as usize;
    if !(1..=8).contains(&pulses) {
        return Err(ParamError::new("pulses", "pulses must be between 1 and 8"));
    }
    let alpha = p.number("alpha", 0.4)?;
    let mode = match p.choice("mode", &["probability", "sampled"], "probability")? {
        "sampled" => JdrMode::Sampled,
        _ => JdrMode::Probability,
    };
    let order = GuessOrder::parse(p.choice("order", &["from_000", "from_001"], "from_000")?).expect("validated choice");
    let snapshot_axis = p.boolean("snapshots", true)?.then(default_wigner_axis);
    Ok(Box::new(JdrReceiver::new(pulses, DecoderConfig { alpha, order, mode, snapshot_axis })))
}
