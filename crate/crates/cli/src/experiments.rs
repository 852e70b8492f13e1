//! Graph execution and the two reference experiments.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use serde_json::{json, Map, Value};
use thiserror::Error;

use qsim_core::des::{DesError, ModeId, RunOutput, SimTime};
use qsim_core::devices::{bits_to_string, codeword_bits, default_omega, GuessOrder, JdrTranscript};
use qsim_core::fock::{build_gate, FockCutoff, GateKind, GateParams};
use qsim_core::temporal::{coincidence_weight, detection_probability, GaussianEnvelope, TemporalError, TimeInterval};

use crate::graph::{assemble, effective_cutoff, ExperimentGraph, Issue, SCHEMA_VERSION};
use crate::results::{Cell, ResultSet, Table};

/// Cutoff for graphs that do not set one.
pub const DEFAULT_CUTOFF: usize = 6;
pub const HOM_CUTOFF: usize = 4;
pub const JDR_CUTOFF: usize = 12;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid graph: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error(transparent)]
    Engine(#[from] DesError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("{0}")]
    Input(String),
}

/// Reads the `QSIM_CUTOFF` override for `fallback`.
pub fn cutoff_from_env(fallback: usize) -> Result<usize, String> {
    match std::env::var("QSIM_CUTOFF") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 2 => Ok(n),
            _ => Err(format!("QSIM_CUTOFF must be an integer of at least 2, found {v:?}")),
        },
        Err(_) => Ok(fallback),
    }
}

fn devices_of<'a>(graph: &'a ExperimentGraph, type_name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
    graph.devices.iter().filter(move |d| d.type_name == type_name).map(|d| d.id.as_str())
}

fn target_of<'a>(graph: &'a ExperimentGraph, device: &str, port: &str) -> Option<&'a str> {
    graph.connections.iter().find(|c| c.from.device == device && c.from.port == port).map(|c| c.to.device.as_str())
}

fn type_of<'a>(graph: &'a ExperimentGraph, device: &str) -> Option<&'a str> {
    graph.devices.iter().find(|d| d.id == device).map(|d| d.type_name.as_str())
}

/// `(time, mode, outcome)` for every detection a detector recorded.
fn detections(out: &RunOutput, device: &str) -> Vec<(String, u64, Value)> {
    let Some(records) = out.reports.get(device).and_then(|r| r.get("records")).and_then(Value::as_array) else {
        return Vec::new();
    };
    records
        .iter()
        .filter_map(|r| {
            let time = r.get("time")?.as_str()?.to_string();
            let mode = r.get("mode")?.as_u64()?;
            Some((time, mode, r.get("outcome")?.clone()))
        })
        .collect()
}

fn detections_table(graph: &ExperimentGraph, out: &RunOutput) -> Table {
    let mut table = Table::new(&["device", "time", "mode", "n", "probability"]);
    for id in devices_of(graph, "photon_detector") {
        for (time, mode, outcome) in detections(out, id) {
            let row = |n: u64, p: Cell| vec![id.into(), time.clone().into(), (mode as usize).into(), (n as usize).into(), p];
            if let Some(dist) = outcome.get("distribution").and_then(Value::as_array) {
                for entry in dist {
                    if let (Some(n), Some(p)) = (entry[0].as_u64(), entry[1].as_f64()) {
                        table.push(row(n, p.into()));
                    }
                }
            } else if let Some(n) = outcome.get("count").and_then(Value::as_u64) {
                table.push(row(n, Cell::Null));
            }
        }
    }
    table
}

fn lambda_at(out: &RunOutput, device: &str, time: &str) -> Option<f64> {
    out.trace
        .iter()
        .find(|e| e.device == device && e.time.to_string() == time)
        .and_then(|e| e.summary.get("lambda"))
        .and_then(Value::as_f64)
}

/// Probability that both detectors fire, per beam-splitter event whose two
/// outputs are watched by detectors.
fn coincidence_table(graph: &ExperimentGraph, out: &RunOutput) -> Result<Table, RunError> {
    let mut table = Table::new(&["beam_splitter", "time", "lambda", "p_coincidence"]);
    for bs in devices_of(graph, "beam_splitter") {
        let watched = |port| target_of(graph, bs, port).filter(|d| type_of(graph, d) == Some("photon_detector"));
        let (Some(d1), Some(d2)) = (watched("out1"), watched("out2")) else { continue };
        let second = detections(out, d2);
        for (time, m1, o1) in detections(out, d1) {
            let Some((_, m2, o2)) = second.iter().find(|(t, ..)| *t == time) else { continue };
            let p = match (o1.get("count").and_then(Value::as_u64), o2.get("count").and_then(Value::as_u64)) {
                (Some(a), Some(b)) => f64::from(u8::from(a > 0 && b > 0)),
                _ => {
                    let dist = out.quantum.distribution(&[ModeId(m1), ModeId(*m2)])?;
                    dist.entries.iter().filter(|(o, _)| o[0] > 0 && o[1] > 0).map(|(_, p)| p).sum()
                }
            };
            table.push(vec![bs.into(), time.clone().into(), lambda_at(out, bs, &time).into(), p.into()]);
        }
    }
    Ok(table)
}

fn jdr_results(graph: &ExperimentGraph, out: &RunOutput, rs: &mut ResultSet) -> Result<(), RunError> {
    let mut table = Table::new(&["device", "round", "guess", "p_yes", "p_yes_after_no", "outcome"]);
    let mut summary = Map::new();
    for id in devices_of(graph, "jdr_receiver") {
        let Some(report) = out.reports.get(id) else { continue };
        let t: JdrTranscript = serde_json::from_value(report.clone())
            .map_err(|e| RunError::Input(format!("{id}: unreadable transcript: {e}")))?;
        for row in &t.rows {
            table.push(vec![
                id.into(),
                row.round.into(),
                row.guess.clone().into(),
                row.p_yes.into(),
                row.p_yes_after_no.into(),
                row.outcome.clone().into(),
            ]);
        }
        for snap in t.snapshots {
            rs.grids.insert(format!("{id}_{}_pulse{}", snap.label, snap.pulse), snap.grid);
        }
        summary.insert(
            id.into(),
            json!({ "declared": t.declared, "stop_round": t.stop_round, "mode": t.mode, "order": t.order, "alpha": t.alpha }),
        );
    }
    if !table.rows.is_empty() {
        rs.tables.insert("transcript".into(), table);
    }
    if !summary.is_empty() {
        rs.metadata.insert("jdr".into(), Value::Object(summary));
    }
    Ok(())
}

/// Device reports without bulky grid payloads.
fn slim_reports(out: &RunOutput) -> Value {
    let mut reports = Map::new();
    for (id, r) in &out.reports {
        let mut r = r.clone();
        if let Some(obj) = r.as_object_mut() {
            obj.remove("snapshots");
        }
        reports.insert(id.clone(), r);
    }
    Value::Object(reports)
}

/// Validates, runs to `sim.until`, and collects tables and grids.
pub fn run_graph(graph: &ExperimentGraph, default_cutoff: usize) -> Result<ResultSet, RunError> {
    let sim = assemble(graph, default_cutoff).map_err(RunError::Invalid)?;
    let out = sim.run(graph.sim.until)?;
    let mut rs = ResultSet { warnings: out.warnings.clone(), ..ResultSet::default() };
    for (name, table) in [("detections", detections_table(graph, &out)), ("coincidence", coincidence_table(graph, &out)?)] {
        if !table.rows.is_empty() {
            rs.tables.insert(name.into(), table);
        }
    }
    jdr_results(graph, &out, &mut rs)?;
    let meta = [
        ("schema", json!(SCHEMA_VERSION)),
        ("version", json!(env!("CARGO_PKG_VERSION"))),
        ("seed", json!(graph.sim.seed)),
        ("cutoff", json!(effective_cutoff(graph, default_cutoff))),
        ("until", json!(graph.sim.until)),
        ("reports", slim_reports(&out)),
    ];
    rs.metadata.extend(meta.into_iter().map(|(k, v)| (k.to_string(), v)));
    rs.traces = out.trace;
    Ok(rs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomParams {
    /// Envelope width, seconds.
    pub sigma: f64,
    /// Carrier angular frequency, rad/s.
    pub omega: f64,
}

impl Default for HomParams {
    fn default() -> Self {
        Self { sigma: 1e-12, omega: default_omega() }
    }
}

/// Two single photons into a 50:50 beam splitter watched by two detectors.
/// Both photons leave at t = 0; `delay` shifts the second envelope.
pub fn hom_graph(delay: f64, params: &HomParams) -> ExperimentGraph {
    let src = |delay: f64| {
        let mut p = json!({ "sigma": params.sigma, "omega": params.omega });
        if delay != 0.0 {
            p["delay"] = json!(delay);
        }
        p
    };
    let mut g = ExperimentGraph::new()
        .device("source_a", "single_photon_source", src(0.0))
        .device("source_b", "single_photon_source", src(delay))
        .device("bs", "beam_splitter", json!({}))
        .device("detector_1", "photon_detector", json!({ "mode": "distribution" }))
        .device("detector_2", "photon_detector", json!({ "mode": "distribution" }))
        .connect("source_a.out", "bs.in1")
        .connect("source_b.out", "bs.in2")
        .connect("bs.out1", "detector_1.in")
        .connect("bs.out2", "detector_2.in");
    g.sim.until = SimTime::new(1, -9);
    g
}

/// Coincidence weight `∫|φψ|²` with time measured in units of `√2·σ`, the
/// scale on which a unit pulse reads `(2/π)^{1/4} e^{-s²}`.
pub fn dimensionless_weight(delay: f64, params: &HomParams) -> Result<f64, TemporalError> {
    let unit = SQRT_2 * params.sigma;
    let phi = GaussianEnvelope::new(0.0, params.sigma / unit, params.omega * unit)?;
    let psi = GaussianEnvelope::new(delay / unit, params.sigma / unit, params.omega * unit)?;
    coincidence_weight(&phi, &psi, &TimeInterval::full_line(), &TimeInterval::full_line())
}

/// Detection-window model `p(1,1 | 1,1)` with [`dimensionless_weight`].
pub fn window_model_coincidence(delay: f64, params: &HomParams) -> Result<f64, RunError> {
    let unit = SQRT_2 * params.sigma;
    let phi = GaussianEnvelope::new(0.0, params.sigma / unit, params.omega * unit)?;
    let psi = GaussianEnvelope::new(delay / unit, params.sigma / unit, params.omega * unit)?;
    let cutoff = FockCutoff::new(3).map_err(DesError::from)?;
    let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(FRAC_PI_4, 0.0), cutoff).map_err(DesError::from)?;
    let full = TimeInterval::full_line();
    Ok(detection_probability(1, 1, 1, 1, &full, &full, &phi, &psi, &bs)?)
}

/// `a:b:n`, `n` evenly spaced points from `a` to `b` inclusive.
pub fn parse_delays(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected a:b:n, found {spec:?}"));
    };
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("bad number {s:?}"));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad point count {n:?}"))?;
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            a * (1.0 - t) + b * t
        })
        .collect())
}

pub fn run_hom_sweep(delays: &[f64], params: &HomParams, cutoff: usize) -> Result<ResultSet, RunError> {
    if let Some(d) = delays.iter().find(|d| !d.is_finite()) {
        return Err(RunError::Input(format!("delay {d} is not finite")));
    }
    let mut sweep = Table::new(&["delay", "lambda", "p_coincidence"]);
    let mut weights = Table::new(&["delay", "weight", "p_window_model"]);
    let mut warnings = BTreeSet::new();
    for &delay in delays {
        let mut graph = hom_graph(delay, params);
        graph.sim.cutoff = Some(cutoff);
        let rs = run_graph(&graph, cutoff)?;
        warnings.extend(rs.warnings);
        let row = rs
            .tables
            .get("coincidence")
            .and_then(|t| t.rows.first().cloned())
            .ok_or_else(|| RunError::Input(format!("no coincidence recorded at delay {delay}")))?;
        sweep.push(vec![delay.into(), row[2].clone(), row[3].clone()]);
        weights.push(vec![
            delay.into(),
            dimensionless_weight(delay, params)?.into(),
            window_model_coincidence(delay, params)?.into(),
        ]);
    }
    let mut rs = ResultSet { warnings: warnings.into_iter().collect(), ..ResultSet::default() };
    rs.tables.insert("hom_sweep".into(), sweep);
    rs.tables.insert("overlap_weight".into(), weights);
    let meta = [
        ("experiment", json!("hom_sweep")),
        ("version", json!(env!("CARGO_PKG_VERSION"))),
        ("sigma", json!(params.sigma)),
        ("omega", json!(params.omega)),
        ("cutoff", json!(cutoff)),
        ("delays", json!(delays)),
        ("weight_time_unit", json!("sqrt(2)*sigma")),
    ];
    rs.metadata.extend(meta.into_iter().map(|(k, v)| (k.to_string(), v)));
    Ok(rs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JdrParams {
    pub message: usize,
    pub pulses: usize,
    pub alpha: f64,
    pub order: GuessOrder,
    /// `Some(seed)` selects sampled mode.
    pub sample_seed: Option<u64>,
    pub snapshots: bool,
}

impl Default for JdrParams {
    fn default() -> Self {
        Self { message: 0, pulses: 3, alpha: 0.4, order: GuessOrder::From000, sample_seed: None, snapshots: true }
    }
}

/// Decimal (`3`) or binary with a `0b` prefix (`0b011`).
pub fn parse_message(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0b") {
        Some(bits) => usize::from_str_radix(bits, 2),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("message must be a decimal or 0b-prefixed binary integer, found {s:?}"))
}

/// Laser pulses one nanosecond apart, BPSK-modulated by phase shifters,
/// into the joint-detection receiver.
pub fn jdr_graph(params: &JdrParams) -> Result<ExperimentGraph, RunError> {
    if !(1..=8).contains(&params.pulses) {
        return Err(RunError::Input(format!("pulses must be between 1 and 8, found {}", params.pulses)));
    }
    if params.message >= 1 << params.pulses {
        return Err(RunError::Input(format!("message {} needs more than {} bits", params.message, params.pulses)));
    }
    let bits = codeword_bits(params.message, params.pulses);
    let mode = if params.sample_seed.is_some() { "sampled" } else { "probability" };
    let order = serde_json::to_value(params.order).expect("order serializes");
    let mut g = ExperimentGraph::new();
    for (p, &b) in bits.iter().enumerate() {
        g = g
            .device(
                &format!("laser_{p}"),
                "coherent_source",
                json!({ "alpha": { "re": params.alpha, "im": 0.0 }, "emit_time": SimTime::new(p as i128, -9) }),
            )
            .device(&format!("modulator_{p}"), "phase_shifter", json!({ "phi": f64::from(b) * PI }))
            .connect(&format!("laser_{p}.out"), &format!("modulator_{p}.in"))
            .connect(&format!("modulator_{p}.out"), &format!("receiver.in{p}"));
    }
    g = g.device(
        "receiver",
        "jdr_receiver",
        json!({ "pulses": params.pulses, "alpha": params.alpha, "mode": mode, "order": order, "snapshots": params.snapshots }),
    );
    g.sim.until = SimTime::new(params.pulses as i128 + 1, -9);
    g.sim.seed = params.sample_seed.unwrap_or(0);
    Ok(g)
}

pub fn run_jdr(params: &JdrParams, cutoff: usize) -> Result<ResultSet, RunError> {
    let mut graph = jdr_graph(params)?;
    graph.sim.cutoff = Some(cutoff);
    let mut rs = run_graph(&graph, cutoff)?;
    rs.metadata.insert("experiment".into(), json!("jdr"));
    rs.metadata.insert("message".into(), json!(params.message));
    rs.metadata.insert("codeword".into(), json!(bits_to_string(&codeword_bits(params.message, params.pulses))));
    Ok(rs)
}
