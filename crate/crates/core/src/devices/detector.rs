use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::params::{ParamResult, ParamSpec, ParamType, Params};
use super::{take_quantum, DeviceInfo};
use crate::des::{
    Device, DesError, DeviceContext, Emission, ModeId, PortSpec, QuantumRegistry, Signal, SimTime, DETECTION_SIGNAL,
    GENERIC_QUANTUM_SIGNAL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    /// Reports the photon-number distribution and leaves the state untouched.
    Distribution,
    /// Draws one outcome, collapses the joint state and absorbs the mode.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionOutcome {
    /// `(n, p(n))` for every retained photon number.
    Distribution(Vec<(usize, f64)>),
    Count(usize),
}

impl DetectionOutcome {
    pub fn to_json(&self) -> Value {
        match self {
            Self::Distribution(d) => json!({ "distribution": d }),
            Self::Count(n) => json!({ "count": n }),
        }
    }
}

/// Photon counting on `mode`.
pub fn detector_measure<R: Rng + ?Sized>(
    registry: &mut QuantumRegistry,
    mode: ModeId,
    kind: DetectorMode,
    rng: &mut R,
) -> Result<DetectionOutcome, DesError> {
    let table = registry.distribution(&[mode])?;
    let dist: Vec<(usize, f64)> = table.entries.iter().map(|(o, p)| (o[0], p.max(0.0))).collect();
    match kind {
        DetectorMode::Distribution => Ok(DetectionOutcome::Distribution(dist)),
        DetectorMode::Sample => {
            let total: f64 = dist.iter().map(|(_, p)| p).sum();
            let u: f64 = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut outcome = dist.last().map_or(0, |(n, _)| *n);
            for &(n, p) in &dist {
                acc += p;
                if u < acc {
                    outcome = n;
                    break;
                }
            }
            registry.update(&[mode], |state, pos| Ok(state.project_mode(pos[0], outcome)?.1))?;
            registry.discard(mode)?;
            Ok(DetectionOutcome::Count(outcome))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub time: SimTime,
    pub mode: ModeId,
    pub outcome: DetectionOutcome,
}

fn ports() -> Vec<PortSpec> {
    vec![PortSpec::input("in", GENERIC_QUANTUM_SIGNAL), PortSpec::output("out", DETECTION_SIGNAL)]
}

pub struct PhotonDetector {
    mode: DetectorMode,
    records: Vec<DetectionRecord>,
}

impl PhotonDetector {
    pub fn new(mode: DetectorMode) -> Self {
        Self { mode, records: Vec::new() }
    }
}

impl Device for PhotonDetector {
    fn type_name(&self) -> &'static str {
        "photon_detector"
    }

    fn ports(&self) -> Vec<PortSpec> {
        ports()
    }

    fn handle(&mut self, ctx: &mut DeviceContext<'_>, mut inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
        let q = take_quantum(ctx, &mut inputs, "in")?;
        let outcome = detector_measure(ctx.quantum, q.mode, self.mode, &mut *ctx.rng)?;
        let value = outcome.to_json();
        ctx.note("outcome", value.clone());
        self.records.push(DetectionRecord { time: ctx.now, mode: q.mode, outcome });
        Ok(vec![Emission::new("out", Signal::classical(DETECTION_SIGNAL, value), ctx.now)])
    }

    fn report(&self) -> Option<Value> {
        Some(json!({ "records": self.records }))
    }
}

pub(crate) fn info() -> DeviceInfo {
    DeviceInfo {
        type_name: "photon_detector",
        description: "Ideal photon-number-resolving detector",
        ports: ports(),
        parameters: vec![ParamSpec::new("mode", ParamType::Choice, json!("distribution"), "report the distribution or sample one outcome")
            .choices(&["distribution", "sample"])],
    }
}

pub(crate) fn build(params: &Value) -> ParamResult<Box<dyn Device>> {
    let p = Params::new(params, &info().parameters)?;
    let mode = match p.choice("mode", &["distribution", "sample"], "distribution")? {
        "sample" => DetectorMode::Sample,
        _ => DetectorMode::Distribution,
    };
    Ok(Box::new(PhotonDetector::new(mode)))
}
