use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::queue::EventQueue;
use super::registry::QuantumRegistry;
use super::signal::{KindRegistry, Signal};
use super::time::{SimTime, DEFAULT_PRECISION};
use super::DesError;
use crate::fock::FockCutoff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
    /// Accepted kind for inputs, emitted kind for outputs.
    pub kind: String,
}

impl PortSpec {
    pub fn input(name: &str, kind: &str) -> Self {
        Self { name: name.into(), direction: Direction::Input, kind: kind.into() }
    }

    pub fn output(name: &str, kind: &str) -> Self {
        Self { name: name.into(), direction: Direction::Output, kind: kind.into() }
    }
}

/// A signal leaving `port` at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub port: String,
    pub signal: Signal,
    pub time: SimTime,
}

impl Emission {
    pub fn new(port: &str, signal: Signal, time: SimTime) -> Self {
        Self { port: port.into(), signal, time }
    }
}

/// What a device sees while handling one event.
pub struct DeviceContext<'a> {
    pub now: SimTime,
    pub device_id: &'a str,
    pub quantum: &'a mut QuantumRegistry,
    pub rng: &'a mut ChaCha8Rng,
    pub kinds: &'a KindRegistry,
    pub precision: u32,
    notes: BTreeMap<String, Value>,
}

impl DeviceContext<'_> {
    /// Adds a key to this event's trace summary.
    pub fn note(&mut self, key: &str, value: Value) {
        self.notes.insert(key.into(), value);
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.quantum.cutoff()
    }

    pub fn error(&self, message: impl Into<String>) -> DesError {
        DesError::device(self.device_id, message)
    }
}

pub trait Device: Send {
    fn type_name(&self) -> &'static str;

    fn ports(&self) -> Vec<PortSpec>;

    /// Called once at `t = 0` before the event loop starts.
    fn init(&mut self, _ctx: &mut DeviceContext<'_>) -> Result<Vec<Emission>, DesError> {
        Ok(Vec::new())
    }

    /// Handles every signal that reached this device at `ctx.now`.
    fn handle(&mut self, ctx: &mut DeviceContext<'_>, inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError>;

    /// Final per-device results, collected after the run.
    fn report(&self) -> Option<Value> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub cutoff: FockCutoff,
    /// Significant digits of scheduled timestamps.
    pub precision: u32,
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(seed: u64, cutoff: FockCutoff) -> Self {
        Self { seed, cutoff, precision: DEFAULT_PRECISION, max_events: 1_000_000 }
    }
}

/// One executed event (or a device initialization that did something).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: SimTime,
    pub device: String,
    pub ports: Vec<String>,
    pub summary: Value,
}

pub struct RunOutput {
    pub trace: Vec<TraceEntry>,
    pub warnings: Vec<String>,
    pub reports: BTreeMap<String, Value>,
    pub quantum: QuantumRegistry,
}

impl std::fmt::Debug for RunOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOutput")
            .field("trace", &self.trace.len())
            .field("warnings", &self.warnings)
            .field("reports", &self.reports)
            .finish()
    }
}

/// One JSON object per line, keys in sorted order.
pub fn trace_to_json_lines(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for entry in trace {
        out.push_str(&serde_json::to_string(entry).expect("trace entries serialize"));
        out.push('\n');
    }
    out
}

struct Slot {
    id: String,
    ports: Vec<PortSpec>,
    device: Box<dyn Device>,
}

type PortRef = (usize, String);

pub struct Simulation {
    config: SimConfig,
    kinds: KindRegistry,
    slots: Vec<Slot>,
    ids: BTreeMap<String, usize>,
    routes: BTreeMap<PortRef, Vec<PortRef>>,
    connected_inputs: BTreeSet<PortRef>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Self {
        Self::with_kinds(config, KindRegistry::default())
    }

    pub fn with_kinds(config: SimConfig, kinds: KindRegistry) -> Self {
        Self {
            config,
            kinds,
            slots: Vec::new(),
            ids: BTreeMap::new(),
            routes: BTreeMap::new(),
            connected_inputs: BTreeSet::new(),
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn kinds(&self) -> &KindRegistry {
        &self.kinds
    }

    /// Adds a device; its index (insertion order) breaks ties between devices.
    pub fn add_device(&mut self, id: &str, device: Box<dyn Device>) -> Result<usize, DesError> {
        if self.ids.contains_key(id) {
            return Err(DesError::DuplicateDevice(id.into()));
        }
        let ports = device.ports();
        for p in &ports {
            if !self.kinds.contains(&p.kind) {
                return Err(DesError::Kind(format!("{id}.{} uses unknown kind {}", p.name, p.kind)));
            }
        }
        let index = self.slots.len();
        self.slots.push(Slot { id: id.into(), ports, device });
        self.ids.insert(id.into(), index);
        Ok(index)
    }

    pub fn device_count(&self) -> usize {
        self.slots.len()
    }

    fn port(&self, device: &str, port: &str) -> Result<(usize, &PortSpec), DesError> {
        let &index = self.ids.get(device).ok_or_else(|| DesError::UnknownDevice(device.into()))?;
        let spec = self.slots[index]
            .ports
            .iter()
            .find(|p| p.name == port)
            .ok_or_else(|| DesError::UnknownPort { device: device.into(), port: port.into() })?;
        Ok((index, spec))
    }

    /// Connects `from_device.from_port` (an output) to `to_device.to_port`
    /// (an input) when the emitted kind is a subtype of the accepted kind.
    pub fn connect(&mut self, from_device: &str, from_port: &str, to_device: &str, to_port: &str) -> Result<(), DesError> {
        let (src, out) = self.port(from_device, from_port)?;
        let (dst, inp) = self.port(to_device, to_port)?;
        if out.direction != Direction::Output {
            return Err(DesError::Direction { device: from_device.into(), port: from_port.into(), expected: "output" });
        }
        if inp.direction != Direction::Input {
            return Err(DesError::Direction { device: to_device.into(), port: to_port.into(), expected: "input" });
        }
        if !self.kinds.is_subtype(&out.kind, &inp.kind)? {
            return Err(DesError::TypeMismatch {
                from: format!("{from_device}.{from_port}"),
                from_kind: out.kind.clone(),
                to: format!("{to_device}.{to_port}"),
                to_kind: inp.kind.clone(),
            });
        }
        let quantum = self.kinds.is_quantum(&out.kind);
        let input = (dst, to_port.to_owned());
        if self.connected_inputs.contains(&input) {
            return Err(DesError::InputAlreadyConnected { device: to_device.into(), port: to_port.into() });
        }
        let key = (src, from_port.to_owned());
        if quantum && self.routes.get(&key).is_some_and(|r| !r.is_empty()) {
            return Err(DesError::QuantumFanOut { device: from_device.into(), port: from_port.into() });
        }
        self.connected_inputs.insert(input.clone());
        self.routes.entry(key).or_default().push(input);
        Ok(())
    }

    /// Runs until the queue is empty or the next event lies beyond `until`.
    pub fn run(mut self, until: SimTime) -> Result<RunOutput, DesError> {
        if until.is_negative() {
            return Err(DesError::Horizon(until));
        }
        let mut quantum = QuantumRegistry::new(self.config.cutoff);
        let mut rngs: Vec<ChaCha8Rng> = (0..self.slots.len())
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        let mut queue = EventQueue::new();
        let mut trace = Vec::new();
        let mut warnings = Vec::new();

        for index in 0..self.slots.len() {
            let now = SimTime::ZERO;
            let (emissions, notes) = {
                let slot = &mut self.slots[index];
                let mut ctx = DeviceContext {
                    now,
                    device_id: &slot.id,
                    quantum: &mut quantum,
                    rng: &mut rngs[index],
                    kinds: &self.kinds,
                    precision: self.config.precision,
                    notes: BTreeMap::new(),
                };
                let emissions = slot.device.init(&mut ctx)?;
                (emissions, ctx.notes)
            };
            if emissions.is_empty() && notes.is_empty() {
                continue;
            }
            let emitted = self.route(index, now, emissions, &mut queue, &mut quantum, &mut warnings)?;
            let mut summary = notes;
            summary.insert("phase".into(), json!("init"));
            summary.insert("emitted".into(), emitted);
            trace.push(TraceEntry { time: now, device: self.slots[index].id.clone(), ports: Vec::new(), summary: json!(summary) });
        }

        let mut executed = 0usize;
        while let Some(next) = queue.peek_time() {
            if next > until {
                break;
            }
            executed += 1;
            if executed > self.config.max_events {
                return Err(DesError::EventLimit(self.config.max_events));
            }
            let event = queue.merge_simultaneous().map_err(|e| match e {
                DesError::PortConflict { device, port, time } => DesError::PortConflict {
                    device: device
                        .strip_prefix('#')
                        .and_then(|k| k.parse::<usize>().ok())
                        .map_or(device.clone(), |k| self.slots[k].id.clone()),
                    port,
                    time,
                },
                other => other,
            })?;
            let Some(event) = event else { break };
            let index = event.target;
            let ports: Vec<String> = event.inputs.keys().cloned().collect();
            let inputs_summary: BTreeMap<&String, Value> = event.inputs.iter().map(|(p, s)| (p, s.summary())).collect();
            let inputs_summary = json!(inputs_summary);
            let (emissions, notes) = {
                let slot = &mut self.slots[index];
                let mut ctx = DeviceContext {
                    now: event.time,
                    device_id: &slot.id,
                    quantum: &mut quantum,
                    rng: &mut rngs[index],
                    kinds: &self.kinds,
                    precision: self.config.precision,
                    notes: BTreeMap::new(),
                };
                let emissions = slot.device.handle(&mut ctx, event.inputs)?;
                (emissions, ctx.notes)
            };
            let emitted = self.route(index, event.time, emissions, &mut queue, &mut quantum, &mut warnings)?;
            let mut summary = notes;
            summary.insert("inputs".into(), inputs_summary);
            summary.insert("emitted".into(), emitted);
            trace.push(TraceEntry { time: event.time, device: self.slots[index].id.clone(), ports, summary: json!(summary) });
        }

        let reports = self.slots.iter().filter_map(|s| s.device.report().map(|r| (s.id.clone(), r))).collect();
        Ok(RunOutput { trace, warnings, reports, quantum })
    }

    /// Checks and enqueues emissions; returns their trace summary.
    fn route(
        &self,
        index: usize,
        now: SimTime,
        emissions: Vec<Emission>,
        queue: &mut EventQueue,
        quantum: &mut QuantumRegistry,
        warnings: &mut Vec<String>,
    ) -> Result<Value, DesError> {
        let slot = &self.slots[index];
        let mut emitted = Vec::with_capacity(emissions.len());
        for e in emissions {
            if e.time < now {
                return Err(DesError::Causality { device: slot.id.clone(), now, emitted: e.time });
            }
            let spec = slot
                .ports
                .iter()
                .find(|p| p.name == e.port && p.direction == Direction::Output)
                .ok_or_else(|| DesError::UnknownPort { device: slot.id.clone(), port: e.port.clone() })?;
            e.signal.check_shape(&self.kinds)?;
            if !self.kinds.is_subtype(&e.signal.kind, &spec.kind)? {
                return Err(DesError::TypeMismatch {
                    from: format!("{}.{}", slot.id, e.port),
                    from_kind: e.signal.kind.clone(),
                    to: format!("{}.{}", slot.id, e.port),
                    to_kind: spec.kind.clone(),
                });
            }
            emitted.push(json!({ "port": e.port, "time": e.time }));
            match self.routes.get(&(index, e.port.clone())) {
                Some(targets) if !targets.is_empty() => {
                    for (dst, port) in targets {
                        queue.push(e.time, *dst, port.clone(), e.signal.clone());
                    }
                }
                _ => {
                    warnings.push(format!("{}.{} emission at t = {} dropped: port not connected", slot.id, e.port, e.time));
                    if let Some(q) = e.signal.quantum() {
                        quantum.discard(q.mode)?;
                    }
                }
            }
        }
        Ok(Value::Array(emitted))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::signal::{DETECTION_SIGNAL, GENERIC_QUANTUM_SIGNAL, GENERIC_SIGNAL, PHOTONIC_QUANTUM_SIGNAL};

    /// Emits one classical pulse at `at` when initialized.
    struct Ticker {
        at: SimTime,
        kind: &'static str,
    }

    impl Device for Ticker {
        fn type_name(&self) -> &'static str {
            "ticker"
        }
        fn ports(&self) -> Vec<PortSpec> {
            vec![PortSpec::output("out", self.kind)]
        }
        fn init(&mut self, _ctx: &mut DeviceContext<'_>) -> Result<Vec<Emission>, DesError> {
            Ok(vec![Emission::new("out", Signal::classical(DETECTION_SIGNAL, json!(1)), self.at)])
        }
        fn handle(&mut self, _: &mut DeviceContext<'_>, _: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
            Ok(Vec::new())
        }
    }

    /// Forwards its input after `delay`; counts calls.
    struct Relay {
        delay: SimTime,
        accepts: &'static str,
        calls: usize,
    }

    impl Device for Relay {
        fn type_name(&self) -> &'static str {
            "relay"
        }
        fn ports(&self) -> Vec<PortSpec> {
            vec![
                PortSpec::input("a", self.accepts),
                PortSpec::input("b", self.accepts),
                PortSpec::output("out", DETECTION_SIGNAL),
            ]
        }
        fn handle(&mut self, ctx: &mut DeviceContext<'_>, inputs: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
            self.calls += 1;
            ctx.note("count", json!(inputs.len()));
            let t = ctx.now.checked_add(&self.delay)?;
            Ok(vec![Emission::new("out", Signal::classical(DETECTION_SIGNAL, json!(inputs.len())), t)])
        }
        fn report(&self) -> Option<Value> {
            Some(json!({ "calls": self.calls }))
        }
    }

    fn sim() -> Simulation {
        Simulation::new(SimConfig::new(7, FockCutoff::new(2).unwrap()))
    }

    fn t(s: &str) -> SimTime {
        s.parse().unwrap()
    }

    fn relay(delay: &str, accepts: &'static str) -> Box<Relay> {
        Box::new(Relay { delay: t(delay), accepts, calls: 0 })
    }

    #[test]
    fn empty_graph_terminates() {
        let out = sim().run(t("1")).unwrap();
        assert!(out.trace.is_empty());
        assert!(sim().run(t("-1")).is_err());
    }

    #[test]
    fn subtype_connections() {
        let mut s = sim();
        s.add_device("src", Box::new(Ticker { at: SimTime::ZERO, kind: PHOTONIC_QUANTUM_SIGNAL })).unwrap();
        s.add_device("gen", Box::new(Ticker { at: SimTime::ZERO, kind: GENERIC_SIGNAL })).unwrap();
        s.add_device("q", relay("0", GENERIC_QUANTUM_SIGNAL)).unwrap();
        s.add_device("p", relay("0", PHOTONIC_QUANTUM_SIGNAL)).unwrap();
        s.connect("src", "out", "q", "a").unwrap();
        let err = s.connect("gen", "out", "p", "a").unwrap_err();
        let text = err.to_string();
        assert!(text.contains(GENERIC_SIGNAL) && text.contains(PHOTONIC_QUANTUM_SIGNAL), "{text}");
        assert!(matches!(s.connect("src", "out", "p", "b"), Err(DesError::QuantumFanOut { .. })));
        s.add_device("src2", Box::new(Ticker { at: SimTime::ZERO, kind: PHOTONIC_QUANTUM_SIGNAL })).unwrap();
        assert!(matches!(s.connect("src2", "out", "q", "a"), Err(DesError::InputAlreadyConnected { .. })));
        assert!(matches!(s.connect("q", "a", "p", "a"), Err(DesError::Direction { .. })));
        assert!(matches!(s.connect("q", "zz", "p", "a"), Err(DesError::UnknownPort { .. })));
        assert!(s.add_device("q", relay("0", GENERIC_SIGNAL)).is_err());
    }

    #[test]
    fn horizon_excludes_late_events() {
        let mut s = sim();
        s.add_device("src", Box::new(Ticker { at: t("1e-9"), kind: DETECTION_SIGNAL })).unwrap();
        s.add_device("sink", relay("0", GENERIC_SIGNAL)).unwrap();
        s.connect("src", "out", "sink", "a").unwrap();
        let out = s.run(t("5e-10")).unwrap();
        assert!(out.trace.iter().all(|e| e.time <= t("5e-10")));
        assert!(out.trace.iter().all(|e| e.device != "sink"));
    }

    #[test]
    fn chained_delay_is_exact() {
        let mut s = sim();
        s.add_device("src", Box::new(Ticker { at: t("1e-9"), kind: DETECTION_SIGNAL })).unwrap();
        s.add_device("r1", relay("0.0000000048367", GENERIC_SIGNAL)).unwrap();
        s.add_device("r2", relay("0", GENERIC_SIGNAL)).unwrap();
        s.connect("src", "out", "r1", "a").unwrap();
        s.connect("r1", "out", "r2", "a").unwrap();
        let out = s.run(t("1")).unwrap();
        let r2 = out.trace.iter().find(|e| e.device == "r2").unwrap();
        assert_eq!(r2.time, t("5.8367e-9"));
        assert_eq!(out.warnings.len(), 1, "r2 output is unconnected");
    }

    #[test]
    fn simultaneous_arrivals_merge() {
        let mut s = sim();
        s.add_device("x", Box::new(Ticker { at: t("2e-9"), kind: DETECTION_SIGNAL })).unwrap();
        s.add_device("y", Box::new(Ticker { at: t("2e-9"), kind: DETECTION_SIGNAL })).unwrap();
        s.add_device("join", relay("0", GENERIC_SIGNAL)).unwrap();
        s.connect("x", "out", "join", "a").unwrap();
        s.connect("y", "out", "join", "b").unwrap();
        let out = s.run(t("1")).unwrap();
        let calls: Vec<_> = out.trace.iter().filter(|e| e.device == "join").collect();
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].ports, vec!["a", "b"]);
        assert_eq!(out.reports["join"], json!({ "calls": 1 }));
    }

    #[test]
    fn past_emission_is_rejected() {
        struct Backwards;
        impl Device for Backwards {
            fn type_name(&self) -> &'static str {
                "backwards"
            }
            fn ports(&self) -> Vec<PortSpec> {
                vec![PortSpec::input("a", GENERIC_SIGNAL), PortSpec::output("out", DETECTION_SIGNAL)]
            }
            fn handle(&mut self, ctx: &mut DeviceContext<'_>, _: BTreeMap<String, Signal>) -> Result<Vec<Emission>, DesError> {
                let t = ctx.now.checked_sub(&"1e-12".parse()?)?;
                Ok(vec![Emission::new("out", Signal::classical(DETECTION_SIGNAL, json!(0)), t)])
            }
        }
        let mut s = sim();
        s.add_device("src", Box::new(Ticker { at: t("1e-9"), kind: DETECTION_SIGNAL })).unwrap();
        s.add_device("b", Box::new(Backwards)).unwrap();
        s.connect("src", "out", "b", "a").unwrap();
        assert!(matches!(s.run(t("1")), Err(DesError::Causality { .. })));
    }

    #[test]
    fn json_lines_are_stable() {
        let build = || {
            let mut s = sim();
            s.add_device("x", Box::new(Ticker { at: t("1e-9"), kind: DETECTION_SIGNAL })).unwrap();
            s.add_device("r", relay("1e-12", GENERIC_SIGNAL)).unwrap();
            s.connect("x", "out", "r", "a").unwrap();
            trace_to_json_lines(&s.run(t("1")).unwrap().trace)
        };
        let a = build();
        assert_eq!(a, build());
        assert_eq!(a.lines().count(), 2);
        let first: Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
        assert_eq!(first["time"], json!("0"));
    }
}
