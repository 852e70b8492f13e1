//! The `qsim_graph_v1` experiment file: loading, validation and assembly
//! into a runnable [`Simulation`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use qsim_core::des::{DesError, SimConfig, SimTime, Simulation};
use qsim_core::devices::build_device;
use qsim_core::fock::FockCutoff;

pub const SCHEMA_VERSION: &str = "qsim_graph_v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGraph {
    pub schema: String,
    #[serde(default)]
    pub devices: Vec<DeviceDecl>,
    #[serde(default)]
    pub connections: Vec<Connection>,
    #[serde(default)]
    pub sim: SimSettings,
    /// Editor layout. Carried through untouched and never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ui: Option<Value>,
}

impl ExperimentGraph {
    pub fn new() -> Self {
        Self {
            schema: SCHEMA_VERSION.into(),
            devices: Vec::new(),
            connections: Vec::new(),
            sim: SimSettings::default(),
            ui: None,
        }
    }

    pub fn device(mut self, id: &str, type_name: &str, parameters: Value) -> Self {
        let parameters = match parameters {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        self.devices.push(DeviceDecl { id: id.into(), type_name: type_name.into(), parameters, ui: None });
        self
    }

    /// Adds `from → to`, both written as `"device.port"`.
    pub fn connect(mut self, from: &str, to: &str) -> Self {
        let from = from.parse().expect("endpoint literal has the form device.port");
        let to = to.parse().expect("endpoint literal has the form device.port");
        self.connections.push(Connection { from, to });
        self
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graphs serialize")
    }
}

impl Default for ExperimentGraph {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDecl {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ui: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub device: String,
    pub port: String,
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((d, p)) if !d.is_empty() && !p.is_empty() && !p.contains('.') => {
                Ok(Self { device: d.into(), port: p.into() })
            }
            _ => Err(format!("expected \"device.port\", found {s:?}")),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.device, self.port)
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub from: Endpoint,
    pub to: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    /// Horizon in seconds.
    #[serde(default = "default_until")]
    pub until: SimTime,
    #[serde(default)]
    pub seed: u64,
    /// Fock dimension per mode; the caller's default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    /// `precision` (significant digits of timestamps) and `max_events`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, Value>,
}

fn default_until() -> SimTime {
    SimTime::new(1, 0)
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { until: default_until(), seed: 0, cutoff: None, options: BTreeMap::new() }
    }
}

/// One validation problem and the JSON pointer of the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub error: String,
    pub pointer: String,
}

impl Issue {
    pub fn new(pointer: impl Into<String>, error: impl Into<String>) -> Self {
        Self { error: error.into(), pointer: pointer.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "(document)" } else { &self.pointer };
        write!(f, "{at}: {}", self.error)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", render_issues(.0))]
    Invalid(Vec<Issue>),
}

impl LoadError {
    pub fn issues(&self) -> Vec<Issue> {
        match self {
            Self::Io { path, source } => vec![Issue::new("", format!("{}: {source}", path.display()))],
            Self::Invalid(v) => v.clone(),
        }
    }
}

fn render_issues(issues: &[Issue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn escape_token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape_token(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape_token(variant))),
            Segment::Unknown => {}
        }
    }
    out
}

/// Parses a document without checking it against the device library.
pub fn parse_graph(text: &str) -> Result<ExperimentGraph, Issue> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Issue::new("", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column())))?;
    let Some(obj) = value.as_object() else {
        return Err(Issue::new("", "the document must be a JSON object"));
    };
    match obj.get("schema") {
        None => return Err(Issue::new("/schema", format!("missing schema field; expected {SCHEMA_VERSION:?}"))),
        Some(Value::String(s)) if s == SCHEMA_VERSION => {}
        Some(other) => return Err(Issue::new("/schema", format!("unsupported schema {other}; expected {SCHEMA_VERSION:?}"))),
    }
    serde_path_to_error::deserialize(&value).map_err(|e| Issue::new(pointer_from_path(e.path()), e.inner().to_string()))
}

/// Parses and validates; every problem found is reported.
pub fn load_experiment_str(text: &str) -> Result<ExperimentGraph, LoadError> {
    let graph = parse_graph(text).map_err(|i| LoadError::Invalid(vec![i]))?;
    let issues = validate(&graph);
    if issues.is_empty() {
        Ok(graph)
    } else {
        Err(LoadError::Invalid(issues))
    }
}

pub fn load_experiment(path: &Path) -> Result<ExperimentGraph, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    load_experiment_str(&text)
}

/// The error list shared by `qsim validate` and `POST /validate`.
pub fn validate_text(text: &str) -> Vec<Issue> {
    match parse_graph(text) {
        Ok(g) => validate(&g),
        Err(i) => vec![i],
    }
}

pub fn validate(graph: &ExperimentGraph) -> Vec<Issue> {
    // The cutoff only matters for running; any valid value will do here.
    assemble(graph, 2).err().unwrap_or_default()
}

/// Effective cutoff: the graph's own value, else `default_cutoff`.
pub fn effective_cutoff(graph: &ExperimentGraph, default_cutoff: usize) -> usize {
    graph.sim.cutoff.unwrap_or(default_cutoff)
}

fn sim_config(graph: &ExperimentGraph, default_cutoff: usize, issues: &mut Vec<Issue>) -> SimConfig {
    let dim = effective_cutoff(graph, default_cutoff);
    let cutoff = match FockCutoff::new(dim) {
        Ok(c) => c,
        Err(e) => {
            issues.push(Issue::new("/sim/cutoff", e.to_string()));
            FockCutoff::new(2).expect("2 is a valid cutoff")
        }
    };
    let mut config = SimConfig::new(graph.sim.seed, cutoff);
    if graph.sim.until.is_negative() {
        issues.push(Issue::new("/sim/until", "the horizon must be non-negative"));
    }
    for (key, value) in &graph.sim.options {
        let pointer = format!("/sim/options/{}", escape_token(key));
        match (key.as_str(), value.as_u64()) {
            ("precision", Some(p)) if (1..=36).contains(&p) => config.precision = p as u32,
            ("precision", _) => issues.push(Issue::new(pointer, "precision must be an integer between 1 and 36")),
            ("max_events", Some(n)) if n > 0 => config.max_events = n as usize,
            ("max_events", _) => issues.push(Issue::new(pointer, "max_events must be a positive integer")),
            _ => issues.push(Issue::new(pointer, format!("unknown option {key:?}; expected precision or max_events"))),
        }
    }
    config
}

/// Pointer for a connection error: the endpoint it names, or the whole edge.
fn connection_pointer(index: usize, conn: &Connection, err: &DesError) -> String {
    let base = format!("/connections/{index}");
    let side = |device: &str, port: &str| {
        if conn.from.device == device && conn.from.port == port {
            Some("from")
        } else if conn.to.device == device && conn.to.port == port {
            Some("to")
        } else {
            None
        }
    };
    let side = match err {
        DesError::UnknownPort { device, port } | DesError::Direction { device, port, .. } => side(device, port),
        DesError::UnknownDevice(device) if *device == conn.from.device => Some("from"),
        DesError::UnknownDevice(_) => Some("to"),
        _ => None,
    };
    match side {
        Some(s) => format!("{base}/{s}"),
        None => base,
    }
}

/// Builds the simulation, or returns every problem found: settings first,
/// then devices, then connections.
pub fn assemble(graph: &ExperimentGraph, default_cutoff: usize) -> Result<Simulation, Vec<Issue>> {
    let mut issues = Vec::new();
    if graph.schema != SCHEMA_VERSION {
        issues.push(Issue::new("/schema", format!("unsupported schema {:?}; expected {SCHEMA_VERSION:?}", graph.schema)));
    }
    let config = sim_config(graph, default_cutoff, &mut issues);
    let mut sim = Simulation::new(config);
    let mut seen = HashSet::new();
    let mut broken = HashSet::new();
    for (i, decl) in graph.devices.iter().enumerate() {
        let base = format!("/devices/{i}");
        if decl.id.is_empty() || decl.id.contains('.') {
            issues.push(Issue::new(format!("{base}/id"), format!("device id {:?} must be non-empty and free of '.'", decl.id)));
            broken.insert(decl.id.clone());
            continue;
        }
        if !seen.insert(decl.id.clone()) {
            issues.push(Issue::new(format!("{base}/id"), format!("duplicate device id {:?}", decl.id)));
            continue;
        }
        match build_device(&decl.type_name, &Value::Object(decl.parameters.clone())) {
            Ok(device) => {
                sim.add_device(&decl.id, device).expect("ids were checked for uniqueness");
            }
            Err(e) => {
                let pointer = match &e.parameter {
                    Some(p) => format!("{base}/parameters/{}", escape_token(p)),
                    None => format!("{base}/type"),
                };
                issues.push(Issue::new(pointer, format!("{}: {}", decl.id, e.message)));
                broken.insert(decl.id.clone());
            }
        }
    }
    for (j, conn) in graph.connections.iter().enumerate() {
        // Devices that failed to build already have their own issue.
        if broken.contains(&conn.from.device) || broken.contains(&conn.to.device) {
            continue;
        }
        if let Err(e) = sim.connect(&conn.from.device, &conn.from.port, &conn.to.device, &conn.to.port) {
            issues.push(Issue::new(connection_pointer(j, conn, &e), e.to_string()));
        }
    }
    if issues.is_empty() {
        Ok(sim)
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc(v: Value) -> String {
        v.to_string()
    }

    #[test]
    fn empty_graph_is_valid() {
        let g = load_experiment_str(&doc(json!({ "schema": SCHEMA_VERSION, "devices": [], "connections": [] }))).unwrap();
        assert!(g.devices.is_empty() && g.connections.is_empty());
        assert_eq!(g.sim, SimSettings::default());
    }

    #[test]
    fn schema_is_required() {
        let issues = validate_text(&doc(json!({ "devices": [] })));
        assert_eq!(issues[0].pointer, "/schema");
        let issues = validate_text(&doc(json!({ "schema": "qsim_graph_v0" })));
        assert_eq!(issues[0].pointer, "/schema");
    }

    #[test]
    fn malformed_json_reports_position() {
        let issues = validate_text("{\"schema\": ");
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].pointer, "");
        assert!(issues[0].error.contains("line 1"));
    }

    #[test]
    fn schema_violation_points_into_document() {
        let text = doc(json!({ "schema": SCHEMA_VERSION, "devices": [{ "id": "a", "type": 7 }] }));
        assert_eq!(validate_text(&text)[0].pointer, "/devices/0/type");
        let text = doc(json!({ "schema": SCHEMA_VERSION, "connections": [{ "from": "a", "to": "b.in" }] }));
        assert_eq!(validate_text(&text)[0].pointer, "/connections/0/from");
    }

    #[test]
    fn nonexistent_port_is_named() {
        let g = ExperimentGraph::new()
            .device("src", "single_photon_source", json!({}))
            .device("det", "photon_detector", json!({}))
            .connect("src.out", "det.input");
        let issues = validate(&g);
        assert_eq!(issues, vec![Issue::new("/connections/0/to", "device det has no port input")]);
    }

    #[test]
    fn incompatible_kinds_name_both() {
        let g = ExperimentGraph::new()
            .device("a", "photon_detector", json!({}))
            .device("b", "beam_splitter", json!({}))
            .connect("a.out", "b.in1");
        let issues = validate(&g);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].pointer, "/connections/0");
        assert!(issues[0].error.contains("DetectionSignal") && issues[0].error.contains("GenericQuantumSignal"));
    }

    #[test]
    fn device_and_option_errors() {
        let mut g = ExperimentGraph::new()
            .device("a", "warp_drive", json!({}))
            .device("b", "beam_splitter", json!({ "theta": "wide" }))
            .device("b", "beam_splitter", json!({}))
            .connect("a.out", "b.in1");
        g.sim.cutoff = Some(0);
        g.sim.options.insert("speed".into(), json!(1));
        let pointers: Vec<String> = validate(&g).into_iter().map(|i| i.pointer).collect();
        assert_eq!(
            pointers,
            ["/sim/cutoff", "/sim/options/speed", "/devices/0/type", "/devices/1/parameters/theta", "/devices/2/id"]
        );
    }

    #[test]
    fn ui_key_is_carried_but_ignored() {
        let text = doc(json!({
            "schema": SCHEMA_VERSION,
            "devices": [{ "id": "s", "type": "single_photon_source", "ui": { "x": 1, "y": 2 } }],
            "ui": { "zoom": 1.5 }
        }));
        let g = load_experiment_str(&text).unwrap();
        assert_eq!(g.ui, Some(json!({ "zoom": 1.5 })));
        assert_eq!(load_experiment_str(&g.to_json_pretty()).unwrap(), g);
    }

    #[test]
    fn sim_settings_accept_decimal_strings() {
        let text = doc(json!({ "schema": SCHEMA_VERSION, "sim": { "until": "2.5e-9", "seed": 7, "cutoff": 5 } }));
        let g = load_experiment_str(&text).unwrap();
        assert_eq!(g.sim.until, "0.0000000025".parse().unwrap());
        assert_eq!(effective_cutoff(&g, 9), 5);
    }
}
