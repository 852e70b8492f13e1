use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::registry::ModeId;
use super::DesError;
use crate::temporal::GaussianEnvelope;

pub const GENERIC_SIGNAL: &str = "GenericSignal";
pub const GENERIC_QUANTUM_SIGNAL: &str = "GenericQuantumSignal";
pub const PHOTONIC_QUANTUM_SIGNAL: &str = "PhotonicQuantumSignal";
pub const GENERIC_CLASSICAL_SIGNAL: &str = "GenericClassicalSignal";
pub const DETECTION_SIGNAL: &str = "DetectionSignal";

/// Named signal kinds linked to an optional parent.
///
/// A kind can only be registered under an existing parent, so the graph is a
/// forest by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindRegistry {
    parents: BTreeMap<String, Option<String>>,
}

impl Default for KindRegistry {
    fn default() -> Self {
        let mut r = Self { parents: BTreeMap::new() };
        r.parents.insert(GENERIC_SIGNAL.into(), None);
        for (kind, parent) in [
            (GENERIC_QUANTUM_SIGNAL, GENERIC_SIGNAL),
            (PHOTONIC_QUANTUM_SIGNAL, GENERIC_QUANTUM_SIGNAL),
            (GENERIC_CLASSICAL_SIGNAL, GENERIC_SIGNAL),
            (DETECTION_SIGNAL, GENERIC_CLASSICAL_SIGNAL),
        ] {
            r.register(kind, Some(parent)).expect("built-in kinds are consistent");
        }
        r
    }
}

impl KindRegistry {
    pub fn register(&mut self, name: &str, parent: Option<&str>) -> Result<(), DesError> {
        if self.parents.contains_key(name) {
            return Err(DesError::Kind(format!("signal kind {name} already registered")));
        }
        if let Some(p) = parent {
            self.require(p)?;
        }
        self.parents.insert(name.into(), parent.map(str::to_owned));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.parents.contains_key(name)
    }

    fn require(&self, name: &str) -> Result<(), DesError> {
        if self.contains(name) {
            Ok(())
        } else {
            Err(DesError::Kind(format!("unknown signal kind {name}")))
        }
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).and_then(|p| p.as_deref())
    }

    /// Reflexive-transitive closure of the parent links.
    pub fn is_subtype(&self, kind: &str, of: &str) -> Result<bool, DesError> {
        self.require(kind)?;
        self.require(of)?;
        let mut cur = Some(kind);
        while let Some(k) = cur {
            if k == of {
                return Ok(true);
            }
            cur = self.parent(k);
        }
        Ok(false)
    }

    pub fn is_quantum(&self, kind: &str) -> bool {
        self.is_subtype(kind, GENERIC_QUANTUM_SIGNAL).unwrap_or(false)
    }

    pub fn kinds(&self) -> impl Iterator<Item = (&str, Option<&str>)> {
        self.parents.iter().map(|(k, p)| (k.as_str(), p.as_deref()))
    }
}

/// Handle to one optical mode held by the run's quantum registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumPayload {
    pub mode: ModeId,
    pub envelope: GaussianEnvelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Classical { value: serde_json::Value },
    Quantum(QuantumPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub kind: String,
    pub payload: Payload,
}

impl Signal {
    pub fn photonic(mode: ModeId, envelope: GaussianEnvelope) -> Self {
        Self { kind: PHOTONIC_QUANTUM_SIGNAL.into(), payload: Payload::Quantum(QuantumPayload { mode, envelope }) }
    }

    pub fn classical(kind: &str, value: serde_json::Value) -> Self {
        Self { kind: kind.into(), payload: Payload::Classical { value } }
    }

    pub fn quantum(&self) -> Option<&QuantumPayload> {
        match &self.payload {
            Payload::Quantum(q) => Some(q),
            Payload::Classical { .. } => None,
        }
    }

    /// Quantum kinds must carry a quantum payload and classical kinds a classical one.
    pub fn check_shape(&self, kinds: &KindRegistry) -> Result<(), DesError> {
        let quantum_kind = {
            kinds.require(&self.kind)?;
            kinds.is_quantum(&self.kind)
        };
        if quantum_kind != self.quantum().is_some() {
            return Err(DesError::Kind(format!("payload does not match signal kind {}", self.kind)));
        }
        Ok(())
    }

    /// Short description used in traces.
    pub fn summary(&self) -> serde_json::Value {
        match &self.payload {
            Payload::Quantum(q) => serde_json::json!({
                "kind": self.kind,
                "mode": q.mode.0,
                "t0": q.envelope.t0,
            }),
            Payload::Classical { value } => serde_json::json!({ "kind": self.kind, "value": value }),
        }
    }
}
