//! Deterministic discrete-event engine.
//!
//! Devices declare typed ports and react to merged input events by returning
//! emissions; the engine routes each emission along the connection graph and
//! enqueues it at its exact decimal timestamp.

mod engine;
mod queue;
mod registry;
mod signal;
mod time;

pub use engine::{
    Device, DeviceContext, Direction, Emission, PortSpec, RunOutput, SimConfig, Simulation, TraceEntry,
    trace_to_json_lines,
};
pub use queue::{EventQueue, MergedEvent, SimEvent};
pub use registry::{ModeId, QuantumRegistry};
pub use signal::{
    KindRegistry, Payload, QuantumPayload, Signal, DETECTION_SIGNAL, GENERIC_CLASSICAL_SIGNAL, GENERIC_QUANTUM_SIGNAL,
    GENERIC_SIGNAL, PHOTONIC_QUANTUM_SIGNAL,
};
pub use time::{SimTime, DEFAULT_PRECISION};

use thiserror::Error;

use crate::fock::FockError;
use crate::temporal::TemporalError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesError {
    #[error("time: {0}")]
    Time(String),
    #[error("signal kind: {0}")]
    Kind(String),
    #[error("quantum registry: {0}")]
    Quantum(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("duplicate device id {0}")]
    DuplicateDevice(String),
    #[error("device {device} has no port {port}")]
    UnknownPort { device: String, port: String },
    #[error("{device}.{port} is not an {expected} port")]
    Direction { device: String, port: String, expected: &'static str },
    #[error("type mismatch: {from} emits {from_kind} but {to} accepts {to_kind}")]
    TypeMismatch { from: String, from_kind: String, to: String, to_kind: String },
    #[error("input {device}.{port} is already connected")]
    InputAlreadyConnected { device: String, port: String },
    #[error("quantum output {device}.{port} can feed only one input")]
    QuantumFanOut { device: String, port: String },
    #[error("two signals reached {device}.{port} at t = {time}")]
    PortConflict { device: String, port: String, time: SimTime },
    #[error("causality violation: {device} emitted at t = {emitted} while handling t = {now}")]
    Causality { device: String, now: SimTime, emitted: SimTime },
    #[error("invalid simulation horizon {0}")]
    Horizon(SimTime),
    #[error("event limit of {0} reached")]
    EventLimit(usize),
    #[error("device {device}: {message}")]
    Device { device: String, message: String },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
}

impl DesError {
    pub fn device(device: &str, message: impl Into<String>) -> Self {
        Self::Device { device: device.into(), message: message.into() }
    }
}
