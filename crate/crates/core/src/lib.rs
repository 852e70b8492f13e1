//! Simulation kernel for photonic quantum experiments.
//!
//! - [`fock`]: truncated Fock-space states, gates and measurements.
//! - [`temporal`]: Gaussian temporal envelopes and overlap-aware beam splitting.
//! - [`des`]: the deterministic discrete-event engine (devices, ports, signals).
//! - [`devices`]: ideal optical devices built on the engine.

pub mod fock;
pub mod temporal;
pub mod des;
pub mod devices;
