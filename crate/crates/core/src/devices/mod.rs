//! Ideal optical devices for the discrete-event engine.

mod beamsplitter;
mod detector;
mod jdr;
mod optics;
mod params;
mod source;

pub use beamsplitter::{beamsplitter_device, BeamSplitter, BeamSplitterOutput, BeamSplitterParams};
pub use detector::{detector_measure, DetectionOutcome, DetectionRecord, DetectorMode, PhotonDetector};
pub use jdr::{
    bits_to_string, codeword_bits, decode, encoded_state, jdr_receiver_step, DecoderConfig, GuessOrder, JdrMode,
    JdrReceiver, JdrRow, JdrSnapshot, JdrStep, JdrTranscript, PovmPair,
};
pub use optics::{fiber_phase, fiber_transform, FiberParams, IdealFiber, ModeGate};
pub use params::{ParamError, ParamResult, ParamSpec, ParamType};
pub use source::{default_omega, source_emit, Source, SourceKind};

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::des::{Device, DesError, DeviceContext, PortSpec, QuantumPayload, Signal};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Catalog entry: type name, ports and parameter schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceInfo {
    #[serde(rename = "type")]
    pub type_name: &'static str,
    pub description: &'static str,
    pub ports: Vec<PortSpec>,
    pub parameters: Vec<ParamSpec>,
}

type Builder = fn(&Value) -> ParamResult<Box<dyn Device>>;

fn registry() -> Vec<(fn() -> DeviceInfo, Builder)> {
    vec![
        (source::single_photon_info, source::build_single_photon),
        (source::coherent_info, source::build_coherent),
        (optics::phase_shifter_info, optics::build_phase_shifter),
        (optics::displacer_info, optics::build_displacer),
        (optics::fiber_info, optics::build_fiber),
        (beamsplitter::info, beamsplitter::build),
        (detector::info, detector::build),
        (jdr::info, jdr::build),
    ]
}

/// Every built-in device type.
pub fn catalog() -> Vec<DeviceInfo> {
    registry().into_iter().map(|(info, _)| info()).collect()
}

/// Instantiates a device of `type_name` from its JSON parameters.
pub fn build_device(type_name: &str, params: &Value) -> ParamResult<Box<dyn Device>> {
    registry()
        .into_iter()
        .find(|(info, _)| info().type_name == type_name)
        .map(|(_, build)| build(params))
        .unwrap_or_else(|| Err(ParamError::device(format!("unknown device type {type_name:?}"))))
}

/// Removes the signal on `port` and returns its quantum payload.
pub(crate) fn take_quantum(
    ctx: &DeviceContext<'_>,
    inputs: &mut BTreeMap<String, Signal>,
    port: &str,
) -> Result<QuantumPayload, DesError> {
    let sig = inputs.remove(port).ok_or_else(|| ctx.error(format!("no signal on {port}")))?;
    sig.quantum().copied().ok_or_else(|| ctx.error(format!("classical signal on {port}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn catalog_is_buildable_with_defaults() {
        for info in catalog() {
            let dev = build_device(info.type_name, &Value::Null).unwrap();
            assert_eq!(dev.type_name(), info.type_name);
            assert_eq!(dev.ports(), info.ports);
        }
    }

    #[test]
    fn fiber_length_is_in_meters() {
        let fiber = catalog().into_iter().find(|d| d.type_name == "ideal_fiber").unwrap();
        let length = fiber.parameters.iter().find(|p| p.name == "length").unwrap();
        assert_eq!(length.unit, Some("m"));
    }

    #[test]
    fn unknown_type_and_parameter() {
        assert!(build_device("warp_drive", &Value::Null).err().unwrap().parameter.is_none());
        let err = build_device("beam_splitter", &json!({ "thetta": 1 })).err().unwrap();
        assert_eq!(err.parameter.as_deref(), Some("thetta"));
    }
}
