use serde::Serialize;
use serde_json::{Map, Value};

use crate::des::SimTime;
use crate::fock::C64;

/// Problem with a device's type or parameters. `parameter` is `None` when the
/// device type itself is at fault.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ParamError {
    pub parameter: Option<String>,
    pub message: String,
}

impl ParamError {
    pub fn new(parameter: &str, message: impl Into<String>) -> Self {
        Self { parameter: Some(parameter.into()), message: message.into() }
    }

    pub fn device(message: impl Into<String>) -> Self {
        Self { parameter: None, message: message.into() }
    }
}

pub type ParamResult<T> = std::result::Result<T, ParamError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Number,
    Complex,
    /// Decimal string or number.
    Decimal,
    Integer,
    Boolean,
    Choice,
}

/// Catalog description of one device parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<&'static str>,
    pub default: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<&'static str>,
    pub description: &'static str,
}

impl ParamSpec {
    pub fn new(name: &'static str, ty: ParamType, default: Value, description: &'static str) -> Self {
        Self { name, ty, unit: None, default, choices: Vec::new(), description }
    }

    pub fn unit(mut self, unit: &'static str) -> Self {
        self.unit = Some(unit);
        self
    }

    pub fn choices(mut self, choices: &[&'static str]) -> Self {
        self.choices = choices.to_vec();
        self
    }
}

/// Typed, strict view of a device's `parameters` object.
pub(crate) struct Params<'a> {
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Params<'a> {
    /// Fails on anything other than an object (or null) and on unknown keys.
    pub fn new(value: &'a Value, specs: &[ParamSpec]) -> ParamResult<Self> {
        let map = match value {
            Value::Null => None,
            Value::Object(m) => Some(m),
            _ => return Err(ParamError::device("parameters must be an object")),
        };
        if let Some(m) = map {
            if let Some(key) = m.keys().find(|k| !specs.iter().any(|s| s.name == k.as_str())) {
                return Err(ParamError::new(key, format!("unknown parameter {key:?}")));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, name: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(name)).filter(|v| !v.is_null())
    }

    pub fn number(&self, name: &str, default: f64) -> ParamResult<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParamError::new(name, format!("{name} must be a finite number"))),
        }
    }

    /// A number (real part) or an object `{"re": .., "im": ..}`.
    pub fn complex(&self, name: &str, default: C64) -> ParamResult<C64> {
        let bad = || ParamError::new(name, format!("{name} must be a number or {{\"re\", \"im\"}}"));
        match self.get(name) {
            None => Ok(default),
            Some(Value::Number(n)) => n.as_f64().map(|x| C64::new(x, 0.0)).ok_or_else(bad),
            Some(Value::Object(o)) => {
                if o.keys().any(|k| k != "re" && k != "im") {
                    return Err(bad());
                }
                let part = |k: &str| o.get(k).map_or(Some(0.0), Value::as_f64).ok_or_else(bad);
                let z = C64::new(part("re")?, part("im")?);
                if z.re.is_finite() && z.im.is_finite() {
                    Ok(z)
                } else {
                    Err(bad())
                }
            }
            Some(_) => Err(bad()),
        }
    }

    /// A decimal string or number, kept exact.
    pub fn decimal(&self, name: &str, default: SimTime) -> ParamResult<SimTime> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => serde_json::from_value::<SimTime>(v.clone()).map_err(|e| ParamError::new(name, e.to_string())),
        }
    }

    pub fn integer(&self, name: &str, default: u64) -> ParamResult<u64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| ParamError::new(name, format!("{name} must be a non-negative integer"))),
        }
    }

    pub fn boolean(&self, name: &str, default: bool) -> ParamResult<bool> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| ParamError::new(name, format!("{name} must be a boolean"))),
        }
    }

    pub fn choice(&self, name: &str, choices: &[&'static str], default: &'static str) -> ParamResult<&'static str> {
        match self.get(name) {
            None => Ok(default),
            Some(Value::String(s)) => choices
                .iter()
                .find(|c| **c == s.as_str())
                .copied()
                .ok_or_else(|| ParamError::new(name, format!("{name} must be one of {choices:?}, got {s:?}"))),
            Some(_) => Err(ParamError::new(name, format!("{name} must be a string"))),
        }
    }
}
