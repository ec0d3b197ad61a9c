//! Reading config and problem documents.
//!
//! A config document is a device description with optional side sections:
//!
//! ```text
//! { "n_channels": 4, "kappa": "inf", "channels": [...],
//!   "simulation": { "n_spins": 200, "pulse": {...}, "t_end": 30 },
//!   "verify": { ... },
//!   "description": "free text" }
//! ```
//!
//! Schema errors carry the path of the offending field.

use std::path::Path;

use mrqm::timesim::PulseSpec;
use mrqm::DeviceConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::Failure;
use crate::verify::VerifySpec;

/// Options for `simulate`, read from the `simulation` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDoc {
    pub n_spins: usize,
    /// Defaults to the plateau-matched Gaussian.
    #[serde(default)]
    pub pulse: Option<PulseSpec>,
    /// Defaults to the largest stable step.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Defaults to the pulse's default span.
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Write spin trajectories every this many steps.
    #[serde(default)]
    pub spin_stride: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ConfigDoc {
    pub device: DeviceConfig,
    pub simulation: Option<SimulationDoc>,
    pub verify: Option<VerifySpec>,
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn parse_value(text: &str, origin: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::schema(format!("{origin}: invalid JSON: {e}")))
}

/// Deserializes `value`, reporting the field path on failure. `prefix` is
/// the path of `value` inside the whole document.
fn typed<T: DeserializeOwned>(value: Value, origin: &str, prefix: &str) -> Result<T, Failure> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner == ".") {
            (true, _) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        Failure::schema(format!("{origin}: {path}: {}", e.into_inner()))
    })
}

pub fn parse_config(text: &str, origin: &str) -> Result<ConfigDoc, Failure> {
    let mut value = parse_value(text, origin)?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Failure::schema(format!("{origin}: top level must be an object")));
    };
    obj.remove("description");
    let simulation = obj.remove("simulation");
    let verify = obj.remove("verify");
    let device = typed(value, origin, "")?;
    let simulation = simulation.map(|v| typed(v, origin, "simulation")).transpose()?;
    let verify = verify.map(|v| typed(v, origin, "verify")).transpose()?;
    Ok(ConfigDoc { device, simulation, verify })
}

pub fn read_config(path: &Path) -> Result<ConfigDoc, Failure> {
    parse_config(&read_text(path)?, &path.display().to_string())
}

/// Any other document (problems, results); a top-level `description` key
/// is ignored.
pub fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let origin = path.display().to_string();
    let mut value = parse_value(&read_text(path)?, &origin)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("description");
    }
    typed(value, &origin, "")
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEVICE: &str = r#"{
        "n_channels": 2, "kappa": 50,
        "channels": [
            {"index": -1, "f_sq": 1.0, "gamma2_inv": 1.0, "g": 0.5, "delta_c": -0.5},
            {"index": 1, "f_sq": 1.0, "gamma2_inv": 1.0, "g": 0.5, "delta_c": 0.5}
        ]
    }"#;

    #[test]
    fn side_sections_are_optional() {
        let doc = parse_config(DEVICE, "t").unwrap();
        assert_eq!(doc.device.n_channels, 2);
        assert!(doc.simulation.is_none() && doc.verify.is_none());
    }

    #[test]
    fn simulation_section_is_parsed() {
        let mut v: Value = serde_json::from_str(DEVICE).unwrap();
        v["simulation"] = serde_json::json!({"n_spins": 8, "t_end": 12.5});
        let doc = parse_config(&v.to_string(), "t").unwrap();
        let sim = doc.simulation.unwrap();
        assert_eq!((sim.n_spins, sim.t_end, sim.dt), (8, Some(12.5), None));
    }

    #[test]
    fn errors_name_the_field() {
        let mut v: Value = serde_json::from_str(DEVICE).unwrap();
        v["channels"][1]["g"] = serde_json::json!("big");
        let err = parse_config(&v.to_string(), "t").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("channels[1].g"), "{}", err.message);

        let mut v: Value = serde_json::from_str(DEVICE).unwrap();
        v["simulation"] = serde_json::json!({"n_spins": 8, "pulse": {"shape": "lorentz", "center_time": 1, "duration": 1}});
        let err = parse_config(&v.to_string(), "t").unwrap_err();
        assert!(err.message.contains("simulation.pulse.shape"), "{}", err.message);

        let mut v: Value = serde_json::from_str(DEVICE).unwrap();
        v["channels"][0]["g"] = serde_json::json!(-1.0);
        let err = parse_config(&v.to_string(), "t").unwrap_err();
        assert!(err.message.contains("channels[0].g"), "{}", err.message);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: Value = serde_json::from_str(DEVICE).unwrap();
        v["kapa"] = serde_json::json!(3);
        assert_eq!(parse_config(&v.to_string(), "t").unwrap_err().code, 2);
        assert_eq!(parse_config("[1, 2]", "t").unwrap_err().code, 2);
        assert_eq!(parse_config("{", "t").unwrap_err().code, 2);
    }
}
