//! JSON model and gain files.
//!
//! Model file:
//!
//! ```json
//! { "sample_period": 0.1, "n_drop": 3,
//!   "continuous_modes": [{"label": "J1", "a": [[-4, -0.03], [0.5, -6.667]], "b": [[2], [0]]}] }
//! ```
//!
//! with exactly one of `continuous_modes` (`a`, `b`) or `discrete_modes`
//! (`f`, `g`). Gain file: `gains` (list of row-major `m × n` arrays) plus
//! optional `p`, `q`, `status`, `history`, `settings` and
//! `plant_fingerprint` (SHA-256 of the model file bytes, hex).

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cclsynth::{CclResult, CclSettings, CclStatus, IterationRecord};
use crate::densela::Matrix;
use crate::ncsmodel::{discretize, ContinuousMode, GainSchedule, ModelError, PlantMode, SwitchedPlant};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

type Rows = Vec<Vec<f64>>;

fn to_matrix(field: &str, rows: &Rows) -> Result<Matrix, FileError> {
    if rows.is_empty() {
        return Err(field_err(field, "matrix has no rows"));
    }
    Matrix::from_rows(rows).map_err(|e| field_err(field, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContinuousModeJson {
    #[serde(default)]
    label: String,
    a: Rows,
    b: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscreteModeJson {
    #[serde(default)]
    label: String,
    f: Rows,
    g: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    sample_period: f64,
    n_drop: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    continuous_modes: Option<Vec<ContinuousModeJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discrete_modes: Option<Vec<DiscreteModeJson>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSet {
    Continuous(Vec<ContinuousMode>),
    Discrete(Vec<PlantMode>),
}

/// Parsed and validated model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub sample_period: f64,
    pub n_drop: usize,
    pub modes: ModeSet,
}

fn default_label(label: &str, i: usize) -> String {
    if label.is_empty() {
        format!("mode{}", i + 1)
    } else {
        label.to_string()
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, FileError> {
        let raw: ModelJson = serde_json::from_str(text)?;
        if !(raw.sample_period.is_finite() && raw.sample_period > 0.0) {
            return Err(field_err("sample_period", "must be a positive number"));
        }
        if raw.n_drop == 0 {
            return Err(field_err("n_drop", "must be at least 1"));
        }
        let modes = match (raw.continuous_modes, raw.discrete_modes) {
            (Some(_), Some(_)) => {
                return Err(field_err(
                    "continuous_modes",
                    "give either continuous_modes or discrete_modes, not both",
                ))
            }
            (None, None) => return Err(field_err("continuous_modes", "one of continuous_modes or discrete_modes is required")),
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(field_err("continuous_modes", "list is empty"));
                }
                ModeSet::Continuous(
                    list.iter()
                        .enumerate()
                        .map(|(i, m)| {
                            let a = to_matrix(&format!("continuous_modes[{i}].a"), &m.a)?;
                            let b = to_matrix(&format!("continuous_modes[{i}].b"), &m.b)?;
                            ContinuousMode::new(a, b, default_label(&m.label, i))
                                .map_err(|e| field_err(format!("continuous_modes[{i}]"), e.to_string()))
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(field_err("discrete_modes", "list is empty"));
                }
                ModeSet::Discrete(
                    list.iter()
                        .enumerate()
                        .map(|(i, m)| {
                            let f = to_matrix(&format!("discrete_modes[{i}].f"), &m.f)?;
                            let g = to_matrix(&format!("discrete_modes[{i}].g"), &m.g)?;
                            PlantMode::new(f, g, default_label(&m.label, i))
                                .map_err(|e| field_err(format!("discrete_modes[{i}]"), e.to_string()))
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
        };
        let model_file = Self {
            sample_period: raw.sample_period,
            n_drop: raw.n_drop,
            modes,
        };
        // Shape consistency across modes.
        model_file.plant(None, None).map_err(|e| match e {
            FileError::Model(m) => field_err("modes", m.to_string()),
            other => other,
        })?;
        Ok(model_file)
    }

    pub fn to_json(&self) -> String {
        let raw = ModelJson {
            sample_period: self.sample_period,
            n_drop: self.n_drop,
            continuous_modes: match &self.modes {
                ModeSet::Continuous(list) => Some(
                    list.iter()
                        .map(|m| ContinuousModeJson {
                            label: m.label.clone(),
                            a: m.a.to_rows(),
                            b: m.b.to_rows(),
                        })
                        .collect(),
                ),
                ModeSet::Discrete(_) => None,
            },
            discrete_modes: match &self.modes {
                ModeSet::Discrete(list) => Some(
                    list.iter()
                        .map(|m| DiscreteModeJson {
                            label: m.label.clone(),
                            f: m.f.to_rows(),
                            g: m.g.to_rows(),
                        })
                        .collect(),
                ),
                ModeSet::Continuous(_) => None,
            },
        };
        to_json_text(&raw)
    }

    /// Builds the discrete plant, discretizing continuous modes at the
    /// (possibly overridden) sample period.
    pub fn plant(&self, h_override: Option<f64>, n_drop_override: Option<usize>) -> Result<SwitchedPlant, FileError> {
        let h = h_override.unwrap_or(self.sample_period);
        let modes = match &self.modes {
            ModeSet::Continuous(list) => list.iter().map(|m| discretize(m, h)).collect::<Result<Vec<_>, _>>()?,
            ModeSet::Discrete(list) => {
                if h_override.is_some_and(|v| v != self.sample_period) {
                    return Err(field_err(
                        "sample_period",
                        "discrete modes cannot be resampled; remove the override",
                    ));
                }
                list.clone()
            }
        };
        Ok(SwitchedPlant::new(modes, h, n_drop_override.unwrap_or(self.n_drop))?)
    }

    /// Discrete-mode model file for an already discretized plant.
    pub fn from_plant(plant: &SwitchedPlant) -> Self {
        Self {
            sample_period: plant.sample_period(),
            n_drop: plant.n_drop(),
            modes: ModeSet::Discrete(plant.modes().to_vec()),
        }
    }
}

/// Pretty JSON that keeps arrays without objects (vectors, matrices) on
/// one line.
fn to_json_text<T: Serialize>(value: &T) -> String {
    fn has_object(v: &Value) -> bool {
        match v {
            Value::Object(_) => true,
            Value::Array(items) => items.iter().any(has_object),
            _ => false,
        }
    }
    fn write(v: &Value, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent + 1);
        match v {
            Value::Object(map) if !map.is_empty() => {
                out.push_str("{\n");
                for (i, (k, item)) in map.iter().enumerate() {
                    out.push_str(&pad);
                    out.push_str(&Value::String(k.clone()).to_string());
                    out.push_str(": ");
                    write(item, indent + 1, out);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
            Value::Array(items) if has_object(v) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad);
                    write(item, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write(item, indent, out);
                }
                out.push(']');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let value = serde_json::to_value(value).expect("plain data serializes");
    let mut out = String::new();
    write(&value, 0, &mut out);
    out.push('\n');
    out
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFile {
    pub gains: Vec<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<CclStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<IterationRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<CclSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant_fingerprint: Option<String>,
}

impl GainFile {
    pub fn from_schedule(gains: &GainSchedule) -> Self {
        Self {
            gains: gains.gains().iter().map(Matrix::to_rows).collect(),
            p: None,
            q: None,
            status: None,
            history: None,
            settings: None,
            plant_fingerprint: None,
        }
    }

    pub fn from_result(result: &CclResult, settings: &CclSettings, plant_fingerprint: Option<String>) -> Self {
        Self {
            p: Some(result.p.to_rows()),
            q: Some(result.q.to_rows()),
            status: Some(result.status),
            history: Some(result.history.clone()),
            settings: Some(*settings),
            plant_fingerprint,
            ..Self::from_schedule(&result.gains)
        }
    }

    pub fn from_json(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        to_json_text(self)
    }

    pub fn schedule(&self) -> Result<GainSchedule, FileError> {
        if self.gains.is_empty() {
            return Err(field_err("gains", "list is empty"));
        }
        let gains = self
            .gains
            .iter()
            .enumerate()
            .map(|(i, rows)| to_matrix(&format!("gains[{i}]"), rows))
            .collect::<Result<Vec<_>, _>>()?;
        GainSchedule::new(gains).map_err(|e| field_err("gains", e.to_string()))
    }

    pub fn p_matrix(&self) -> Result<Option<Matrix>, FileError> {
        self.p.as_ref().map(|rows| to_matrix("p", rows)).transpose()
    }
}
