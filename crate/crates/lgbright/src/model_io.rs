//! JSON form of dispersion models.
//!
//! ```json
//! {"name": "ktp-z", "sellmeier": [..], "thermo_optic": [..],
//!  "lambda_range_um": [0.35, 1.7], "temp_range_C": [0, 200],
//!  "reference_temp_C": 25}
//! ```
//!
//! `reference_temp_C` is optional and defaults to 25 °C.

use std::path::Path;

use lgbright_core::dispersion::DispersionModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    pub sellmeier: Vec<f64>,
    pub thermo_optic: Vec<f64>,
    pub lambda_range_um: [f64; 2],
    #[serde(rename = "temp_range_C")]
    pub temp_range_c: [f64; 2],
    #[serde(rename = "reference_temp_C", default = "default_reference")]
    pub reference_temp_c: f64,
}

fn default_reference() -> f64 {
    25.0
}

impl From<&DispersionModel> for ModelDocument {
    fn from(m: &DispersionModel) -> Self {
        let (a, b) = m.lambda_range_um();
        let (c, d) = m.temp_range_c();
        Self {
            name: m.name().to_string(),
            sellmeier: m.sellmeier().to_vec(),
            thermo_optic: m.thermo_optic().to_vec(),
            lambda_range_um: [a, b],
            temp_range_c: [c, d],
            reference_temp_c: m.reference_temp_c(),
        }
    }
}

impl ModelDocument {
    pub fn build(&self) -> lgbright_core::Result<DispersionModel> {
        DispersionModel::new(
            self.name.clone(),
            self.sellmeier.clone(),
            self.thermo_optic.clone(),
            (self.lambda_range_um[0], self.lambda_range_um[1]),
            (self.temp_range_c[0], self.temp_range_c[1]),
            self.reference_temp_c,
        )
    }
}

pub fn model_from_json(text: &str, source_name: &str) -> CliResult<DispersionModel> {
    let doc: ModelDocument = serde_json::from_str(text)
        .map_err(|e| CliError::Model { source_name: source_name.to_string(), message: e.to_string() })?;
    doc.build().map_err(|e| CliError::Model { source_name: source_name.to_string(), message: e.to_string() })
}

pub fn model_to_json(model: &DispersionModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("model document serialises")
}

/// A built-in name, or else a path to a JSON model document.
pub fn resolve_model(spec: &str) -> CliResult<DispersionModel> {
    if let Some(m) = DispersionModel::builtin(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Model {
        source_name: spec.to_string(),
        message: format!("not a built-in model and not readable as a file ({e})"),
    })?;
    model_from_json(&text, spec)
}
