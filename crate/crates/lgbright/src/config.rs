//! Run configuration: JSON file, defaults, and flag overrides.
//!
//! Precedence is flags > file > defaults. Every section is optional in the
//! file; unknown keys anywhere are rejected. The default file location can be
//! set with the `LGBRIGHT_CONFIG` environment variable.

use std::path::{Path, PathBuf};

use lgbright_core::dispersion::{CrystalSpec, DispersionModel};
use lgbright_core::optimizer::{OptimizerSettings, SearchRange};
use lgbright_core::quadrature::QuadratureSettings;
use lgbright_core::rates::{FrequencyGrid, Normalization, PumpWaistPolicy, RateSettings, RateWindow, WaistAxis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::model_io::resolve_model;

pub const CONFIG_ENV: &str = "LGBRIGHT_CONFIG";

/// Crystal section, SI units except the temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalConfig {
    pub length_m: f64,
    pub poling_period_m: f64,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    pub pump_wavelength_m: f64,
    /// Scale the poling period with temperature.
    pub thermal_expansion: bool,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        Self::from(CrystalSpec::ppktp_405())
    }
}

impl From<CrystalSpec> for CrystalConfig {
    fn from(c: CrystalSpec) -> Self {
        Self {
            length_m: c.length,
            poling_period_m: c.poling_period,
            temperature_c: c.temperature,
            pump_wavelength_m: c.pump_wavelength,
            thermal_expansion: c.thermal_expansion,
        }
    }
}

impl CrystalConfig {
    pub fn spec(&self) -> CrystalSpec {
        CrystalSpec {
            length: self.length_m,
            poling_period: self.poling_period_m,
            temperature: self.temperature_c,
            pump_wavelength: self.pump_wavelength_m,
            thermal_expansion: self.thermal_expansion,
        }
    }
}

/// (f_p, f_si^d) grid of the `surface` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    pub f_p: SearchRange,
    pub f_si: SearchRange,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            f_p: SearchRange { lo: 0.05, hi: 10.0, points: 16 },
            f_si: SearchRange { lo: 0.05, hi: 20.0, points: 16 },
        }
    }
}

/// (w_s, w_i) grid of the `waist-surface` subcommand, waists in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaistConfig {
    pub w_s_um: WaistAxis,
    pub w_i_um: WaistAxis,
    /// `{"optimize": {"lo": .., "hi": ..}}` or `{"fixed": ..}`, metres.
    pub pump: PumpWaistPolicy,
    /// Refine the grid optimum by local search.
    pub refine: bool,
    /// Rate settings of the full closed-form route used on this surface.
    pub rates: RateSettings,
}

impl Default for WaistConfig {
    fn default() -> Self {
        Self {
            w_s_um: WaistAxis { lo: 10.0, hi: 80.0, points: 9 },
            w_i_um: WaistAxis { lo: 10.0, hi: 80.0, points: 9 },
            pump: PumpWaistPolicy::default(),
            refine: true,
            rates: RateSettings {
                window: RateWindow { lo: 0.85, hi: 1.15 },
                rel_tolerance: 1e-5,
                ..RateSettings::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub crystal: CrystalConfig,
    /// Built-in model name or path to a model JSON document.
    pub dispersion_model: String,
    pub quadrature: QuadratureSettings,
    pub rates: RateSettings,
    pub optimizer: OptimizerSettings,
    pub spectrum_grid: FrequencyGrid,
    pub surface: SurfaceConfig,
    pub waist: WaistConfig,
    pub normalization: Normalization,
    pub output_dir: PathBuf,
    /// Worker cap; `null` means one per core.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crystal: CrystalConfig::default(),
            dispersion_model: DispersionModel::ktp_qpm_calibrated().name().to_string(),
            quadrature: QuadratureSettings::default(),
            rates: RateSettings::default(),
            optimizer: OptimizerSettings::default(),
            spectrum_grid: FrequencyGrid::default(),
            surface: SurfaceConfig::default(),
            waist: WaistConfig::default(),
            normalization: Normalization::GlobalMax,
            output_dir: PathBuf::from("lgbright-out"),
            threads: None,
        }
    }
}

fn value_err(key: &str, e: impl ToString) -> CliError {
    CliError::ConfigValue { key: key.to_string(), message: e.to_string() }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        serde_json::from_str(text)
            .map_err(|e| CliError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ConfigRead { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }

    /// Explicit path, then `$LGBRIGHT_CONFIG`, then built-in defaults.
    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Check every value and resolve the dispersion model.
    pub fn validate(&self) -> CliResult<DispersionModel> {
        let c = &self.crystal;
        for (key, v) in [
            ("crystal.length_m", c.length_m),
            ("crystal.poling_period_m", c.poling_period_m),
            ("crystal.pump_wavelength_m", c.pump_wavelength_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(value_err(key, format!("must be positive and finite, got {v}")));
            }
        }
        let model = resolve_model(&self.dispersion_model)?;
        model.check_temperature(c.temperature_c).map_err(|e| value_err("crystal.temperature_C", e))?;
        self.quadrature.validate().map_err(|e| value_err("quadrature", e))?;
        self.rates.validate().map_err(|e| value_err("rates", e))?;
        self.waist.rates.validate().map_err(|e| value_err("waist.rates", e))?;
        self.optimizer.validate().map_err(|e| value_err("optimizer", e))?;
        self.spectrum_grid.validate().map_err(|e| value_err("spectrum_grid", e))?;
        for (key, r) in [("surface.f_p", &self.surface.f_p), ("surface.f_si", &self.surface.f_si)] {
            r.validate(key).map_err(|e| value_err(key, e))?;
            if r.points < 8 {
                return Err(value_err(key, format!("needs at least 8 points, got {}", r.points)));
            }
        }
        for (key, a) in [("waist.w_s_um", &self.waist.w_s_um), ("waist.w_i_um", &self.waist.w_i_um)] {
            a.values().map_err(|e| value_err(key, e))?;
        }
        match self.waist.pump {
            PumpWaistPolicy::Fixed(w) if !(w > 0.0 && w.is_finite()) => {
                return Err(value_err("waist.pump.fixed", format!("must be positive, got {w}")));
            }
            PumpWaistPolicy::Optimize { lo, hi } if !(lo > 0.0 && hi > lo && hi.is_finite()) => {
                return Err(value_err("waist.pump.optimize", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
            }
            _ => {}
        }
        if self.threads == Some(0) {
            return Err(value_err("threads", "must be at least 1"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(value_err("output_dir", "must not be empty"));
        }
        Ok(model)
    }

    /// Git-style content hash of the effective configuration.
    pub fn content_hash(&self) -> String {
        git_hash(&serde_json::to_vec(self).expect("config serialises"))
    }
}

/// SHA-256 over `blob <len>\0<bytes>`, hex encoded.
pub fn git_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.crystal.temperature_c = 27.5;
        c.threads = Some(3);
        c.waist.pump = PumpWaistPolicy::Fixed(2e-5);
        let back = RunConfig::from_json(&c.to_json(), Path::new("mem")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.content_hash(), c.content_hash());
    }

    #[test]
    fn partial_sections_take_defaults() {
        let c = RunConfig::from_json(
            r#"{"crystal": {"temperature_C": 30.5}, "rates": {"u_points": 1025}}"#,
            Path::new("m"),
        )
        .unwrap();
        assert_eq!(c.crystal.temperature_c, 30.5);
        assert_eq!(c.crystal.length_m, 30e-3);
        assert_eq!(c.rates.u_points, 1025);
        assert_eq!(c.rates.window, RateWindow::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let e = RunConfig::from_json(r#"{"crystal": {"temp": 30}}"#, Path::new("m")).unwrap_err();
        assert!(e.to_string().contains("temp"));
        assert_eq!(e.exit_code(), 2);
        assert!(RunConfig::from_json(r#"{"colour": 1}"#, Path::new("m")).is_err());
    }

    #[test]
    fn temperature_outside_model_names_the_bound() {
        let c = RunConfig::from_json(r#"{"crystal": {"temperature_C": 500}}"#, Path::new("m")).unwrap();
        let e = c.validate().unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("crystal.temperature_C"), "{msg}");
        assert!(msg.contains("200"), "{msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.optimizer.rel_tolerance = 2e-3;
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }
}
