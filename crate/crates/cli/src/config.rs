//! Run configuration: a flat TOML file with `[ensemble]`, `[sequence]` and
//! `[scan]` sections. Times are ns, phases rad, frequencies rad/ns.

use std::path::Path;

use echo_core::experiment::{PulseAreas, MIN_SCAN_STEPS};
use echo_core::{EnsembleSpec, Fig1Params, GridScheme, ScannedPhase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("invalid --set override `{0}`: expected section.key=value")]
    BadOverride(String),
    #[error("--set {key}: {message}")]
    Override { key: String, message: String },
    #[error("value out of range: {0}")]
    Range(String),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub t1: f64,
    pub t2: f64,
    pub linewidth_fwhm: f64,
    pub n_atoms: usize,
    pub grid_scheme: String,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let spec = EnsembleSpec::default();
        EnsembleSection {
            t1: spec.t1,
            t2: spec.t2,
            linewidth_fwhm: spec.linewidth_fwhm,
            n_atoms: spec.n_atoms,
            grid_scheme: spec.grid_scheme.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub t_w: f64,
    pub t_d1: f64,
    pub dt: f64,
    pub t_r1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub read_dt: Option<f64>,
    pub pulse_duration: f64,
    pub write_area: f64,
    pub data1_area: f64,
    pub data2_area: f64,
    pub read_area: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub dt_samp: f64,
}

impl Default for SequenceSection {
    fn default() -> Self {
        let p = Fig1Params::default();
        SequenceSection {
            t_w: p.t_w,
            t_d1: p.t_d1,
            dt: p.dt,
            t_r1: p.t_r1,
            read_dt: p.read_dt,
            pulse_duration: p.pulse_duration,
            write_area: p.areas.write,
            data1_area: p.areas.data1,
            data2_area: p.areas.data2,
            read_area: p.areas.read,
            a1: p.phases[0],
            a2: p.phases[1],
            a3: p.phases[2],
            a4: p.phases[3],
            a5: p.phases[4],
            dt_samp: p.dt_samp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub phase: String,
    pub n_steps: usize,
    /// Intensity ratios for `visibility-curve`.
    pub ratios: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            phase: "a2".into(),
            n_steps: 32,
            ratios: vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub ensemble: EnsembleSection,
    pub sequence: SequenceSection,
    pub scan: ScanSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line of a toml error message without its location preamble.
fn short_message(err: &toml::de::Error) -> String {
    err.message().lines().next().unwrap_or_default().trim().to_string()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_named(text, "config")
}

fn parse_named(text: &str, source_name: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        source_name: source_name.to_string(),
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: short_message(&e),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let (text, name) = match path {
        Some(p) => (
            std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Read { path: p.display().to_string(), message: e.to_string() })?,
            p.display().to_string(),
        ),
        None => (String::new(), "config".to_string()),
    };
    let cfg = parse_named(&text, &name)?;
    if overrides.is_empty() {
        return Ok(cfg);
    }
    apply_overrides(&cfg, overrides)
}

/// Applies `section.key=value` overrides. Values are read as TOML literals,
/// falling back to a bare string.
pub fn apply_overrides(cfg: &RunConfig, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = toml::Table::try_from(cfg).expect("config serialises to a table");
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
        let (section, field) = key.trim().split_once('.').ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
        let sect = table
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| ConfigError::Override { key: key.to_string(), message: format!("unknown section `{section}`") })?;
        sect.insert(field.to_string(), value);
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Override {
        key: overrides.join(" "),
        message: short_message(&e),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec, ConfigError> {
        let e = &self.ensemble;
        let grid_scheme: GridScheme = e.grid_scheme.parse().map_err(|err: echo_core::EchoError| ConfigError::Range(err.to_string()))?;
        Ok(EnsembleSpec { t1: e.t1, t2: e.t2, linewidth_fwhm: e.linewidth_fwhm, n_atoms: e.n_atoms, grid_scheme })
    }

    pub fn fig1_params(&self) -> Fig1Params {
        let s = &self.sequence;
        Fig1Params {
            t_w: s.t_w,
            t_d1: s.t_d1,
            dt: s.dt,
            t_r1: s.t_r1,
            read_dt: s.read_dt,
            pulse_duration: s.pulse_duration,
            areas: PulseAreas { write: s.write_area, data1: s.data1_area, data2: s.data2_area, read: s.read_area },
            phases: [s.a1, s.a2, s.a3, s.a4, s.a5],
            dt_samp: s.dt_samp,
        }
    }

    pub fn scanned_phase(&self) -> Result<ScannedPhase, ConfigError> {
        self.scan.phase.parse().map_err(|e: echo_core::EchoError| ConfigError::Range(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |e: echo_core::EchoError| ConfigError::Range(e.to_string());
        self.ensemble_spec()?.validate().map_err(range)?;
        let s = &self.sequence;
        for (name, v) in [("write_area", s.write_area), ("data1_area", s.data1_area), ("data2_area", s.data2_area), ("read_area", s.read_area)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::Range(format!("sequence.{name} must be a non-negative angle in rad, got {v}")));
            }
        }
        if [s.t_w, s.t_d1, s.dt, s.t_r1, s.a1, s.a2, s.a3, s.a4, s.a5].iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::Range("sequence times and phases must be finite".into()));
        }
        self.fig1_params().validate().map_err(range)?;
        self.scanned_phase()?;
        if self.scan.n_steps < MIN_SCAN_STEPS {
            return Err(ConfigError::Range(format!(
                "scan.n_steps must be at least {MIN_SCAN_STEPS}, got {}",
                self.scan.n_steps
            )));
        }
        if let Some(r) = self.scan.ratios.iter().find(|r| !(**r >= 0.0)) {
            return Err(ConfigError::Range(format!("scan.ratios must be non-negative, got {r}")));
        }
        Ok(())
    }
}
