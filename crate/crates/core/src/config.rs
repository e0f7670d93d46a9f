//! Run configuration.
//!
//! The primary format is TOML; a file ending in `.json` is read as JSON with
//! the same structure. Every key is optional and defaults to the reference
//! link (340 GHz, 1 km, Eve at (750 m, 30 m)). Unknown keys are rejected.
//!
//! ```toml
//! freq_hz = 340e9
//! cn2 = 5.8e-11
//!
//! [eve]
//! x_m = 750.0
//! y_m = 30.0
//! snr_db = 6.0
//!
//! [scan]
//! mode = "prob"
//! step_m = 5.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atmosphere::{AbsorptionBackend, AbsorptionTable, AtmosphereConditions, WaveModel};
use crate::channel::ScatteringParams;
use crate::secrecy::MiForm;

pub const DEFAULT_MAX_CELLS: usize = 4_000_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}{}: {message}", line_suffix(*line))]
    Parse {
        origin: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{origin}{}: `{key}` {message}", line_suffix(*line))]
    Constraint {
        origin: String,
        key: String,
        line: Option<usize>,
        message: String,
    },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

impl ConfigError {
    /// Dotted key path for constraint violations.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Constraint { key, .. } => Some(key),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Parse { line, .. } | ConfigError::Constraint { line, .. } => *line,
            ConfigError::Read { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScanMode {
    /// Secrecy capacity map, bit/s.
    #[default]
    #[serde(rename = "det")]
    Deterministic,
    /// Outage probability map.
    #[serde(rename = "prob")]
    Probabilistic,
}

impl std::fmt::Display for ScanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScanMode::Deterministic => "det",
            ScanMode::Probabilistic => "prob",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbsorptionKind {
    /// Table shipped with the crate.
    #[default]
    Bundled,
    Constant,
    Table,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorptionConfig {
    pub kind: AbsorptionKind,
    /// Used when `kind = "constant"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db_per_km: Option<f64>,
    /// CSV table used when `kind = "table"`; relative paths resolve against
    /// the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub g: f64,
    pub f: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        let p = ScatteringParams::default();
        Self { g: p.g, f: p.f }
    }
}

/// Bob sits at `(distance_m, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BobConfig {
    pub aperture_m: f64,
    pub fov_deg: f64,
    pub efficiency: f64,
    /// Slot duration; defaults to `1 / data_rate_bps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integration_time_s: Option<f64>,
    /// Background set so that Bob's mean LOS count over the background is
    /// this SNR. Mutually exclusive with `background_count`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_count: Option<f64>,
}

impl Default for BobConfig {
    fn default() -> Self {
        Self {
            aperture_m: 0.05,
            fov_deg: 10.0,
            efficiency: 0.1,
            integration_time_s: None,
            snr_db: None,
            background_count: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EveConfig {
    pub x_m: f64,
    pub y_m: f64,
    pub aperture_m: f64,
    pub fov_deg: f64,
    pub efficiency: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integration_time_s: Option<f64>,
    /// Measured against Bob's mean LOS count, like Bob's own SNR.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_count: Option<f64>,
}

impl Default for EveConfig {
    fn default() -> Self {
        let bob = BobConfig::default();
        Self {
            x_m: 750.0,
            y_m: 30.0,
            aperture_m: bob.aperture_m,
            fov_deg: bob.fov_deg,
            efficiency: bob.efficiency,
            integration_time_s: None,
            snr_db: None,
            background_count: None,
        }
    }
}

/// Background specification for one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    SnrDb(f64),
    Count(f64),
}

impl BobConfig {
    pub fn background(&self) -> Background {
        background(self.snr_db, self.background_count)
    }
}

impl EveConfig {
    pub fn background(&self) -> Background {
        background(self.snr_db, self.background_count)
    }
}

fn background(snr_db: Option<f64>, count: Option<f64>) -> Background {
    match (snr_db, count) {
        (_, Some(c)) => Background::Count(c),
        (Some(s), None) => Background::SnrDb(s),
        (None, None) => Background::SnrDb(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub step_m: f64,
    pub max_cells: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            mode: ScanMode::Deterministic,
            x_min_m: 0.0,
            x_max_m: 1000.0,
            // y = 0 puts Eve on the beam axis
            y_min_m: 2.0,
            y_max_m: 100.0,
            step_m: 2.0,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

impl ScanConfig {
    pub fn nx(&self) -> usize {
        axis_len(self.x_min_m, self.x_max_m, self.step_m)
    }

    pub fn ny(&self) -> usize {
        axis_len(self.y_min_m, self.y_max_m, self.step_m)
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min_m, self.step_m, self.nx())
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min_m, self.step_m, self.ny())
    }
}

fn axis_len(lo: f64, hi: f64, step: f64) -> usize {
    // tolerate the last node landing a rounding error past `hi`
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

fn axis(lo: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    FreqHz,
    Cn2,
    DivergenceAngle,
    EveSnrDb,
    EveFovDeg,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::FreqHz => "freq_hz",
            SweepParam::Cn2 => "cn2",
            SweepParam::DivergenceAngle => "divergence_angle",
            SweepParam::EveSnrDb => "eve_snr_db",
            SweepParam::EveFovDeg => "eve_fov_deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub freq_hz: f64,
    /// Alice to Bob, m.
    pub distance_m: f64,
    /// Full beam divergence, rad.
    pub divergence_angle: f64,
    pub tx_power_w: f64,
    /// Intended data rate; sets the default slot duration.
    pub data_rate_bps: f64,
    /// Outage target rate; defaults to `data_rate_bps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_rate_bps: Option<f64>,
    /// OOK duty cycle.
    pub duty_cycle: f64,
    pub cn2: f64,
    pub temperature_c: f64,
    pub pressure_hpa: f64,
    pub relative_humidity_pct: f64,
    /// Wave model used for the turbulence attenuation.
    pub wave: WaveModel,
    pub mi_form: MiForm,
    /// Seed for Monte Carlo cross-checks.
    pub seed: u64,
    pub absorption: AbsorptionConfig,
    pub scattering: ScatteringConfig,
    pub bob: BobConfig,
    pub eve: EveConfig,
    pub scan: ScanConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Default for Config {
    fn default() -> Self {
        let atm = AtmosphereConditions::default();
        Self {
            freq_hz: 340e9,
            distance_m: 1000.0,
            divergence_angle: 0.02,
            tx_power_w: 0.01,
            data_rate_bps: 10e9,
            target_rate_bps: None,
            duty_cycle: 0.5,
            cn2: atm.cn2,
            temperature_c: atm.temperature_c,
            pressure_hpa: atm.pressure_hpa,
            relative_humidity_pct: atm.relative_humidity_pct,
            wave: WaveModel::default(),
            mi_form: MiForm::default(),
            seed: 0,
            absorption: AbsorptionConfig::default(),
            scattering: ScatteringConfig::default(),
            bob: BobConfig::default(),
            eve: EveConfig::default(),
            scan: ScanConfig::default(),
            sweep: None,
        }
    }
}

/// Constraint violation before it is located in the source text.
struct Violation {
    key: &'static str,
    message: String,
}

fn violation(key: &'static str, message: impl Into<String>) -> Violation {
    Violation {
        key,
        message: message.into(),
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), Violation> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn non_negative(key: &'static str, v: f64) -> Result<(), Violation> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(
            key,
            format!("must be non-negative and finite, got {v}"),
        ))
    }
}

fn finite(key: &'static str, v: f64) -> Result<(), Violation> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(violation(key, format!("must be finite, got {v}")))
    }
}

fn in_open_unit(key: &'static str, v: f64) -> Result<(), Violation> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(violation(key, format!("must lie in (0, 1), got {v}")))
    }
}

fn efficiency(key: &'static str, v: f64) -> Result<(), Violation> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(violation(key, format!("must lie in (0, 1], got {v}")))
    }
}

fn fov(key: &'static str, v: f64) -> Result<(), Violation> {
    if v > 0.0 && v <= 180.0 {
        Ok(())
    } else {
        Err(violation(
            key,
            format!("must lie in (0, 180] degrees, got {v}"),
        ))
    }
}

struct ReceiverKeys {
    aperture: &'static str,
    fov: &'static str,
    efficiency: &'static str,
    tau: &'static str,
    snr: &'static str,
    count: &'static str,
}

fn check_receiver(
    k: &ReceiverKeys,
    aperture_m: f64,
    fov_deg: f64,
    eta: f64,
    tau: Option<f64>,
    snr_db: Option<f64>,
    count: Option<f64>,
) -> Result<(), Violation> {
    positive(k.aperture, aperture_m)?;
    fov(k.fov, fov_deg)?;
    efficiency(k.efficiency, eta)?;
    if let Some(t) = tau {
        positive(k.tau, t)?;
    }
    if let Some(s) = snr_db {
        finite(k.snr, s)?;
    }
    if let Some(c) = count {
        non_negative(k.count, c)?;
    }
    if snr_db.is_some() && count.is_some() {
        return Err(violation(
            k.count,
            format!("conflicts with `{}`; set only one", k.snr),
        ));
    }
    Ok(())
}

impl Config {
    /// Reads a config file, choosing JSON for a `.json` extension and TOML
    /// otherwise. Relative absorption-table paths are made relative to the
    /// file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let origin = path.display().to_string();
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Self::parse_json(&text, &origin)?
        } else {
            Self::parse_toml(&text, &origin)?
        };
        if let (Some(table), Some(dir)) = (cfg.absorption.path.as_mut(), path.parent()) {
            if table.is_relative() {
                *table = dir.join(&*table);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_toml(text, "<config>")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_json(text, "<config>")
    }

    fn parse_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.check().map_err(|v| ConfigError::Constraint {
            origin: origin.to_string(),
            key: v.key.to_string(),
            line: toml_key_line(text, v.key),
            message: v.message,
        })?;
        Ok(cfg)
    }

    fn parse_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        cfg.check().map_err(|v| ConfigError::Constraint {
            origin: origin.to_string(),
            key: v.key.to_string(),
            line: json_key_line(text, v.key),
            message: v.message,
        })?;
        Ok(cfg)
    }

    /// Checks every constraint; the error names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check().map_err(|v| ConfigError::Constraint {
            origin: "<config>".to_string(),
            key: v.key.to_string(),
            line: None,
            message: v.message,
        })
    }

    fn check(&self) -> Result<(), Violation> {
        positive("freq_hz", self.freq_hz)?;
        positive("distance_m", self.distance_m)?;
        positive("divergence_angle", self.divergence_angle)?;
        positive("tx_power_w", self.tx_power_w)?;
        positive("data_rate_bps", self.data_rate_bps)?;
        if let Some(r) = self.target_rate_bps {
            non_negative("target_rate_bps", r)?;
        }
        in_open_unit("duty_cycle", self.duty_cycle)?;
        non_negative("cn2", self.cn2)?;
        finite("temperature_c", self.temperature_c)?;
        positive("pressure_hpa", self.pressure_hpa)?;
        if !(0.0..=100.0).contains(&self.relative_humidity_pct) {
            return Err(violation(
                "relative_humidity_pct",
                format!("must lie in [0, 100], got {}", self.relative_humidity_pct),
            ));
        }

        match self.absorption.kind {
            AbsorptionKind::Constant => match self.absorption.db_per_km {
                Some(v) => non_negative("absorption.db_per_km", v)?,
                None => {
                    return Err(violation(
                        "absorption.db_per_km",
                        "is required when kind = \"constant\"",
                    ))
                }
            },
            AbsorptionKind::Table if self.absorption.path.is_none() => {
                return Err(violation(
                    "absorption.path",
                    "is required when kind = \"table\"",
                ))
            }
            _ => {}
        }

        ScatteringParams::new(self.scattering.g, self.scattering.f).map_err(|e| {
            let key = if self.scattering.g.abs() < 1.0 {
                "scattering.f"
            } else {
                "scattering.g"
            };
            violation(key, e.to_string())
        })?;

        let b = &self.bob;
        check_receiver(
            &ReceiverKeys {
                aperture: "bob.aperture_m",
                fov: "bob.fov_deg",
                efficiency: "bob.efficiency",
                tau: "bob.integration_time_s",
                snr: "bob.snr_db",
                count: "bob.background_count",
            },
            b.aperture_m,
            b.fov_deg,
            b.efficiency,
            b.integration_time_s,
            b.snr_db,
            b.background_count,
        )?;
        let e = &self.eve;
        finite("eve.x_m", e.x_m)?;
        if !(e.y_m.is_finite() && e.y_m != 0.0) {
            return Err(violation(
                "eve.y_m",
                format!("must be finite and non-zero, got {}", e.y_m),
            ));
        }
        check_receiver(
            &ReceiverKeys {
                aperture: "eve.aperture_m",
                fov: "eve.fov_deg",
                efficiency: "eve.efficiency",
                tau: "eve.integration_time_s",
                snr: "eve.snr_db",
                count: "eve.background_count",
            },
            e.aperture_m,
            e.fov_deg,
            e.efficiency,
            e.integration_time_s,
            e.snr_db,
            e.background_count,
        )?;

        let s = &self.scan;
        positive("scan.step_m", s.step_m)?;
        finite("scan.x_min_m", s.x_min_m)?;
        finite("scan.x_max_m", s.x_max_m)?;
        finite("scan.y_min_m", s.y_min_m)?;
        finite("scan.y_max_m", s.y_max_m)?;
        if s.x_max_m < s.x_min_m {
            return Err(violation("scan.x_max_m", "must not be below scan.x_min_m"));
        }
        if s.y_max_m < s.y_min_m {
            return Err(violation("scan.y_max_m", "must not be below scan.y_min_m"));
        }
        let cells = (s.nx() as f64) * (s.ny() as f64);
        if cells > s.max_cells as f64 {
            return Err(violation(
                "scan.step_m",
                format!(
                    "gives {cells} grid cells, above scan.max_cells = {}",
                    s.max_cells
                ),
            ));
        }

        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(violation("sweep.values", "must not be empty"));
            }
            for &v in &sweep.values {
                match sweep.param {
                    SweepParam::FreqHz => positive("sweep.values", v)?,
                    SweepParam::Cn2 => non_negative("sweep.values", v)?,
                    SweepParam::DivergenceAngle => positive("sweep.values", v)?,
                    SweepParam::EveSnrDb => finite("sweep.values", v)?,
                    SweepParam::EveFovDeg => fov("sweep.values", v)?,
                }
            }
            if sweep.param == SweepParam::EveSnrDb && self.eve.background_count.is_some() {
                return Err(violation(
                    "sweep.param",
                    "eve_snr_db cannot be swept while eve.background_count is set",
                ));
            }
        }
        Ok(())
    }

    pub fn atmosphere(&self) -> AtmosphereConditions {
        AtmosphereConditions {
            temperature_c: self.temperature_c,
            pressure_hpa: self.pressure_hpa,
            relative_humidity_pct: self.relative_humidity_pct,
            cn2: self.cn2,
        }
    }

    /// Loads the configured absorption backend.
    pub fn absorption_backend(&self) -> crate::error::Result<AbsorptionBackend> {
        Ok(match self.absorption.kind {
            AbsorptionKind::Bundled => AbsorptionBackend::Table(AbsorptionTable::bundled()),
            AbsorptionKind::Constant => AbsorptionBackend::Constant {
                db_per_km: self.absorption.db_per_km.unwrap_or(0.0),
            },
            AbsorptionKind::Table => {
                let path = self.absorption.path.as_deref().unwrap_or(Path::new(""));
                AbsorptionBackend::Table(AbsorptionTable::from_path(path)?)
            }
        })
    }

    pub fn scattering_params(&self) -> ScatteringParams {
        ScatteringParams {
            g: self.scattering.g,
            f: self.scattering.f,
        }
    }

    /// Slot duration shared by receivers without an explicit one.
    pub fn default_slot_s(&self) -> f64 {
        1.0 / self.data_rate_bps
    }

    pub fn target_rate(&self) -> f64 {
        self.target_rate_bps.unwrap_or(self.data_rate_bps)
    }

    /// Copy with one sweep parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Self {
        let mut c = self.clone();
        match param {
            SweepParam::FreqHz => c.freq_hz = value,
            SweepParam::Cn2 => c.cn2 = value,
            SweepParam::DivergenceAngle => c.divergence_angle = value,
            SweepParam::EveSnrDb => {
                c.eve.snr_db = Some(value);
                c.eve.background_count = None;
            }
            SweepParam::EveFovDeg => c.eve.fov_deg = value,
        }
        c.sweep = None;
        c
    }

    /// Canonical TOML rendering, with every default spelled out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serialises")
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of the value for a dotted key, if it appears in the text.
fn toml_key_line(text: &str, key: &str) -> Option<usize> {
    let root = toml::de::DeTable::parse(text).ok()?;
    let mut table = root.get_ref();
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let (_, value) = table.iter().find(|(k, _)| k.get_ref() == part)?;
        if parts.peek().is_none() {
            return Some(line_of_offset(text, value.span().start));
        }
        table = value.get_ref().as_table()?;
    }
    None
}

/// Best-effort JSON counterpart: first line quoting the last key segment.
fn json_key_line(text: &str, key: &str) -> Option<usize> {
    let leaf = format!("\"{}\"", key.rsplit('.').next()?);
    text.lines().position(|l| l.contains(&leaf)).map(|i| i + 1)
}
