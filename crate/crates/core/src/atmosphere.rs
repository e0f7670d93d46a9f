//! Atmospheric extinction for a horizontal THz path.
//!
//! Two loss mechanisms are combined in natural-log units (Np/m, power):
//! gaseous extinction taken from a pluggable [`AbsorptionBackend`], and the
//! mean turbulence attenuation `A_t = |10 log10(1 - sqrt(s2))|` dB, where
//! `s2` is the weak-fluctuation Rytov variance of the selected wave model.
//! The turbulence formula is only used while that variance stays below 1.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Supported carrier band for gaseous absorption lookups.
pub const MIN_FREQ_HZ: f64 = 100e9;
pub const MAX_FREQ_HZ: f64 = 1e12;

const PLANE_COEFF: f64 = 1.23;
const SPHERICAL_COEFF: f64 = 0.5;

/// Weak/moderate and moderate/strong boundaries for `C_n^2`, m^(-2/3).
pub const WEAK_CN2_LIMIT: f64 = 1e-17;
pub const STRONG_CN2_LIMIT: f64 = 1e-13;

static BUNDLED_TABLE: &str = include_str!("../data/absorption_default.csv");

pub fn db_per_km_to_np_per_m(db_per_km: f64) -> f64 {
    db_per_km * std::f64::consts::LN_10 / 10.0 / 1000.0
}

pub fn np_per_m_to_db_per_km(np_per_m: f64) -> f64 {
    np_per_m * 1000.0 * 10.0 / std::f64::consts::LN_10
}

pub fn db_to_np(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 10.0
}

pub fn np_to_db(np: f64) -> f64 {
    np * 10.0 / std::f64::consts::LN_10
}

/// Optical wave number `2 pi f / c`, rad/m.
pub fn wave_number(freq_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveModel {
    Plane,
    #[default]
    Spherical,
}

impl fmt::Display for WaveModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveModel::Plane => f.write_str("plane-wave"),
            WaveModel::Spherical => f.write_str("spherical-wave"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TurbulenceStrength {
    Weak,
    Moderate,
    Strong,
}

/// Turbulence class of `cn2`. Values exactly on a boundary count as moderate.
pub fn classify(cn2: f64) -> TurbulenceStrength {
    if cn2 < WEAK_CN2_LIMIT {
        TurbulenceStrength::Weak
    } else if cn2 > STRONG_CN2_LIMIT {
        TurbulenceStrength::Strong
    } else {
        TurbulenceStrength::Moderate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereConditions {
    pub temperature_c: f64,
    pub pressure_hpa: f64,
    pub relative_humidity_pct: f64,
    /// Refractive-index structure parameter, m^(-2/3).
    pub cn2: f64,
}

impl AtmosphereConditions {
    pub fn new(
        temperature_c: f64,
        pressure_hpa: f64,
        relative_humidity_pct: f64,
        cn2: f64,
    ) -> Result<Self> {
        let c = Self {
            temperature_c,
            pressure_hpa,
            relative_humidity_pct,
            cn2,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cn2 >= 0.0 && self.cn2.is_finite()) {
            return Err(Error::domain("cn2", self.cn2, ">= 0"));
        }
        if !(0.0..=100.0).contains(&self.relative_humidity_pct) {
            return Err(Error::domain(
                "relative_humidity_pct",
                self.relative_humidity_pct,
                "in [0, 100]",
            ));
        }
        if !(self.pressure_hpa > 0.0 && self.pressure_hpa.is_finite()) {
            return Err(Error::domain("pressure_hpa", self.pressure_hpa, "> 0"));
        }
        if !self.temperature_c.is_finite() || self.temperature_c < -273.15 {
            return Err(Error::domain(
                "temperature_c",
                self.temperature_c,
                ">= -273.15",
            ));
        }
        Ok(())
    }

    pub fn strength(&self) -> TurbulenceStrength {
        classify(self.cn2)
    }
}

impl Default for AtmosphereConditions {
    fn default() -> Self {
        Self {
            temperature_c: 30.0,
            pressure_hpa: 1013.0,
            relative_humidity_pct: 80.0,
            cn2: 5.8e-11,
        }
    }
}

/// Specific gaseous attenuation sampled on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionTable {
    /// `(freq_hz, alpha_db_per_km)` pairs.
    points: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct TableRow {
    freq_hz: f64,
    alpha_db_per_km: f64,
}

impl AbsorptionTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::AbsorptionTable(format!(
                "need at least 2 rows, got {}",
                points.len()
            )));
        }
        for (i, &(f, a)) in points.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::AbsorptionTable(format!(
                    "row {}: frequency {f} must be finite and > 0",
                    i + 1
                )));
            }
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::AbsorptionTable(format!(
                    "row {}: attenuation {a} dB/km must be finite and >= 0",
                    i + 1
                )));
            }
        }
        if let Some(w) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::AbsorptionTable(format!(
                "frequencies must be strictly increasing (row {})",
                w + 2
            )));
        }
        Ok(Self { points })
    }

    /// Parses CSV with header `freq_hz,alpha_db_per_km`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::AbsorptionTable(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["freq_hz", "alpha_db_per_km"] {
            return Err(Error::AbsorptionTable(format!(
                "expected header `freq_hz,alpha_db_per_km`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for row in rdr.deserialize::<TableRow>() {
            let row = row.map_err(|e| Error::AbsorptionTable(e.to_string()))?;
            points.push((row.freq_hz, row.alpha_db_per_km));
        }
        Self::new(points)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file).map_err(|e| match e {
            Error::AbsorptionTable(msg) => {
                Error::AbsorptionTable(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    /// Calibration table shipped with the crate.
    ///
    /// These are rough magnitudes for a warm, humid sea-level atmosphere
    /// (30 C, 1013 hPa, 80 % RH), not a line-by-line absorption model. The
    /// 340 GHz entry is tuned so the default scenario's LOS/NLOS crossover
    /// sits near `C_n^2 = 5.8e-11`.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_TABLE.as_bytes()).expect("bundled absorption table is valid")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn range_hz(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Attenuation in dB/km, interpolating `ln(alpha)` linearly in frequency.
    /// Falls back to plain linear interpolation when a bracketing value is 0.
    pub fn db_per_km(&self, freq_hz: f64) -> Result<f64> {
        let (min_hz, max_hz) = self.range_hz();
        if !(freq_hz >= min_hz && freq_hz <= max_hz) {
            return Err(Error::FrequencyOutOfRange {
                freq_hz,
                min_hz,
                max_hz,
            });
        }
        let hi = self.points.partition_point(|&(f, _)| f < freq_hz).max(1);
        let (f0, a0) = self.points[hi - 1];
        let (f1, a1) = self.points[hi];
        if freq_hz == f1 {
            return Ok(a1);
        }
        if freq_hz == f0 {
            return Ok(a0);
        }
        let t = (freq_hz - f0) / (f1 - f0);
        if a0 > 0.0 && a1 > 0.0 {
            Ok((a0.ln() + t * (a1.ln() - a0.ln())).exp())
        } else {
            Ok(a0 + t * (a1 - a0))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbsorptionBackend {
    Constant { db_per_km: f64 },
    Table(AbsorptionTable),
}

impl Default for AbsorptionBackend {
    fn default() -> Self {
        AbsorptionBackend::Table(AbsorptionTable::bundled())
    }
}

impl AbsorptionBackend {
    pub fn db_per_km(&self, freq_hz: f64) -> Result<f64> {
        match self {
            AbsorptionBackend::Constant { db_per_km } => Ok(*db_per_km),
            AbsorptionBackend::Table(t) => t.db_per_km(freq_hz),
        }
    }
}

fn check_band(freq_hz: f64) -> Result<()> {
    if (MIN_FREQ_HZ..=MAX_FREQ_HZ).contains(&freq_hz) {
        Ok(())
    } else {
        Err(Error::domain("freq_hz", freq_hz, "in [100 GHz, 1 THz]"))
    }
}

/// Gaseous extinction coefficient `alpha_g` in Np/m.
///
/// Particle scattering loss is not modelled separately; it is whatever the
/// backend's dB/km values already contain. The bundled backends are built
/// for a fixed atmosphere, so `_conditions` only documents which one applies.
pub fn gaseous_extinction(
    freq_hz: f64,
    _conditions: &AtmosphereConditions,
    backend: &AbsorptionBackend,
) -> Result<f64> {
    check_band(freq_hz)?;
    let db = backend.db_per_km(freq_hz)?;
    if !(db >= 0.0 && db.is_finite()) {
        return Err(Error::domain("alpha_db_per_km", db, ">= 0"));
    }
    Ok(db_per_km_to_np_per_m(db))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RytovVariances {
    /// `1.23 C_n^2 k^(7/6) L^(11/6)`.
    pub plane: f64,
    /// `0.5 C_n^2 k^(7/6) L^(11/6)`.
    pub spherical: f64,
    /// Both variances below 1.
    pub weak_valid: bool,
}

impl RytovVariances {
    pub fn for_wave(&self, wave: WaveModel) -> f64 {
        match wave {
            WaveModel::Plane => self.plane,
            WaveModel::Spherical => self.spherical,
        }
    }
}

fn rytov_base(freq_hz: f64, cn2: f64, path_m: f64) -> f64 {
    cn2 * wave_number(freq_hz).powf(7.0 / 6.0) * path_m.powf(11.0 / 6.0)
}

pub fn rytov_variances(freq_hz: f64, cn2: f64, path_m: f64) -> RytovVariances {
    let base = rytov_base(freq_hz, cn2, path_m);
    let plane = PLANE_COEFF * base;
    let spherical = SPHERICAL_COEFF * base;
    RytovVariances {
        plane,
        spherical,
        weak_valid: plane.max(spherical) < 1.0,
    }
}

/// Spherical-wave Rytov variance alone; the log-amplitude variance used by
/// the log-normal fading model.
pub fn spherical_rytov_variance(freq_hz: f64, cn2: f64, path_m: f64) -> f64 {
    rytov_variances(freq_hz, cn2, path_m).spherical
}

/// `|10 log10(1 - sqrt(s2))|` for a scintillation index `s2` in `[0, 1)`.
pub fn attenuation_db_from_scintillation(s2: f64) -> f64 {
    (10.0 * (1.0 - s2.sqrt()).log10()).abs()
}

/// Mean turbulence attenuation over the whole path, dB.
pub fn turbulence_attenuation_db(
    freq_hz: f64,
    cn2: f64,
    path_m: f64,
    wave: WaveModel,
) -> Result<f64> {
    if !(freq_hz > 0.0) {
        return Err(Error::domain("freq_hz", freq_hz, "> 0"));
    }
    if !(path_m > 0.0) {
        return Err(Error::domain("path_m", path_m, "> 0"));
    }
    if !(cn2 >= 0.0) {
        return Err(Error::domain("cn2", cn2, ">= 0"));
    }
    let variance = rytov_variances(freq_hz, cn2, path_m).for_wave(wave);
    if variance >= 1.0 {
        return Err(Error::Regime { wave, variance });
    }
    Ok(attenuation_db_from_scintillation(variance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionBreakdown {
    /// Gaseous extinction, Np/m.
    pub alpha_g: f64,
    /// Turbulence extinction, Np/m.
    pub alpha_t: f64,
    /// `alpha_g + alpha_t`, Np/m.
    pub alpha_att: f64,
    /// Turbulence attenuation over the full path, dB.
    pub a_t_db: f64,
    pub sigma_r2_plane: f64,
    pub beta_r2_sph: f64,
}

impl ExtinctionBreakdown {
    /// Lossless atmosphere.
    pub fn vacuum() -> Self {
        Self {
            alpha_g: 0.0,
            alpha_t: 0.0,
            alpha_att: 0.0,
            a_t_db: 0.0,
            sigma_r2_plane: 0.0,
            beta_r2_sph: 0.0,
        }
    }

    /// Breakdown with fixed coefficients and no turbulence diagnostics.
    pub fn from_coefficients(alpha_g: f64, alpha_t: f64) -> Self {
        Self {
            alpha_g,
            alpha_t,
            alpha_att: alpha_g + alpha_t,
            a_t_db: 0.0,
            sigma_r2_plane: 0.0,
            beta_r2_sph: 0.0,
        }
    }

    /// Atmospheric power transmittance `exp(-alpha_att d)`.
    pub fn transmittance(&self, distance_m: f64) -> f64 {
        (-self.alpha_att * distance_m).exp()
    }
}

pub fn extinction(
    freq_hz: f64,
    conditions: &AtmosphereConditions,
    path_m: f64,
    backend: &AbsorptionBackend,
    wave: WaveModel,
) -> Result<ExtinctionBreakdown> {
    conditions.validate()?;
    let alpha_g = gaseous_extinction(freq_hz, conditions, backend)?;
    let a_t_db = turbulence_attenuation_db(freq_hz, conditions.cn2, path_m, wave)?;
    let alpha_t = db_to_np(a_t_db) / path_m;
    let rv = rytov_variances(freq_hz, conditions.cn2, path_m);
    Ok(ExtinctionBreakdown {
        alpha_g,
        alpha_t,
        alpha_att: alpha_g + alpha_t,
        a_t_db,
        sigma_r2_plane: rv.plane,
        beta_r2_sph: rv.spherical,
    })
}
