use std::path::PathBuf;

use crate::atmosphere::WaveModel;
use crate::config::ConfigError;
use crate::numerics::BisectError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The weak-fluctuation attenuation formula only holds for Rytov variance < 1.
    #[error(
        "{wave} Rytov variance {variance:.6} >= 1, turbulence attenuation model does not apply"
    )]
    Regime { wave: WaveModel, variance: f64 },

    #[error("frequency {freq_hz:e} Hz is outside the absorption table range [{min_hz:e}, {max_hz:e}] Hz")]
    FrequencyOutOfRange {
        freq_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    #[error("absorption table: {0}")]
    AbsorptionTable(String),

    #[error("Eve's field of view does not intersect the link axis")]
    EmptySegment,

    #[error("threshold gain search failed: {0}")]
    Consistency(#[from] BisectError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("cannot start worker threads: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the turbulence-regime validity gate.
    pub fn is_regime(&self) -> bool {
        matches!(self, Error::Regime { .. })
    }
}
