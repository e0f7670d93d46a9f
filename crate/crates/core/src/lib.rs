pub mod atmosphere;
pub mod channel;
pub mod config;
pub mod emit;
pub mod error;
pub mod numerics;
pub mod outage;
pub mod pipeline;
pub mod scan;
pub mod secrecy;

pub use config::{Config, ConfigError, ScanMode};
pub use error::{Error, Result};
pub use pipeline::{PointReport, ResolvedLink};
pub use scan::{extract_insecure_region, run_scan, run_sweep, ScanResult, ScanSpec};
