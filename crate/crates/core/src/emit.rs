//! CSV and JSON output for scans, with readers for both.
//!
//! CSV layout:
//!
//! ```text
//! # config: freq_hz = 340000000000.0
//! # config: ...                       (resolved config as TOML, one line each)
//! # summary: mode=det msc_bps=... mop=none insecure_cells=... nan_cells=...
//! # nan_reason: ...                   (only when some cells are NaN)
//! x_m,y_m,value
//! 0.0,2.0,0.0
//! ```
//!
//! Rows are in grid order: y outer, x inner. Numbers use the shortest
//! representation that parses back to the same `f64`, and NaN is written
//! as `NaN`.
//!
//! JSON mirrors [`ScanResult`], with NaN cells as `null`. The structure is
//! described by `schema/scan-result.schema.json` in this crate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Config, ScanMode};
use crate::error::{Error, Result};
use crate::scan::{ScanMetadata, ScanResult};

pub const JSON_FORMAT_TAG: &str = "thzsec-scan";
pub const JSON_VERSION: u32 = 1;

const CONFIG_PREFIX: &str = "# config: ";
const SUMMARY_PREFIX: &str = "# summary: ";
const NAN_PREFIX: &str = "# nan_reason: ";
const HEADER: &str = "x_m,y_m,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "none".into())
}

pub fn summary_line(result: &ScanResult) -> String {
    format!(
        "mode={} msc_bps={} mop={} insecure_cells={} nan_cells={}",
        result.mode,
        opt_num(result.msc_bps),
        opt_num(result.mop),
        result.insecure_cells,
        result.nan_cells
    )
}

pub fn write_csv<W: Write>(result: &ScanResult, mut w: W) -> std::io::Result<()> {
    for line in result.metadata.config.to_toml_string().lines() {
        writeln!(w, "{CONFIG_PREFIX}{line}")?;
    }
    writeln!(w, "{SUMMARY_PREFIX}{}", summary_line(result))?;
    if let Some(reason) = &result.metadata.nan_reason {
        writeln!(w, "{NAN_PREFIX}{}", reason.replace('\n', " "))?;
    }
    writeln!(w, "{HEADER}")?;
    for (j, &y) in result.ys.iter().enumerate() {
        for (i, &x) in result.xs.iter().enumerate() {
            writeln!(w, "{},{},{}", num(x), num(y), num(result.value(i, j)))?;
        }
    }
    w.flush()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanJson {
    format: String,
    version: u32,
    mode: ScanMode,
    nx: usize,
    ny: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<Option<f64>>,
    msc_bps: Option<f64>,
    mop: Option<f64>,
    insecure_cells: usize,
    nan_cells: usize,
    metadata: ScanMetadata,
}

pub fn write_json<W: Write>(result: &ScanResult, mut w: W) -> std::io::Result<()> {
    let doc = ScanJson {
        format: JSON_FORMAT_TAG.into(),
        version: JSON_VERSION,
        mode: result.mode,
        nx: result.nx(),
        ny: result.ny(),
        xs: result.xs.clone(),
        ys: result.ys.clone(),
        values: result
            .values
            .iter()
            .map(|&v| (!v.is_nan()).then_some(v))
            .collect(),
        msc_bps: result.msc_bps,
        mop: result.mop,
        insecure_cells: result.insecure_cells,
        nan_cells: result.nan_cells,
        metadata: result.metadata.clone(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()
}

pub fn write<W: Write>(result: &ScanResult, format: Format, w: W) -> std::io::Result<()> {
    match format {
        Format::Csv => write_csv(result, w),
        Format::Json => write_json(result, w),
    }
}

/// Writes `result` to `path`; errors carry the path.
pub fn emit(result: &ScanResult, format: Format, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write(result, format, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s == "none" {
        Ok(None)
    } else {
        f64::from_str(s).map(Some)
    }
}

/// Reads a CSV scan; `path` is only used in error messages.
pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<ScanResult> {
    let mut reader = BufReader::new(reader);
    let mut config_text = String::new();
    let mut summary = None;
    let mut nan_reason = None;
    let mut line = String::new();
    loop {
        line.clear();
        if reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?
            == 0
        {
            return Err(format_err(path, "missing `x_m,y_m,value` header"));
        }
        let l = line.trim_end_matches(['\n', '\r']);
        if let Some(rest) = l.strip_prefix(CONFIG_PREFIX) {
            config_text.push_str(rest);
            config_text.push('\n');
        } else if l == CONFIG_PREFIX.trim_end() {
            config_text.push('\n');
        } else if let Some(rest) = l.strip_prefix(SUMMARY_PREFIX) {
            summary = Some(rest.to_string());
        } else if let Some(rest) = l.strip_prefix(NAN_PREFIX) {
            nan_reason = Some(rest.to_string());
        } else if l == HEADER {
            break;
        } else {
            return Err(format_err(
                path,
                format!("unexpected line before header: {l}"),
            ));
        }
    }
    let config =
        Config::from_toml_str(&config_text).map_err(|e| format_err(path, e.to_string()))?;
    let summary = summary.ok_or_else(|| format_err(path, "missing summary line"))?;

    let mut mode = None;
    let (mut msc, mut mop, mut insecure, mut nan) = (None, None, None, None);
    for field in summary.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("bad summary field `{field}`")))?;
        let bad = |_| format_err(path, format!("bad summary value `{field}`"));
        match k {
            "mode" => {
                mode = Some(match v {
                    "det" => ScanMode::Deterministic,
                    "prob" => ScanMode::Probabilistic,
                    _ => return Err(format_err(path, format!("unknown mode `{v}`"))),
                })
            }
            "msc_bps" => msc = parse_opt(v).map_err(bad)?,
            "mop" => mop = parse_opt(v).map_err(bad)?,
            "insecure_cells" => insecure = Some(v.parse().map_err(|_| format_err(path, field))?),
            "nan_cells" => nan = Some(v.parse().map_err(|_| format_err(path, field))?),
            _ => return Err(format_err(path, format!("unknown summary field `{k}`"))),
        }
    }

    let mut rows = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (n, rec) in rows.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| f64::from_str(s).ok())
                .ok_or_else(|| {
                    format_err(path, format!("data row {}: bad column {}", n + 1, k + 1))
                })
        };
        let (x, y, v) = (field(0)?, field(1)?, field(2)?);
        if ys.last().is_none_or(|&last| last.to_bits() != y.to_bits()) {
            ys.push(y);
        }
        if ys.len() == 1 {
            xs.push(x);
        } else if xs.get(values.len() % xs.len().max(1)).map(|v| v.to_bits()) != Some(x.to_bits()) {
            return Err(format_err(
                path,
                format!("data row {}: grid is not rectangular", n + 1),
            ));
        }
        values.push(v);
    }
    if values.len() != xs.len() * ys.len() {
        return Err(format_err(path, "grid is not rectangular"));
    }

    Ok(ScanResult {
        mode: mode.ok_or_else(|| format_err(path, "summary lacks mode"))?,
        xs,
        ys,
        values,
        msc_bps: msc,
        mop,
        insecure_cells: insecure.ok_or_else(|| format_err(path, "summary lacks insecure_cells"))?,
        nan_cells: nan.ok_or_else(|| format_err(path, "summary lacks nan_cells"))?,
        metadata: ScanMetadata { config, nan_reason },
    })
}

pub fn read_json<R: Read>(reader: R, path: &Path) -> Result<ScanResult> {
    let doc: ScanJson = serde_json::from_reader(BufReader::new(reader))
        .map_err(|e| format_err(path, e.to_string()))?;
    if doc.format != JSON_FORMAT_TAG || doc.version != JSON_VERSION {
        return Err(format_err(
            path,
            format!("unsupported format {} v{}", doc.format, doc.version),
        ));
    }
    if doc.xs.len() != doc.nx || doc.ys.len() != doc.ny || doc.values.len() != doc.nx * doc.ny {
        return Err(format_err(path, "grid dimensions do not match"));
    }
    Ok(ScanResult {
        mode: doc.mode,
        xs: doc.xs,
        ys: doc.ys,
        values: doc
            .values
            .into_iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect(),
        msc_bps: doc.msc_bps,
        mop: doc.mop,
        insecure_cells: doc.insecure_cells,
        nan_cells: doc.nan_cells,
        metadata: doc.metadata,
    })
}

/// Reads a scan file, choosing the format from the extension.
pub fn read_path(path: &Path) -> Result<ScanResult> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        read_json(file, path)
    } else {
        read_csv(file, path)
    }
}

/// `<stem>_<param>=<value>.<ext>` next to `base`.
pub fn sweep_path(base: &Path, param: &str, value: f64, format: Format) -> std::path::PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scan".into());
    base.with_file_name(format!(
        "{stem}_{param}={}.{}",
        num(value),
        format.extension()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScanResult {
        let mut cfg = Config::default();
        cfg.scan.x_min_m = 10.0;
        cfg.scan.x_max_m = 14.0;
        cfg.scan.y_min_m = 2.0;
        cfg.scan.y_max_m = 4.0;
        ScanResult {
            mode: ScanMode::Deterministic,
            xs: vec![10.0, 12.0, 14.0],
            ys: vec![2.0, 4.0],
            values: vec![0.0, 1.5e9, f64::NAN, 0.1 + 0.2, 1e-300, 4.4e10],
            msc_bps: Some(4.4e10),
            mop: None,
            insecure_cells: 1,
            nan_cells: 1,
            metadata: ScanMetadata {
                config: cfg,
                nan_reason: Some("regime".into()),
            },
        }
    }

    fn same(a: &ScanResult, b: &ScanResult) {
        let bits = |r: &ScanResult| r.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a), bits(b));
        assert_eq!(a.xs, b.xs);
        assert_eq!(a.ys, b.ys);
        assert_eq!(a.msc_bps, b.msc_bps);
        assert_eq!(a.mop, b.mop);
        assert_eq!(
            (a.insecure_cells, a.nan_cells),
            (b.insecure_cells, b.nan_cells)
        );
        assert_eq!(a.metadata, b.metadata);
        assert_eq!(a.mode, b.mode);
    }

    #[test]
    fn csv_roundtrip() {
        let r = sample();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), Path::new("mem.csv")).unwrap();
        same(&r, &back);
    }

    #[test]
    fn json_roundtrip() {
        let r = sample();
        let mut buf = Vec::new();
        write_json(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("null"));
        let back = read_json(buf.as_slice(), Path::new("mem.json")).unwrap();
        same(&r, &back);
    }

    #[test]
    fn sweep_names() {
        let p = sweep_path(Path::new("out/map.csv"), "cn2", 1e-11, Format::Csv);
        assert_eq!(p, Path::new("out/map_cn2=1e-11.csv"));
        let p = sweep_path(Path::new("map.json"), "freq_hz", 340e9, Format::Json);
        assert_eq!(p, Path::new("map_freq_hz=340000000000.0.json"));
    }
}
