//! Eve-position grid scans and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ScanConfig, ScanMode, SweepParam};
use crate::error::{Error, Result};
use crate::pipeline::ResolvedLink;

/// Grid scan over Eve's position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub grid: ScanConfig,
    pub mode: ScanMode,
    /// Worker threads; `None` uses the global rayon pool. Has no effect on
    /// the result.
    pub threads: Option<usize>,
}

impl ScanSpec {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            grid: cfg.scan,
            mode: cfg.scan.mode,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    /// Resolved configuration, every default spelled out.
    pub config: Config,
    /// Message of the error behind NaN cells, when there are any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nan_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub mode: ScanMode,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `values[j * xs.len() + i]` is the cell at `(xs[i], ys[j])`.
    /// Secrecy capacity in bit/s or outage probability; NaN where the model
    /// does not apply.
    pub values: Vec<f64>,
    /// Largest secrecy capacity (deterministic mode).
    pub msc_bps: Option<f64>,
    /// Smallest outage probability (probabilistic mode).
    pub mop: Option<f64>,
    pub insecure_cells: usize,
    pub nan_cells: usize,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx()..(j + 1) * self.nx()]
    }

    pub fn is_insecure(&self, v: f64) -> bool {
        is_insecure(self.mode, v)
    }
}

/// Insecure cell predicate: zero secrecy capacity, or certain outage.
pub fn is_insecure(mode: ScanMode, v: f64) -> bool {
    match mode {
        ScanMode::Deterministic => v == 0.0,
        ScanMode::Probabilistic => v == 1.0,
    }
}

/// MSC / MOP and the insecure and NaN counts for a value grid.
pub fn summarize(mode: ScanMode, values: &[f64]) -> (Option<f64>, Option<f64>, usize, usize) {
    let finite = values.iter().copied().filter(|v| !v.is_nan());
    let (msc, mop) = match mode {
        ScanMode::Deterministic => (finite.reduce(f64::max), None),
        ScanMode::Probabilistic => (None, finite.reduce(f64::min)),
    };
    let insecure = values.iter().filter(|&&v| is_insecure(mode, v)).count();
    let nan = values.iter().filter(|v| v.is_nan()).count();
    (msc, mop, insecure, nan)
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))
}

/// Scans the grid for a config. A link outside the turbulence model's
/// validity yields an all-NaN grid instead of an error.
pub fn run_scan(cfg: &Config, spec: &ScanSpec) -> Result<ScanResult> {
    let xs = spec.grid.xs();
    let ys = spec.grid.ys();
    let nx = xs.len();
    let mut values = vec![f64::NAN; nx * ys.len()];
    let nan_reason = match ResolvedLink::from_config(cfg) {
        Ok(link) => {
            let fill = |values: &mut [f64]| -> Option<String> {
                values
                    .par_chunks_mut(nx)
                    .zip(ys.par_iter())
                    .map(|(row, &y)| {
                        let mut reason = None;
                        for (cell, &x) in row.iter_mut().zip(&xs) {
                            *cell = match link.cell_value(x, y, spec.mode) {
                                Ok(v) => v,
                                Err(e) => {
                                    reason.get_or_insert_with(|| e.to_string());
                                    f64::NAN
                                }
                            };
                        }
                        reason
                    })
                    // first failing row in grid order, whatever the schedule
                    .reduce(|| None, |a, b| a.or(b))
            };
            match spec.threads {
                Some(n) => build_pool(n)?.install(|| fill(&mut values)),
                None => fill(&mut values),
            }
        }
        Err(e) if e.is_regime() => Some(e.to_string()),
        Err(e) => return Err(e),
    };

    let (msc_bps, mop, insecure_cells, nan_cells) = summarize(spec.mode, &values);
    let mut snapshot = cfg.clone();
    snapshot.scan = spec.grid;
    snapshot.scan.mode = spec.mode;
    Ok(ScanResult {
        mode: spec.mode,
        xs,
        ys,
        values,
        msc_bps,
        mop,
        insecure_cells,
        nan_cells,
        metadata: ScanMetadata {
            config: snapshot,
            nan_reason,
        },
    })
}

/// Scan of one configured parameter family, one result per value.
pub fn run_sweep(
    cfg: &Config,
    param: SweepParam,
    values: &[f64],
    spec: &ScanSpec,
) -> Result<Vec<(f64, ScanResult)>> {
    values
        .iter()
        .map(|&v| Ok((v, run_scan(&cfg.with_param(param, v), spec)?)))
        .collect()
}

/// Maximal run of insecure cells within a grid row, inclusive indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub end: usize,
}

impl Run {
    pub fn cell_count(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRuns {
    pub row: usize,
    pub y_m: f64,
    pub runs: Vec<Run>,
    /// `(x_start, x_end)` for each run, m.
    pub intervals_m: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsecureRegion {
    /// Rows with at least one insecure cell.
    pub rows: Vec<RowRuns>,
    /// `(i, j)` column and row indices in row-major order.
    pub cells: Vec<(usize, usize)>,
    /// Cell count times cell area, m^2.
    pub area_m2: f64,
}

impl InsecureRegion {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Maximal runs of cells matching `pred` in one row.
pub fn runs_in_row(row: &[f64], pred: impl Fn(f64) -> bool) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in row.iter().enumerate() {
        match (pred(v), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(Run {
                    start: s,
                    end: i - 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(Run {
            start: s,
            end: row.len() - 1,
        });
    }
    runs
}

pub fn extract_insecure_region(result: &ScanResult) -> InsecureRegion {
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (j, &y) in result.ys.iter().enumerate() {
        let runs = runs_in_row(result.row(j), |v| result.is_insecure(v));
        if runs.is_empty() {
            continue;
        }
        for r in &runs {
            cells.extend((r.start..=r.end).map(|i| (i, j)));
        }
        rows.push(RowRuns {
            row: j,
            y_m: y,
            intervals_m: runs
                .iter()
                .map(|r| (result.xs[r.start], result.xs[r.end]))
                .collect(),
            runs,
        });
    }
    let step = result.metadata.config.scan.step_m;
    InsecureRegion {
        area_m2: cells.len() as f64 * step * step,
        rows,
        cells,
    }
}
