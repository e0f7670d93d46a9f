use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;
use thzsec::emit::{self, Format};
use thzsec::scan::{extract_insecure_region, run_scan, ScanResult, ScanSpec};
use thzsec::{Config, ResolvedLink, ScanMode};

fn grid(cfg: &mut Config, x: (f64, f64), y: (f64, f64), step: f64) {
    cfg.scan.x_min_m = x.0;
    cfg.scan.x_max_m = x.1;
    cfg.scan.y_min_m = y.0;
    cfg.scan.y_max_m = y.1;
    cfg.scan.step_m = step;
}

fn scan(cfg: &Config) -> ScanResult {
    run_scan(cfg, &ScanSpec::from_config(cfg)).unwrap()
}

fn csv_bytes(r: &ScanResult) -> Vec<u8> {
    let mut buf = Vec::new();
    emit::write_csv(r, &mut buf).unwrap();
    buf
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[test]
fn single_cell_is_the_point_pipeline() {
    for mode in [ScanMode::Deterministic, ScanMode::Probabilistic] {
        for (x, y) in [(750.0, 30.0), (120.0, 8.0), (990.0, 64.0)] {
            let mut cfg = Config::default();
            cfg.scan.mode = mode;
            grid(&mut cfg, (x, x), (y, y), 2.0);
            let r = scan(&cfg);
            assert_eq!((r.nx(), r.ny()), (1, 1));
            let direct = ResolvedLink::from_config(&cfg)
                .unwrap()
                .cell_value(x, y, mode)
                .unwrap();
            assert_eq!(
                r.values[0].to_bits(),
                direct.to_bits(),
                "{mode} at ({x}, {y})"
            );
        }
    }
}

#[test]
fn rows_mirror_about_the_axis() {
    let mut cfg = Config::default();
    grid(&mut cfg, (0.0, 1000.0), (-50.0, 50.0), 5.0);
    let r = scan(&cfg);
    let ny = r.ny();
    assert_eq!(ny, 21);
    // the y = 0 row is Eve on the beam axis
    assert!(r.row(10).iter().all(|v| v.is_nan()));
    assert_eq!(r.nan_cells, r.nx());
    assert!(r.metadata.nan_reason.is_some());
    for j in 0..ny / 2 {
        assert_eq!(r.ys[j], -r.ys[ny - 1 - j]);
        for i in 0..r.nx() {
            let (a, b) = (r.value(i, j), r.value(i, ny - 1 - j));
            let ok = a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
            assert!(ok, "cell ({}, {}): {a} vs {b}", r.xs[i], r.ys[j]);
        }
    }
}

#[test]
fn csv_is_identical_for_any_worker_count() {
    for mode in [ScanMode::Deterministic, ScanMode::Probabilistic] {
        let mut cfg = Config::default();
        cfg.scan.mode = mode;
        grid(&mut cfg, (0.0, 1000.0), (2.0, 100.0), 20.0);
        let bytes: Vec<Vec<u8>> = [1, 4, 8]
            .iter()
            .map(|&t| {
                let spec = ScanSpec {
                    threads: Some(t),
                    ..ScanSpec::from_config(&cfg)
                };
                csv_bytes(&run_scan(&cfg, &spec).unwrap())
            })
            .collect();
        assert_eq!(bytes[0], bytes[1]);
        assert_eq!(bytes[0], bytes[2]);
        // and without an explicit pool
        assert_eq!(bytes[0], csv_bytes(&scan(&cfg)));
    }
}

#[test]
fn sub_grid_is_a_restriction() {
    let mut full_cfg = Config::default();
    grid(&mut full_cfg, (0.0, 1000.0), (10.0, 60.0), 10.0);
    let full = scan(&full_cfg);

    let mut sub_cfg = Config::default();
    grid(&mut sub_cfg, (200.0, 800.0), (20.0, 40.0), 10.0);
    let sub = scan(&sub_cfg);

    let (i0, j0) = (20, 1);
    for j in 0..sub.ny() {
        for i in 0..sub.nx() {
            assert_eq!(sub.xs[i], full.xs[i + i0]);
            assert_eq!(sub.ys[j], full.ys[j + j0]);
            assert_eq!(
                sub.value(i, j).to_bits(),
                full.value(i + i0, j + j0).to_bits()
            );
        }
    }
    assert!(sub.msc_bps.unwrap() <= full.msc_bps.unwrap());

    let restricted: BTreeSet<(usize, usize)> = extract_insecure_region(&full)
        .cells
        .into_iter()
        .filter(|&(i, j)| (i0..i0 + sub.nx()).contains(&i) && (j0..j0 + sub.ny()).contains(&j))
        .map(|(i, j)| (i - i0, j - j0))
        .collect();
    let sub_cells: BTreeSet<(usize, usize)> =
        extract_insecure_region(&sub).cells.into_iter().collect();
    assert!(!sub_cells.is_empty());
    assert_eq!(sub_cells, restricted);
}

#[test]
fn saturated_cells_ignore_eve_noise() {
    // Eve's information falls off roughly as G_NLOS squared, so the capacity
    // only flattens out well away from the beam
    let base = {
        let mut cfg = Config::default();
        grid(&mut cfg, (-1000.0, 2000.0), (500.0, 4500.0), 500.0);
        cfg
    };
    let with_eve_snr = |snr: f64| {
        let mut cfg = base.clone();
        cfg.eve.snr_db = Some(snr);
        cfg
    };
    // the least noisy Eve learns the most, so saturation there bounds the rest
    let quietest = with_eve_snr(6.0);
    let link = ResolvedLink::from_config(&quietest).unwrap();
    let reference = scan(&quietest);
    let others: Vec<ScanResult> = [3.0, 0.0, -6.0, -20.0]
        .iter()
        .map(|&s| scan(&with_eve_snr(s)))
        .collect();

    let mut plateau = 0;
    for j in 0..reference.ny() {
        for i in 0..reference.nx() {
            let (x, y) = (reference.xs[i], reference.ys[j]);
            let s = link.point(x, y).unwrap().secrecy;
            if s.i_eve > 1e-10 * s.i_bob {
                continue;
            }
            plateau += 1;
            let va = reference.value(i, j);
            for other in &others {
                let vb = other.value(i, j);
                assert!((va / vb - 1.0).abs() <= 1e-9, "({x}, {y}): {va} vs {vb}");
            }
        }
    }
    assert!(
        plateau >= 10,
        "only {plateau} saturated cells on the test grid"
    );
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for mode in [ScanMode::Deterministic, ScanMode::Probabilistic] {
        let mut cfg = Config::default();
        cfg.scan.mode = mode;
        grid(&mut cfg, (0.0, 1000.0), (-4.0, 20.0), 25.0);
        let r = scan(&cfg);
        for format in [Format::Csv, Format::Json] {
            let path = dir.path().join(format!("{mode}.{}", format.extension()));
            emit::emit(&r, format, &path).unwrap();
            let back = emit::read_path(&path).unwrap();
            assert!(same_bits(&back.values, &r.values));
            assert_eq!(back.xs, r.xs);
            assert_eq!(back.ys, r.ys);
            assert_eq!(back.mode, r.mode);
            assert_eq!(back.nan_cells, r.nan_cells);
            assert_eq!(back.metadata.config, r.metadata.config);
        }
    }
}

#[test]
fn emit_reports_the_path_on_failure() {
    let r = {
        let mut cfg = Config::default();
        grid(&mut cfg, (750.0, 750.0), (30.0, 30.0), 2.0);
        scan(&cfg)
    };
    let path = Path::new("/nonexistent-dir/out.csv");
    let err = emit::emit(&r, Format::Csv, path).unwrap_err();
    assert!(
        err.to_string().contains("/nonexistent-dir/out.csv"),
        "{err}"
    );
}

/// Pulls `key=value` out of the CSV summary comment.
fn summary_field(text: &str, key: &str) -> String {
    let line = text.lines().find(|l| l.starts_with("# summary:")).unwrap();
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap()
        .to_string()
}

#[test]
fn summary_matches_the_emitted_grid() {
    for mode in [ScanMode::Deterministic, ScanMode::Probabilistic] {
        let mut cfg = Config::default();
        cfg.scan.mode = mode;
        grid(&mut cfg, (0.0, 1000.0), (-10.0, 100.0), 10.0);
        let text = String::from_utf8(csv_bytes(&scan(&cfg))).unwrap();

        let values: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("x_m"))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        let finite: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let nan = values.len() - finite.len();
        let insecure = match mode {
            ScanMode::Deterministic => finite.iter().filter(|&&v| v == 0.0).count(),
            ScanMode::Probabilistic => finite.iter().filter(|&&v| v == 1.0).count(),
        };

        assert_eq!(summary_field(&text, "nan_cells"), nan.to_string());
        assert_eq!(summary_field(&text, "insecure_cells"), insecure.to_string());
        match mode {
            ScanMode::Deterministic => {
                assert_eq!(summary_field(&text, "msc_bps").parse::<f64>().unwrap(), max);
                assert_eq!(summary_field(&text, "mop"), "none");
            }
            ScanMode::Probabilistic => {
                assert_eq!(summary_field(&text, "mop").parse::<f64>().unwrap(), min);
                assert_eq!(summary_field(&text, "msc_bps"), "none");
            }
        }
    }
}

#[test]
fn region_edge_cases() {
    // far from the beam every cell keeps a positive capacity
    let mut cfg = Config::default();
    grid(&mut cfg, (100.0, 900.0), (100.0, 100.0), 100.0);
    let secure = scan(&cfg);
    assert_eq!(secure.insecure_cells, 0);
    assert!(extract_insecure_region(&secure).is_empty());

    let mut cfg = Config::default();
    grid(&mut cfg, (500.0, 500.0), (30.0, 30.0), 2.0);
    let one = scan(&cfg);
    let region = extract_insecure_region(&one);
    assert_eq!(region.cells, vec![(0, 0)]);
    assert_eq!(region.rows.len(), 1);
    assert_eq!(region.rows[0].runs.len(), 1);
    assert_eq!(region.rows[0].runs[0].cell_count(), 1);
}

#[test]
fn regime_failure_marks_every_cell() {
    let mut cfg = Config {
        cn2: 1e-8,
        ..Config::default()
    };
    grid(&mut cfg, (0.0, 1000.0), (10.0, 30.0), 100.0);
    let r = scan(&cfg);
    assert_eq!(r.nan_cells, r.values.len());
    assert!(r.values.iter().all(|v| v.is_nan()));
    assert_eq!(r.msc_bps, None);
    let reason = r.metadata.nan_reason.as_deref().unwrap();
    assert!(reason.contains("variance"), "{reason}");
    // the count and reason survive emission
    let text = String::from_utf8(csv_bytes(&r)).unwrap();
    assert_eq!(
        summary_field(&text, "nan_cells"),
        r.values.len().to_string()
    );
    assert!(text.lines().any(|l| l.starts_with("# nan_reason:")));
}

/// Checks `doc` against the keyword subset used by the shipped schema.
fn check_schema(schema: &Value, doc: &Value, at: &str) -> Vec<String> {
    let mut errs = Vec::new();
    let s = schema.as_object().unwrap();
    if let Some(t) = s.get("type") {
        let allowed: Vec<&str> = match t {
            Value::String(one) => vec![one.as_str()],
            Value::Array(many) => many.iter().map(|v| v.as_str().unwrap()).collect(),
            _ => panic!("bad type keyword at {at}"),
        };
        let fits = |name: &str| match name {
            "object" => doc.is_object(),
            "array" => doc.is_array(),
            "string" => doc.is_string(),
            "number" => doc.is_number(),
            "integer" => doc.is_u64() || doc.is_i64(),
            "null" => doc.is_null(),
            "boolean" => doc.is_boolean(),
            other => panic!("unknown type {other}"),
        };
        if !allowed.iter().any(|n| fits(n)) {
            errs.push(format!("{at}: expected {allowed:?}, got {doc}"));
            return errs;
        }
    }
    if let Some(c) = s.get("const") {
        if doc != c {
            errs.push(format!("{at}: expected {c}, got {doc}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(doc) {
            errs.push(format!("{at}: {doc} not in {options:?}"));
        }
    }
    if let (Some(min), Some(v)) = (s.get("minimum").and_then(Value::as_f64), doc.as_f64()) {
        if v < min {
            errs.push(format!("{at}: {v} below {min}"));
        }
    }
    if let Some(obj) = doc.as_object() {
        if let Some(Value::Array(req)) = s.get("required") {
            for k in req {
                if !obj.contains_key(k.as_str().unwrap()) {
                    errs.push(format!("{at}: missing {k}"));
                }
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => errs.extend(check_schema(sub, v, &format!("{at}.{k}"))),
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{at}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), doc.as_array()) {
        for (n, v) in arr.iter().enumerate() {
            errs.extend(check_schema(items, v, &format!("{at}[{n}]")));
        }
    }
    errs
}

fn load_schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/scan-result.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn json_output_matches_the_schema() {
    let schema = load_schema();
    for mode in [ScanMode::Deterministic, ScanMode::Probabilistic] {
        let mut cfg = Config::default();
        cfg.scan.mode = mode;
        cfg.sweep = Some(thzsec::config::SweepConfig {
            param: thzsec::config::SweepParam::Cn2,
            values: vec![1e-12, 1e-11],
        });
        grid(&mut cfg, (0.0, 1000.0), (-20.0, 20.0), 20.0);
        let r = scan(&cfg);
        assert!(r.nan_cells > 0);
        let mut buf = Vec::new();
        emit::write_json(&r, &mut buf).unwrap();
        let doc: Value = serde_json::from_slice(&buf).unwrap();
        let errs = check_schema(&schema, &doc, "$");
        assert!(errs.is_empty(), "{errs:#?}");
    }
}

#[test]
fn schema_checker_rejects_bad_documents() {
    let schema = load_schema();
    let mut cfg = Config::default();
    grid(&mut cfg, (750.0, 750.0), (30.0, 30.0), 2.0);
    let mut buf = Vec::new();
    emit::write_json(&scan(&cfg), &mut buf).unwrap();
    let good: Value = serde_json::from_slice(&buf).unwrap();

    let mut bad = good.clone();
    bad["mode"] = "fast".into();
    assert!(!check_schema(&schema, &bad, "$").is_empty());
    let mut bad = good.clone();
    bad["values"][0] = "x".into();
    assert!(!check_schema(&schema, &bad, "$").is_empty());
    let mut bad = good.clone();
    bad.as_object_mut().unwrap().remove("metadata");
    assert!(!check_schema(&schema, &bad, "$").is_empty());
    let mut bad = good;
    bad["extra"] = 1.into();
    assert!(!check_schema(&schema, &bad, "$").is_empty());
}
