//! Report and table output. Keys are sorted, so the JSON is byte-stable
//! apart from `elapsed_ms`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::run::{Outcome, Row};

pub const TIMING_FIELD: &str = "elapsed_ms";

pub fn build(cfg: &Config, outcome: &Outcome, elapsed_ms: u128) -> Result<Value, CliError> {
    let mut out: Map<String, Value> = outcome.results.clone();
    out.insert("experiment".into(), serde_json::to_value(cfg.experiment)?);
    out.insert("status".into(), serde_json::to_value(outcome.status)?);
    out.insert("config".into(), serde_json::to_value(cfg)?);
    out.insert(TIMING_FIELD.into(), json!(elapsed_ms as u64));
    out.insert(
        "versions".into(),
        json!({
            "sublinear": sublinear::VERSION,
            "sublinear-cli": env!("CARGO_PKG_VERSION"),
        }),
    );
    Ok(Value::Object(out))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_report(dir: &Path, name: &str, report: &Value) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// Writes `series,key,value`; infinities as `inf` / `-inf`. An empty row
/// set still gets the header.
pub fn write_values(dir: &Path, name: &str, rows: &[Row]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["series", "key", "value"])?;
    for r in rows {
        w.write_record([r.series.as_str(), r.key.as_str(), &r.value.to_string()])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}
