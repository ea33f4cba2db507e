//! CSV tables and the JSON-lines report.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FORMAT_VERSION};
use crate::pipelines::{Outcome, RunError, Table};

pub fn write_table(dir: &Path, table: &Table) -> Result<(), RunError> {
    let path = dir.join(format!("{}.csv", table.name));
    let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Config echo with the effective seed, so that rerunning it reproduces the tables.
pub fn config_echo(cfg: &ExperimentConfig) -> Value {
    let mut raw = cfg.raw.clone();
    raw.seed = Some(cfg.seed);
    raw.output = Some(cfg.output.display().to_string());
    strip_nulls(serde_json::to_value(raw).expect("config serializes"))
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .collect(),
        ),
        other => other,
    }
}

pub fn report_line(
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    workers: usize,
    wall_seconds: f64,
) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "kind": cfg.kind,
        "config": config_echo(cfg),
        "seed": cfg.seed,
        "workers": workers,
        "check_failed": outcome.check_failed,
        "results": outcome.report,
        "timing": { "wall_seconds": wall_seconds, "sampling_seconds": outcome.sampling_seconds },
    })
}

/// The config echo as TOML, runnable with `tilt run --config`.
pub fn config_toml(cfg: &ExperimentConfig) -> String {
    let mut raw = cfg.raw.clone();
    raw.seed = Some(cfg.seed);
    raw.output = Some(cfg.output.display().to_string());
    toml::to_string(&raw).expect("config serializes")
}

/// Writes every table plus `report.jsonl` into `dir`.
pub fn write_all(dir: &Path, outcome: &Outcome, report: &Value) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    for t in &outcome.tables {
        write_table(dir, t)?;
    }
    let path = dir.join("report.jsonl");
    let mut f =
        fs::File::create(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    writeln!(f, "{report}").map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}
