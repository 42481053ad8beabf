use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;

use super::{report_svg, verify_predictions, ExperimentReport, RowStatus};
use crate::error::{Error, Result};
use crate::io::{read_bytes, write_text};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// One header line and one line per row: `index, seed, status`, then the
/// union of `params.*`, `measured.*`, `predicted.*` columns, then `agree`
/// and `error`.
pub fn report_csv(r: &ExperimentReport) -> Result<String> {
    let keys = |pick: fn(&super::ReportRow) -> &super::Fields| -> Vec<String> {
        r.rows
            .iter()
            .flat_map(|row| pick(row).keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let params = keys(|row| &row.params);
    let measured = keys(|row| &row.measured);
    let predicted = keys(|row| &row.predicted);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string(), "seed".into(), "status".into()];
    header.extend(params.iter().map(|k| format!("params.{k}")));
    header.extend(measured.iter().map(|k| format!("measured.{k}")));
    header.extend(predicted.iter().map(|k| format!("predicted.{k}")));
    header.extend(["agree".to_string(), "error".into()]);
    let fail = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(&header).map_err(fail)?;
    for row in &r.rows {
        let status = match row.status {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
            RowStatus::Skipped => "skipped",
        };
        let mut rec = vec![row.index.to_string(), row.seed.to_string(), status.to_string()];
        rec.extend(params.iter().map(|k| cell(row.params.get(k))));
        rec.extend(measured.iter().map(|k| cell(row.measured.get(k))));
        rec.extend(predicted.iter().map(|k| cell(row.predicted.get(k))));
        rec.push(row.agree.map(|a| a.to_string()).unwrap_or_default());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn report_json(r: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Writes the report in the format implied by the file extension, after
/// checking that its predictions still follow from its config.
pub fn emit_report(r: &ExperimentReport, path: &Path) -> Result<()> {
    verify_predictions(r)?;
    let text = match Format::from_path(path) {
        Some(Format::Csv) => report_csv(r)?,
        Some(Format::Json) => report_json(r),
        Some(Format::Svg) => report_svg(r),
        None => return Err(Error::pre(format!("{}: extension must be csv, json or svg", path.display()))),
    };
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::super::{run_sweep, ExperimentConfig};
    use super::*;
    use crate::grid::Budget;

    fn condition_report() -> ExperimentReport {
        let cfg = ExperimentConfig::from_json(
            r#"{"seed": 2, "experiment": {"kind": "condition", "s_e": [1.5], "s_f": [1.5], "gamma_f": [0.2], "l_f": [0.75], "alpha": [0, 0.5, 1], "d": [2]}}"#,
        )
        .unwrap();
        run_sweep(&cfg, Budget::default()).unwrap()
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let r = condition_report();
        let text = report_csv(&r).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("index,seed,status,params.alpha"));
        assert!(lines[0].ends_with("agree,error"));
        assert!(lines[1..].iter().all(|l| l.contains(",ok,")));
    }

    #[test]
    fn json_round_trip_and_stale_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let r = condition_report();
        emit_report(&r, &p).unwrap();
        let back = read_report(&p).unwrap();
        assert_eq!(back, r);

        let mut stale = r.clone();
        stale.rows[0].predicted.insert("best_alpha".into(), Value::from("1/3"));
        assert!(emit_report(&stale, &dir.path().join("s.json")).is_err());
        assert!(emit_report(&r, &dir.path().join("r.txt")).is_err());
    }
}
