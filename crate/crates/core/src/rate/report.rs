//! CSV and JSON report tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::search::RateReport;
use crate::error::{Error, Result};

/// Column order of every rate table.
pub const REPORT_COLUMNS: [&str; 6] = ["tensor_id", "stage_set", "qp", "bits_per_value", "mse", "bytes"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub tensor_id: String,
    pub stage_set: String,
    pub qp: u8,
    pub bits_per_value: f64,
    pub mse: f64,
    pub bytes: usize,
}

impl ReportRow {
    pub fn from_report(tensor_id: impl Into<String>, r: &RateReport) -> Self {
        ReportRow {
            tensor_id: tensor_id.into(),
            stage_set: r.stage_set.clone(),
            qp: r.qp_chosen,
            bits_per_value: r.bits_per_value,
            mse: r.achieved_mse,
            bytes: r.wall_bytes,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

/// Writes `rows` as CSV. Each `meta` line is emitted first as a `# ` comment.
pub fn write_csv<W: Write>(mut w: W, rows: &[ReportRow], meta: &[String]) -> Result<()> {
    for line in meta {
        writeln!(w, "# {line}")?;
    }
    let mut cw = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    cw.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for r in rows {
        cw.serialize(r).map_err(csv_err)?;
    }
    cw.flush()?;
    Ok(())
}

/// Reads a table written by [`write_csv`], skipping comment lines.
pub fn read_csv(data: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(data.as_bytes());
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    meta: Vec<String>,
    rows: Vec<ReportRow>,
}

/// Writes `{"meta": [...], "rows": [...]}` with pretty formatting.
pub fn write_json<W: Write>(mut w: W, rows: &[ReportRow], meta: &[String]) -> Result<()> {
    let doc = JsonReport { meta: meta.to_vec(), rows: rows.to_vec() };
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::invalid(format!("json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json(data: &str) -> Result<Vec<ReportRow>> {
    let doc: JsonReport = serde_json::from_str(data).map_err(|e| Error::corrupt(format!("json: {e}")))?;
    Ok(doc.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ReportRow> {
        vec![
            ReportRow {
                tensor_id: "w0".into(),
                stage_set: "baseline".into(),
                qp: 0,
                bits_per_value: 8.0,
                mse: 0.0027,
                bytes: 262144,
            },
            ReportRow {
                tensor_id: "w0".into(),
                stage_set: "entropy+transform+prediction".into(),
                qp: 6,
                bits_per_value: 4.443,
                mse: 0.00956,
                bytes: 145573,
            },
        ]
    }

    #[test]
    fn csv_header_and_roundtrip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows(), &["vcodec ablate".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# vcodec ablate"));
        assert_eq!(lines.next(), Some("tensor_id,stage_set,qp,bits_per_value,mse,bytes"));
        assert_eq!(read_csv(&text).unwrap(), rows());
    }

    #[test]
    fn json_roundtrip() {
        let mut buf = Vec::new();
        write_json(&mut buf, &rows(), &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"bits_per_value\": 8.0"));
        assert_eq!(read_json(&text).unwrap(), rows());
    }
}
