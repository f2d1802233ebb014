use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::{Map, Value};
use vcodec::rate::{write_csv, write_json, ReportRow};
use vcodec::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Report format; defaults to the report file's extension, else CSV.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ReportArgs {
    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.report.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "json" => Format::Json,
            _ => Format::Csv,
        })
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.report {
            Some(p) => Box::new(BufWriter::new(create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn write_rate_rows(&self, rows: &[ReportRow], meta: &[String]) -> Result<()> {
        let mut w = self.sink()?;
        match self.format() {
            Format::Csv => write_csv(&mut w, rows, meta)?,
            Format::Json => write_json(&mut w, rows, meta)?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_table(&self, t: &Table, meta: &[String]) -> Result<()> {
        let mut w = self.sink()?;
        match self.format() {
            Format::Csv => t.write_csv(&mut w, meta)?,
            Format::Json => t.write_json(&mut w, meta)?,
        }
        w.flush()?;
        Ok(())
    }
}

/// Self-description embedded in every report.
pub fn meta(argv: &[String]) -> Vec<String> {
    let args: Vec<&str> = argv.iter().skip(1).map(String::as_str).collect();
    vec![format!("vcodec {}", env!("CARGO_PKG_VERSION")), format!("command: vcodec {}", args.join(" "))]
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))
}

/// A small column-oriented report with scalar cells.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    summary: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new(), summary: Map::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Scalar emitted as a `# key: value` line in CSV and under `summary`
    /// in JSON.
    pub fn summary(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }

    fn write_csv<W: Write>(&self, w: &mut W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        for (k, v) in &self.summary {
            writeln!(w, "# {k}: {}", Self::cell(v))?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.iter().map(Self::cell).collect::<Vec<_>>().join(","))?;
        }
        Ok(())
    }

    fn write_json<W: Write>(&self, w: &mut W, meta: &[String]) -> Result<()> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        let doc = serde_json::json!({ "meta": meta, "summary": self.summary, "rows": rows });
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    }
}
