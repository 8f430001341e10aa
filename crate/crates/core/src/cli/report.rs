use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::Result;
use crate::numeric::format_g17;

pub const CSV_HEADER: [&str; 8] = ["functional", "q", "alpha", "N", "delta", "epsilon", "ratio", "verdict"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Violation => "violation",
            Verdict::NotApplicable => "n/a",
        }
    }

    /// `pass` iff `ratio < epsilon`.
    pub fn from_ratio(ratio: f64, epsilon: f64) -> Self {
        if ratio < epsilon {
            Verdict::Pass
        } else {
            Verdict::Violation
        }
    }
}

/// One line of a sweep, verify, probe or lemma-check report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub functional: String,
    pub q: f64,
    pub alpha: f64,
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub ratio: f64,
    pub verdict: Verdict,
    /// Reason for an `n/a` verdict; emitted in JSON only.
    pub message: Option<String>,
}

impl Serialize for ReportRow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("functional", &self.functional)?;
        m.serialize_entry("q", &self.q)?;
        m.serialize_entry("alpha", &self.alpha)?;
        m.serialize_entry("N", &self.n)?;
        m.serialize_entry("delta", &self.delta)?;
        m.serialize_entry("epsilon", &self.epsilon)?;
        m.serialize_entry("ratio", &self.ratio)?;
        m.serialize_entry("verdict", &self.verdict)?;
        if let Some(msg) = &self.message {
            m.serialize_entry("message", msg)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn render_report<W: Write>(rows: &[ReportRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.write_record([
                    r.functional.clone(),
                    format_g17(r.q),
                    format_g17(r.alpha),
                    r.n.to_string(),
                    format_g17(r.delta),
                    format_g17(r.epsilon),
                    format_g17(r.ratio),
                    r.verdict.as_str().to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes to `destination` when given, otherwise to `stdout`.
pub fn write_report(rows: &[ReportRow], format: Format, destination: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match destination {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            let mut w = std::io::BufWriter::new(file);
            render_report(rows, format, &mut w)?;
            w.flush()?;
            Ok(())
        }
        None => render_report(rows, format, stdout),
    }
}
