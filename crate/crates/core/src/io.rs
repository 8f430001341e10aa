//! File formats: distribution CSV and witness CSV + JSON sidecar.
//!
//! A distribution file has one distribution per row, entries as decimal
//! floats. Files holding incomplete distributions start with `# q=<value>`.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::WitnessPair;
use crate::error::{domain, parameter, Result};
use crate::functionals::{Family, Functional};
use crate::numeric::format_g17;
use crate::simplex::{CompleteDistribution, Distribution, IncompleteDistribution};

fn parse_q_header(line: &str) -> Option<Result<f64>> {
    let rest = line.trim().strip_prefix('#')?.trim();
    let value = rest.strip_prefix("q=")?.trim();
    Some(value.parse::<f64>().map_err(|e| parameter(format!("bad q header {value:?}: {e}"))))
}

/// Reads every row as a distribution, validating the constraint set.
pub fn read_distributions<R: Read>(reader: R) -> Result<Vec<Distribution>> {
    let mut text = String::new();
    std::io::BufReader::new(reader).read_to_string(&mut text)?;
    let mut q = None;
    for line in text.lines() {
        if let Some(parsed) = parse_q_header(line) {
            q = Some(parsed?);
            break;
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| domain(format!("row {}: bad entry {s:?}: {e}", row + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            continue;
        }
        out.push(match q {
            Some(q) => Distribution::Incomplete(IncompleteDistribution::new(values, q)?),
            None => Distribution::Complete(CompleteDistribution::new(values)?),
        });
    }
    Ok(out)
}

pub fn read_distributions_from_path(path: &Path) -> Result<Vec<Distribution>> {
    read_distributions(std::fs::File::open(path)?)
}

/// Writes rows of the same kind; incomplete rows get the `# q=` header.
pub fn write_distributions<W: Write>(mut writer: W, rows: &[&Distribution]) -> Result<()> {
    let q = match rows.first().map(|d| d.kind()) {
        Some(crate::simplex::DistributionKind::Incomplete { q }) => Some(q),
        _ => None,
    };
    if rows.iter().any(|d| match d.kind() {
        crate::simplex::DistributionKind::Incomplete { q: dq } => Some(dq) != q,
        crate::simplex::DistributionKind::Complete => q.is_some(),
    }) {
        return Err(parameter("all rows of a distribution file must share one kind"));
    }
    if let Some(q) = q {
        writeln!(writer, "# q={}", format_g17(q))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for d in rows {
        w.write_record(d.as_slice().iter().map(|&v| format_g17(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar of a witness file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSidecar {
    pub functional: Family,
    pub q: f64,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub ratio: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub achieved_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<f64>>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl WitnessSidecar {
    pub fn new(f: &Functional, pair: &WitnessPair) -> Self {
        WitnessSidecar {
            functional: f.family(),
            q: f.parameter(),
            alpha: pair.alpha,
            delta: pair.extra.get("delta").copied(),
            ratio: pair.ratio,
            n: pair.n,
            achieved_distance: pair.achieved_distance,
            observable: pair.observable.clone(),
            extra: pair.extra.clone(),
        }
    }
}

/// Writes `<prefix>.csv` (rows `p`, `p'`) and `<prefix>.json`.
pub fn write_witness(prefix: &Path, f: &Functional, pair: &WitnessPair) -> Result<(PathBuf, PathBuf)> {
    let csv_path = prefix.with_extension("csv");
    let json_path = prefix.with_extension("json");
    let file = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    write_distributions(file, &[&pair.p, &pair.p2])?;
    let mut json = std::io::BufWriter::new(std::fs::File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut json, &WitnessSidecar::new(f, pair))?;
    writeln!(json)?;
    json.flush()?;
    Ok((csv_path, json_path))
}

/// Reads a witness written by [`write_witness`].
pub fn read_witness(prefix: &Path) -> Result<(Vec<Distribution>, WitnessSidecar)> {
    let rows = read_distributions_from_path(&prefix.with_extension("csv"))?;
    let reader = std::io::BufReader::new(std::fs::File::open(prefix.with_extension("json"))?);
    let sidecar = serde_json::from_reader(reader)?;
    Ok((rows, sidecar))
}

/// True if the first line of `reader` is a `# q=` header.
pub fn has_q_header<R: BufRead>(mut reader: R) -> Result<bool> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    Ok(parse_q_header(&first).is_some())
}
