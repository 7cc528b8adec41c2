use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ResultRow;
use crate::error::{invalid_param, Result};

pub const CSV_HEADER: [&str; 15] = [
    "scheme",
    "graph",
    "d",
    "n",
    "K",
    "r",
    "p",
    "q",
    "trials",
    "detections",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "mean_budget",
    "wall_time_ms",
];

/// Marker written into the statistic columns of a failed row.
pub const ERROR_MARKER: &str = "error";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(invalid_param(format!("unknown output format '{s}'"))),
        }
    }
}

fn stat(v: Option<f64>) -> String {
    v.map_or_else(|| ERROR_MARKER.to_string(), |x| format!("{x:.6}"))
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.write_record([
            row.scheme.to_string(),
            row.graph.clone(),
            row.d.to_string(),
            row.n.to_string(),
            row.k.to_string(),
            row.r.to_string(),
            row.p.to_string(),
            row.q.to_string(),
            row.trials.to_string(),
            row.detections.to_string(),
            stat(row.p_hat),
            stat(row.ci_lo),
            stat(row.ci_hi),
            format!("{:.3}", row.mean_budget),
            row.wall_time_ms.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
