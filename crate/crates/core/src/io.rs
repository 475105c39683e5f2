//! CSV and JSON emitters for frequency tables, scheme comparisons and
//! entropy diagnostics.
//!
//! CSV floats use 17 significant digits in scientific notation so that
//! parsing them back reproduces every bit. JSON floats use the shortest
//! representation that round-trips.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attention::AttentionDiagnostics;
use crate::error::{Result, RopeError};
use crate::rope::FrequencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = RopeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(RopeError::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

/// Errors while emitting or reading files.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rope(#[from] RopeError),
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

// ── Frequency tables ────────────────────────────────────────────────────────

pub const FREQS_HEADER: [&str; 8] = [
    "dim",
    "theta_base",
    "theta_scaled",
    "wavelength_base",
    "wavelength_scaled",
    "rotations_at_L",
    "gamma",
    "mscale",
];

/// One emitted row of a frequency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqRow {
    pub dim: usize,
    pub theta_base: f64,
    pub theta_scaled: f64,
    pub wavelength_base: f64,
    pub wavelength_scaled: f64,
    #[serde(rename = "rotations_at_L")]
    pub rotations_at_l: f64,
    pub gamma: f64,
    pub mscale: f64,
}

pub fn freq_rows(table: &FrequencyTable) -> Vec<FreqRow> {
    let context = table.params().trained_context() as f64;
    table
        .entries()
        .iter()
        .map(|e| FreqRow {
            dim: e.dim,
            theta_base: e.theta_base,
            theta_scaled: e.theta_scaled,
            wavelength_base: e.wavelength,
            wavelength_scaled: e.wavelength_scaled(),
            rotations_at_l: context / e.wavelength,
            gamma: e.gamma,
            mscale: table.mscale(),
        })
        .collect()
}

pub fn write_freqs<W: Write>(
    table: &FrequencyTable,
    format: OutputFormat,
    mut out: W,
) -> Result<(), IoError> {
    let rows = freq_rows(table);
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &rows)?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv_writer(out);
            w.write_record(FREQS_HEADER)?;
            for r in rows {
                w.write_record([
                    r.dim.to_string(),
                    fmt_f64(r.theta_base),
                    fmt_f64(r.theta_scaled),
                    fmt_f64(r.wavelength_base),
                    fmt_f64(r.wavelength_scaled),
                    fmt_f64(r.rotations_at_l),
                    fmt_f64(r.gamma),
                    fmt_f64(r.mscale),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_freqs<R: Read>(format: OutputFormat, input: R) -> Result<Vec<FreqRow>, IoError> {
    match format {
        OutputFormat::Json => Ok(serde_json::from_reader(input)?),
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_reader(input);
            let header = reader.headers()?.clone();
            if !header.iter().eq(FREQS_HEADER) {
                return Err(RopeError::Parse(format!("unexpected header {header:?}")).into());
            }
            reader
                .deserialize()
                .map(|row| row.map_err(IoError::from))
                .collect()
        }
    }
}

// ── Comparisons ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub dim: usize,
    #[serde(rename = "thetaA")]
    pub theta_a: f64,
    #[serde(rename = "thetaB")]
    pub theta_b: f64,
    /// `thetaB / thetaA`.
    pub ratio: f64,
    pub abs_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub scheme_a: String,
    pub scheme_b: String,
    pub rows: Vec<CompareRow>,
    pub max_abs_log_ratio: f64,
}

/// Per-dimension ratio of scaled frequencies of two tables with the same head dimension.
pub fn compare_tables(a: &FrequencyTable, b: &FrequencyTable) -> Result<Comparison> {
    if a.head_dim() != b.head_dim() {
        return Err(RopeError::TableMismatch(format!(
            "head dimensions {} and {}",
            a.head_dim(),
            b.head_dim()
        )));
    }
    let rows: Vec<CompareRow> = a
        .entries()
        .iter()
        .zip(b.entries())
        .map(|(ea, eb)| {
            let ratio = eb.theta_scaled / ea.theta_scaled;
            CompareRow {
                dim: ea.dim,
                theta_a: ea.theta_scaled,
                theta_b: eb.theta_scaled,
                ratio,
                abs_log_ratio: ratio.ln().abs(),
            }
        })
        .collect();
    let max_abs_log_ratio = rows.iter().map(|r| r.abs_log_ratio).fold(0.0, f64::max);
    Ok(Comparison {
        scheme_a: a.scheme().to_string(),
        scheme_b: b.scheme().to_string(),
        rows,
        max_abs_log_ratio,
    })
}

/// CSV gets a trailing summary row whose `dim` cell is `max` and whose
/// last cell holds the maximum `|log ratio|`.
pub fn write_comparison<W: Write>(
    cmp: &Comparison,
    format: OutputFormat,
    mut out: W,
) -> Result<(), IoError> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, cmp)?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["dim", "thetaA", "thetaB", "ratio", "abs_log_ratio"])?;
            for r in &cmp.rows {
                w.write_record([
                    r.dim.to_string(),
                    fmt_f64(r.theta_a),
                    fmt_f64(r.theta_b),
                    fmt_f64(r.ratio),
                    fmt_f64(r.abs_log_ratio),
                ])?;
            }
            w.write_record(["max", "", "", "", &fmt_f64(cmp.max_abs_log_ratio)])?;
            w.flush()?;
        }
    }
    Ok(())
}

// ── Entropy diagnostics ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub length: usize,
    pub mean_entropy: f64,
    pub uniform_bound: f64,
    pub mscale: f64,
}

impl From<&AttentionDiagnostics> for EntropyRecord {
    fn from(d: &AttentionDiagnostics) -> Self {
        Self {
            length: d.context_length,
            mean_entropy: d.mean_entropy,
            uniform_bound: d.uniform_bound(),
            mscale: d.mscale,
        }
    }
}

pub fn write_entropy<W: Write>(
    records: &[EntropyRecord],
    format: OutputFormat,
    mut out: W,
) -> Result<(), IoError> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records)?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["length", "mean_entropy", "uniform_bound", "mscale"])?;
            for r in records {
                w.write_record([
                    r.length.to_string(),
                    fmt_f64(r.mean_entropy),
                    fmt_f64(r.uniform_bound),
                    fmt_f64(r.mscale),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
