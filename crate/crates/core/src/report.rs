//! Report rows shared by the experiment runner and the acceptance suite.
//!
//! Every row carries a measured `value`, the `bound` it is held to and a
//! `margin` whose sign decides `pass`, so a row can be re-checked from the
//! CSV alone.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column order of every CSV report.
pub const CSV_COLUMNS: [&str; 7] = ["criterion", "check", "inputs_digest", "value", "bound", "margin", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub criterion: String,
    pub check: String,
    pub inputs_digest: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// First 16 hex digits of the SHA-256 of `parts` joined by `|`.
pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.update(b"|");
        }
        h.update(p.as_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl Row {
    fn new(criterion: &str, check: &str, inputs: &str, value: f64, bound: f64, margin: f64) -> Self {
        Self {
            criterion: criterion.to_string(),
            check: check.to_string(),
            inputs_digest: digest(&[criterion, check, inputs]),
            value,
            bound,
            margin,
            // NaN margins fail.
            pass: margin >= 0.0,
        }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(criterion: &str, check: &str, inputs: &str, value: f64, bound: f64) -> Self {
        Self::new(criterion, check, inputs, value, bound, bound - value)
    }

    /// Passes when `value >= bound`.
    pub fn at_least(criterion: &str, check: &str, inputs: &str, value: f64, bound: f64) -> Self {
        Self::new(criterion, check, inputs, value, bound, value - bound)
    }

    /// Passes when `value` is finite.
    pub fn finite(criterion: &str, check: &str, inputs: &str, value: f64) -> Self {
        let margin = if value.is_finite() { f64::INFINITY } else { f64::NAN };
        Self::new(criterion, check, inputs, value, f64::INFINITY, margin)
    }

    /// Passes when `flag` holds; value 1 for true, 0 for false.
    pub fn holds(criterion: &str, check: &str, inputs: &str, flag: bool) -> Self {
        Self::at_least(criterion, check, inputs, if flag { 1.0 } else { 0.0 }, 1.0)
    }

    /// A failed row for an evaluation that raised an error.
    pub fn error(criterion: &str, check: &str, inputs: &str) -> Self {
        Self::new(criterion, check, inputs, f64::NAN, f64::NAN, f64::NAN)
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("writing report: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("writing report: {e}")))?;
    Ok(())
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}
