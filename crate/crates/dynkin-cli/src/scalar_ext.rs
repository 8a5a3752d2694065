//! Scalar-specific parsing and rendering for the two CLI arithmetic modes.
//!
//! Spec files carry every numeric entry as a JSON number or a string.
//! Strings exist so that exact-rational runs can state values such as
//! "60/11" or "1/5" that have no finite binary expansion; float runs
//! accept the same files by converting through `f64`.

use std::str::FromStr;

use dynkin::{Rational, Scalar};
use num_traits::ToPrimitive;
use serde_json::Value;

use crate::error::CliError;
use crate::spec_file::CellValue;

/// A scalar the CLI can read from spec files and write into reports.
pub trait CliScalar: Scalar {
    /// Name used in `meta.arithmetic` and accepted by `--arithmetic`.
    const ARITHMETIC: &'static str;

    /// Parse one spec-file cell; `field` names the cell in error messages.
    fn parse_cell(cell: &CellValue, field: &str) -> Result<Self, CliError>;

    /// Render the value as a JSON cell (number for floats, exact string
    /// for rationals).
    fn to_json(&self) -> Value;

    /// Render the value for CSV cells and terminal tables.
    fn render(&self) -> String;
}

impl CliScalar for f64 {
    const ARITHMETIC: &'static str = "float";

    fn parse_cell(cell: &CellValue, field: &str) -> Result<Self, CliError> {
        match cell {
            CellValue::Number(v) => Ok(*v),
            CellValue::Text(s) => {
                if let Ok(v) = s.trim().parse::<f64>() {
                    return Ok(v);
                }
                match Rational::from_str(s.trim()) {
                    Ok(q) => ToPrimitive::to_f64(&q).ok_or_else(|| {
                        CliError::Invalid(format!("{field}: {s:?} overflows f64"))
                    }),
                    Err(_) => Err(CliError::Invalid(format!(
                        "{field}: {s:?} is neither a decimal nor a p/q fraction"
                    ))),
                }
            }
        }
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(self.to_string()))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl CliScalar for Rational {
    const ARITHMETIC: &'static str = "rational";

    fn parse_cell(cell: &CellValue, field: &str) -> Result<Self, CliError> {
        match cell {
            // JSON numbers are binary floats, so this conversion is exact.
            CellValue::Number(v) => Ok(<Rational as Scalar>::from_f64(*v)),
            CellValue::Text(s) => {
                if let Ok(q) = Rational::from_str(s.trim()) {
                    return Ok(q);
                }
                match s.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(<Rational as Scalar>::from_f64(v)),
                    _ => Err(CliError::Invalid(format!(
                        "{field}: {s:?} is neither a p/q fraction nor a decimal"
                    ))),
                }
            }
        }
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

/// Parse a whole vector of cells, naming each entry in error messages.
pub fn parse_cells<S: CliScalar>(cells: &[CellValue], field: &str) -> Result<Vec<S>, CliError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| S::parse_cell(c, &format!("{field}[{i}]")))
        .collect()
}
