//! Field files: full-precision CSV for analysis, 16-bit PGM for a quick look.
//!
//! CSV layout:
//!
//! ```text
//! # n=<n> extent=<L> quantity=<name>
//! v(row 0, col 0),v(row 0, col 1),...
//! ```
//!
//! Rows run from y = −L to y = +L, columns from x = −L to x = +L, `n + 1` of
//! each. Values use 17 significant digits, so a reload is bit-identical.
//! Masked samples are written as `nan`.

use std::fmt::Write as _;
use std::path::Path;

use paramp_core::field::TransverseGrid;

use crate::CliError;

/// A field as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvField {
    pub grid: TransverseGrid,
    pub quantity: String,
    pub values: Vec<f64>,
}

pub fn csv_string(grid: &TransverseGrid, quantity: &str, values: &[f64]) -> String {
    assert_eq!(values.len(), grid.len(), "field length does not match grid");
    let side = grid.side();
    let mut out = String::with_capacity(values.len() * 24 + 64);
    writeln!(out, "# n={} extent={:e} quantity={quantity}", grid.n(), grid.extent()).unwrap();
    for row in values.chunks(side) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            if v.is_nan() {
                out.push_str("nan");
            } else {
                write!(out, "{v:.16e}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn bad(path: &Path, line: usize, what: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}:{line}: {what}", path.display()))
}

pub fn parse_csv(text: &str, path: &Path) -> Result<CsvField, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(path, 1, "empty file"))?;
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| bad(path, 1, "missing '# n=... extent=... quantity=...' header"))?;
    let (mut n, mut extent, mut quantity) = (None, None, None);
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("extent", v)) => extent = v.parse::<f64>().ok(),
            Some(("quantity", v)) => quantity = Some(v.to_owned()),
            _ => {}
        }
    }
    let (n, extent, quantity) = match (n, extent, quantity) {
        (Some(n), Some(e), Some(q)) => (n, e, q),
        _ => return Err(bad(path, 1, "header needs n, extent and quantity")),
    };
    let grid = TransverseGrid::new(n, extent).map_err(|e| bad(path, 1, e))?;

    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| bad(path, i + 2, format!("not a number: {cell:?}")))?;
            values.push(v);
        }
        if values.len() - before != grid.side() {
            return Err(bad(
                path,
                i + 2,
                format!("expected {} values, found {}", grid.side(), values.len() - before),
            ));
        }
    }
    if rows != grid.side() {
        return Err(bad(path, rows + 1, format!("expected {} rows, found {rows}", grid.side())));
    }
    Ok(CsvField { grid, quantity, values })
}

pub fn read_csv(path: &Path) -> Result<CsvField, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, path)
}

/// 16-bit binary PGM, min-max normalized over the finite samples.
///
/// The top image row is y = +L. Masked samples map to 0.
pub fn pgm_bytes(grid: &TransverseGrid, quantity: &str, values: &[f64]) -> Vec<u8> {
    let side = grid.side();
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let span = hi - lo;

    let mut out = format!(
        "P5\n# quantity={quantity} min={lo:e} max={hi:e} value=min+(max-min)*pixel/65535\n{side} {side}\n65535\n"
    )
    .into_bytes();
    for row in values.chunks(side).rev() {
        for &v in row {
            let level = if !v.is_finite() || span <= 0.0 {
                0
            } else {
                ((v - lo) / span * 65535.0).round() as u16
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}
