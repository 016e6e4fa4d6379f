//! Profile CSV and JSON serialization.
//!
//! Profiles are written as "y,u" with 17 significant digits per value, which
//! round-trips f64 exactly; grids are reconstructed from the node column and
//! must match bit for bit.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{FwError, Result};
use crate::grid::{Field, PeriodicGrid};

/// Render a float with 17 significant digits (exact f64 round-trip).
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn profile_csv_string(field: &Field) -> String {
    let mut out = String::with_capacity(field.values().len() * 48 + 8);
    out.push_str("y,u\n");
    for (&y, &u) in field.grid().nodes().iter().zip(field.values()) {
        out.push_str(&fmt_f64(y));
        out.push(',');
        out.push_str(&fmt_f64(u));
        out.push('\n');
    }
    out
}

pub fn write_profile_csv(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(profile_csv_string(field).as_bytes())?;
    Ok(())
}

pub fn parse_profile_csv(text: &str) -> Result<Field> {
    let mut ys: Vec<f64> = Vec::new();
    let mut us: Vec<f64> = Vec::new();
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "y,u" => {}
        other => {
            return Err(FwError::Data(format!(
                "expected profile header \"y,u\", got {other:?}"
            )))
        }
    }
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            FwError::Data(format!(
                "line {}: expected two comma-separated values",
                ln + 2
            ))
        })?;
        let y: f64 = a
            .trim()
            .parse()
            .map_err(|e| FwError::Data(format!("line {}: bad y value ({e})", ln + 2)))?;
        let u: f64 = b
            .trim()
            .parse()
            .map_err(|e| FwError::Data(format!("line {}: bad u value ({e})", ln + 2)))?;
        ys.push(y);
        us.push(u);
    }
    let n = ys.len();
    if n < 8 {
        return Err(FwError::Data(format!("profile has only {n} rows")));
    }
    let p = -ys[0];
    let grid = PeriodicGrid::new(p, n)
        .map_err(|e| FwError::Data(format!("node column is not a uniform grid: {e}")))?;
    // the rebuilt grid must reproduce the stored nodes exactly
    for (j, (&stored, &rebuilt)) in ys.iter().zip(grid.nodes()).enumerate() {
        if stored != rebuilt {
            return Err(FwError::Data(format!(
                "node {j} = {stored:?} does not lie on the uniform grid (expected {rebuilt:?})"
            )));
        }
    }
    Field::new(&grid, us)
}

pub fn read_profile_csv(path: impl AsRef<Path>) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    parse_profile_csv(&text)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
