//! Plain-text artifacts: diagnostics CSV, surface files and JSON reports.
//!
//! Floats are written in shortest round-trip form, so a file re-read and
//! re-written is byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::background::GeonParams;
use crate::error::{GeonError, Result};
use crate::flow::DiagnosticsRow;
use crate::spectral::{Axis, PeriodicGrid};

/// Shortest decimal that parses back to `x`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(DiagnosticsRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        push_csv_row(&mut out, &r.csv_fields());
    }
    out
}

pub fn diagnostics_csv_row(row: &DiagnosticsRow) -> String {
    let mut out = String::new();
    push_csv_row(&mut out, &row.csv_fields());
    out
}

fn push_csv_row(out: &mut String, fields: &[f64]) {
    for (i, x) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*x));
    }
    out.push('\n');
}

/// Parses a diagnostics CSV back into its ten columns.
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<[f64; 10]>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == DiagnosticsRow::CSV_HEADER => {}
        Some(h) => return Err(GeonError::Format(format!("unexpected header {h:?}"))),
        None => return Err(GeonError::Format("empty diagnostics file".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let vals = parse_floats(line, i + 2)?;
            vals.try_into().map_err(|v: Vec<f64>| {
                GeonError::Format(format!(
                    "line {}: expected 10 fields, got {}",
                    i + 2,
                    v.len()
                ))
            })
        })
        .collect()
}

fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| GeonError::Format(format!("line {lineno}: {f:?}: {e}")))
        })
        .collect()
}

/// Header of a surface file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHeader {
    pub params: GeonParams,
    pub axes: [Axis; 2],
    pub sizes: [usize; 2],
    pub periods: [f64; 2],
    pub t: f64,
}

/// `# {header json}` followed by `x1,x2,v` rows in row-major order.
pub fn surface_file(params: &GeonParams, grid: &PeriodicGrid, v: &[f64], t: f64) -> Result<String> {
    if v.len() != grid.len() {
        return Err(GeonError::InvalidGrid(format!(
            "{} values for {} nodes",
            v.len(),
            grid.len()
        )));
    }
    let header = SurfaceHeader {
        params: params.clone(),
        axes: grid.axes,
        sizes: grid.sizes,
        periods: grid.periods,
        t,
    };
    let mut out = format!("# {}\nx1,x2,v\n", serde_json::to_string(&header)?);
    for (k, val) in v.iter().enumerate() {
        let (x, y) = grid.coords(k);
        push_csv_row(&mut out, &[x, y, *val]);
    }
    Ok(out)
}

pub fn parse_surface_file(text: &str) -> Result<(SurfaceHeader, Vec<f64>)> {
    let mut lines = text.lines();
    let header: SurfaceHeader = match lines.next().and_then(|l| l.strip_prefix("# ")) {
        Some(json) => serde_json::from_str(json)?,
        None => {
            return Err(GeonError::Format(
                "surface file must start with '# {header}'".into(),
            ))
        }
    };
    if lines.next() != Some("x1,x2,v") {
        return Err(GeonError::Format(
            "line 2: expected column header x1,x2,v".into(),
        ));
    }
    let mut v = Vec::with_capacity(header.sizes[0] * header.sizes[1]);
    for (i, line) in lines.enumerate() {
        let f = parse_floats(line, i + 3)?;
        if f.len() != 3 {
            return Err(GeonError::Format(format!(
                "line {}: expected 3 fields",
                i + 3
            )));
        }
        v.push(f[2]);
    }
    if v.len() != header.sizes[0] * header.sizes[1] {
        return Err(GeonError::Format(format!(
            "{} rows for a {}x{} grid",
            v.len(),
            header.sizes[0],
            header.sizes[1]
        )));
    }
    Ok((header, v))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| GeonError::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
