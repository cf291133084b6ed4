//! CSV export and import with lossless 17-significant-digit floats.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{PathMatrix, TimeGrid};

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // collapse -0.0 so reruns cannot differ by the sign of zero
        return "0".to_string();
    }
    format!("{x:.16e}")
}

/// Header `t_0,...,t_N`.
pub fn node_header(grid: &TimeGrid) -> Vec<String> {
    (0..grid.len()).map(|i| format!("t_{i}")).collect()
}

/// Writes one row per path under the `t_0,...,t_N` header.
pub fn write_paths<W: Write>(paths: &PathMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(node_header(paths.grid()))?;
    for row in paths.iter_rows() {
        w.write_record(row.iter().map(|x| format_float(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_paths`]. The CSV carries node indices
/// only, so the horizon is supplied by the caller.
pub fn read_paths<R: Read>(horizon: f64, input: R) -> Result<PathMatrix> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h != format!("t_{i}") {
            return Err(Error::Csv(format!(
                "unexpected header field {h:?} at column {i}"
            )));
        }
    }
    if headers.len() < 3 {
        return Err(Error::Csv("need at least three node columns".into()));
    }
    let grid = TimeGrid::new(horizon, headers.len() - 1)?;
    let rows = r
        .records()
        .map(|rec| {
            rec?.iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Csv(format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PathMatrix::from_rows(grid, rows)
}

/// Writes an arbitrary table of floats with a header.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Csv(format!(
                "row of {} values under {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|x| format_float(*x)))?;
    }
    w.flush()?;
    Ok(())
}
