//! Reading the panel CSV format: a header row of series names, then one
//! numeric column per series. No quoting, no escapes — series names must
//! not contain commas, which the panel type enforces anyway.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;

use irwal::SeriesPanel;

/// Reads a panel CSV; errors carry the path and the offending position.
pub fn read_panel(path: &Path) -> Result<SeriesPanel<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading input {}", path.display()))?;
    parse_panel(&text).with_context(|| format!("parsing input {}", path.display()))
}

/// Parses CSV text into a panel: `d` named series over `T` time points.
pub fn parse_panel(text: &str) -> Result<SeriesPanel<f64>> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        bail!("empty file (expected a header row of series names)");
    };
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let d = names.len();

    // Time-major staging buffer; the panel wants series-major.
    let mut values: Vec<f64> = Vec::new();
    let mut t_len = 0usize;
    for (index, line) in lines {
        let lineno = index + 1; // 1-based, counting the header
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            bail!("line {lineno}: expected {d} fields, got {}", fields.len());
        }
        for (j, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                anyhow::anyhow!("line {lineno}, column {}: invalid number {field:?}", j + 1)
            })?;
            values.push(v);
        }
        t_len += 1;
    }
    if t_len == 0 {
        bail!("no data rows after the header");
    }

    let by_time = Array2::from_shape_vec((t_len, d), values)
        .expect("buffer length is exactly t_len * d");
    Ok(SeriesPanel::new(by_time.t().to_owned(), names)?)
}
