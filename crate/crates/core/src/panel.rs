//! Multivariate time-series container and its CSV interchange format.
//!
//! The on-disk layout is one column per series with a mandatory header row of
//! series names; rows are time points in increasing order. Parsing is strict:
//! the first malformed cell aborts with its 1-based row and column (the header
//! counts as row 1).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::format_sig17;
use crate::scalar::Scalar;

/// A panel of `d` series observed over `T` common time points.
///
/// Stored row-per-series, so `values.row(i)` is the full history of series
/// `i`.
#[derive(Debug, Clone)]
pub struct SeriesPanel<F: Scalar> {
    values: Array2<F>,
    names: Vec<String>,
}

impl<F: Scalar> SeriesPanel<F> {
    /// Wraps a `d × T` matrix of observations.
    ///
    /// Requires one name per series, at least two time points, and finite
    /// values throughout.
    pub fn new(values: Array2<F>, names: Vec<String>) -> Result<Self> {
        let (d, t) = values.dim();
        if d == 0 {
            return Err(Error::EmptyDesign("panel has no series".into()));
        }
        if names.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "panel has {d} series but {} names",
                names.len()
            )));
        }
        if t < 2 {
            return Err(Error::InsufficientData(format!(
                "panel needs at least 2 time points, got {t}"
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "series {} has an empty name",
                    i + 1
                )));
            }
            if name.contains(',') {
                return Err(Error::InvalidParameter(format!(
                    "series name {name:?} contains a comma"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate series name {name:?}"
                )));
            }
        }
        if let Some(((i, t), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "series {:?} at time {t}: {v}",
                names[i]
            )));
        }
        Ok(Self { values, names })
    }

    /// Wraps a single series.
    pub fn univariate(values: Vec<F>, name: impl Into<String>) -> Result<Self> {
        let t = values.len();
        let values = Array2::from_shape_vec((1, t), values)
            .expect("vector reshapes into a one-row matrix");
        Self::new(values, vec![name.into()])
    }

    /// Number of series.
    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    /// True when the panel holds no time points (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Series names in column order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Full history of series `i`.
    pub fn series(&self, i: usize) -> ArrayView1<'_, F> {
        self.values.row(i)
    }

    /// The underlying `d × T` matrix.
    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    /// Parses the strict CSV interchange format from an in-memory string.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        let Some((&header, data)) = lines.split_first() else {
            return Err(Error::CsvParse {
                row: 1,
                col: 1,
                msg: "missing header row".into(),
            });
        };
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let d = names.len();
        for (j, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::CsvParse {
                    row: 1,
                    col: j + 1,
                    msg: "empty series name".into(),
                });
            }
        }
        let t = data.len();
        let mut values = Array2::zeros((d, t));
        for (i, line) in data.iter().enumerate() {
            let row = i + 2;
            if line.trim().is_empty() {
                return Err(Error::CsvParse {
                    row,
                    col: 1,
                    msg: "empty line".into(),
                });
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d {
                return Err(Error::CsvParse {
                    row,
                    col: fields.len().min(d) + usize::from(fields.len() > d),
                    msg: format!("expected {d} fields, found {}", fields.len()),
                });
            }
            for (j, field) in fields.iter().enumerate() {
                let parsed: f64 = field.trim().parse().map_err(|_| Error::CsvParse {
                    row,
                    col: j + 1,
                    msg: format!("not a number: {:?}", field.trim()),
                })?;
                if !parsed.is_finite() {
                    return Err(Error::CsvParse {
                        row,
                        col: j + 1,
                        msg: format!("non-finite value: {parsed}"),
                    });
                }
                values[(j, i)] = F::cast(parsed);
            }
        }
        Self::new(values, names)
    }

    /// Reads the CSV interchange format from a file.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::from_csv(&text)
    }

    /// Writes the CSV interchange format with 17 significant digits per cell,
    /// enough to round-trip `f64` exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.names.join(","))?;
        let mut line = String::new();
        for t in 0..self.len() {
            line.clear();
            for i in 0..self.n_series() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format_sig17(self.values[(i, t)].f64()));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Writes the panel to a file.
    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }
}
