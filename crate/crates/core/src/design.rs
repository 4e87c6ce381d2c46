//! Lagged regression designs for autoregressive mean equations.
//!
//! A design is built from a [`SeriesPanel`](crate::panel::SeriesPanel) by
//! choosing a target series and, for every source series, a set of lags. Rows
//! are the time points `max_lag..T-1`; columns are the intercept followed by
//! the lag regressors in series-major, lag-ascending order. Every regressor
//! column is rescaled to unit root-mean-square (no mean centering), and the
//! scales are kept so fitted coefficients can be mapped back to the raw data.

use std::fmt;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::panel::SeriesPanel;
use crate::scalar::Scalar;

/// Per-source-series lag sets describing the regressors of one mean equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagIndexSets {
    sets: Vec<Vec<usize>>,
}

impl LagIndexSets {
    /// One sorted, duplicate-free lag set per source series.
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidLagSet("no source series".into()));
        }
        let mut cleaned = Vec::with_capacity(sets.len());
        for (s, mut lags) in sets.into_iter().enumerate() {
            lags.sort_unstable();
            if lags.first() == Some(&0) {
                return Err(Error::InvalidLagSet(format!(
                    "series {s}: lag 0 is not a regressor"
                )));
            }
            if lags.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidLagSet(format!("series {s}: duplicate lag")));
            }
            cleaned.push(lags);
        }
        Ok(Self { sets: cleaned })
    }

    /// Every source series contributes lags `1..=max_lag`.
    pub fn uniform(d: usize, max_lag: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidLagSet("no source series".into()));
        }
        Self::from_sets(vec![(1..=max_lag).collect(); d])
    }

    /// Every source series contributes the same explicit lag set.
    pub fn same(d: usize, lags: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidLagSet("no source series".into()));
        }
        Self::from_sets(vec![lags; d])
    }

    /// Lag set for a single series.
    pub fn univariate(lags: Vec<usize>) -> Result<Self> {
        Self::from_sets(vec![lags])
    }

    /// Number of source series.
    pub fn n_series(&self) -> usize {
        self.sets.len()
    }

    /// Sorted lags of source series `s`.
    pub fn get(&self, s: usize) -> &[usize] {
        &self.sets[s]
    }

    /// Largest lag over all source series (0 when every set is empty).
    pub fn max_lag(&self) -> usize {
        self.sets
            .iter()
            .filter_map(|s| s.last().copied())
            .max()
            .unwrap_or(0)
    }

    /// Total number of lag regressors.
    pub fn n_regressors(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }
}

/// Identity of one design column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnId {
    /// The constant column, never penalized and never rescaled.
    Intercept,
    /// `lag`-step lag of source series `series`.
    Lag { series: usize, lag: usize },
    /// Externally supplied regressor (from [`Design::from_matrix`]).
    Covariate(usize),
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnId::Intercept => write!(f, "intercept"),
            ColumnId::Lag { series, lag } => write!(f, "series{series}.lag{lag}"),
            ColumnId::Covariate(j) => write!(f, "x{j}"),
        }
    }
}

/// A ready-to-fit regression design with standardized columns.
#[derive(Debug, Clone)]
pub struct Design<F: Scalar> {
    /// Response, aligned with the rows of `x`.
    pub y: Array1<F>,
    /// Regressor matrix, `n × p`, columns scaled to unit RMS.
    pub x: Array2<F>,
    /// Identity of each column of `x`.
    pub columns: Vec<ColumnId>,
    /// Scale each raw column was divided by (1 for the intercept).
    pub col_scale: Vec<F>,
    /// Largest lag consumed when the design was built (0 for raw matrices).
    pub max_lag: usize,
}

impl<F: Scalar> Design<F> {
    /// Builds the design for the mean equation of `panel` series `target`.
    ///
    /// Usable rows are `t = max_lag..T-1`, so the effective sample size is
    /// `T - max_lag`; at least two rows are required.
    pub fn build_ar_design(
        panel: &SeriesPanel<F>,
        target: usize,
        lags: &LagIndexSets,
    ) -> Result<Self> {
        let d = panel.n_series();
        if target >= d {
            return Err(Error::InvalidParameter(format!(
                "target series {target} out of range (panel has {d})"
            )));
        }
        if lags.n_series() != d {
            return Err(Error::ShapeMismatch(format!(
                "lag sets describe {} series, panel has {d}",
                lags.n_series()
            )));
        }
        let max_lag = lags.max_lag();
        let t_len = panel.len();
        let n = t_len.saturating_sub(max_lag);
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "{t_len} observations leave {n} usable rows after lag {max_lag}"
            )));
        }
        let p = 1 + lags.n_regressors();
        let mut columns = Vec::with_capacity(p);
        columns.push(ColumnId::Intercept);
        for s in 0..d {
            for &k in lags.get(s) {
                columns.push(ColumnId::Lag { series: s, lag: k });
            }
        }

        let mut x = Array2::zeros((n, p));
        let mut y = Array1::zeros(n);
        for r in 0..n {
            let t = max_lag + r;
            y[r] = panel.series(target)[t];
            x[(r, 0)] = F::one();
            let mut j = 1;
            for s in 0..d {
                let src = panel.series(s);
                for &k in lags.get(s) {
                    x[(r, j)] = src[t - k];
                    j += 1;
                }
            }
        }

        let col_scale = standardize(&mut x, &columns, |j| {
            format!("{} (column {j})", columns[j])
        })?;
        Ok(Self {
            y,
            x,
            columns,
            col_scale,
            max_lag,
        })
    }

    /// Wraps an arbitrary response/regressor pair.
    ///
    /// With `add_intercept` a leading constant column is prepended; remaining
    /// columns are labeled [`ColumnId::Covariate`] by their position in the
    /// input. With `standardize_cols` the non-intercept columns are rescaled
    /// to unit RMS, otherwise all scales are 1.
    pub fn from_matrix(
        y: Array1<F>,
        x: Array2<F>,
        add_intercept: bool,
        standardize_cols: bool,
    ) -> Result<Self> {
        let (n, k) = x.dim();
        if y.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "y has {} rows, x has {n}",
                y.len()
            )));
        }
        if n == 0 || (k == 0 && !add_intercept) {
            return Err(Error::EmptyDesign(format!("{n} rows, {k} columns")));
        }
        if let Some(v) = y.iter().chain(x.iter()).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("design contains {v}")));
        }

        let mut columns = Vec::with_capacity(k + 1);
        let mut full = if add_intercept {
            columns.push(ColumnId::Intercept);
            let mut full = Array2::ones((n, k + 1));
            full.slice_mut(ndarray::s![.., 1..]).assign(&x);
            full
        } else {
            x
        };
        columns.extend((0..k).map(ColumnId::Covariate));

        let col_scale = if standardize_cols {
            standardize(&mut full, &columns, |j| format!("{} (column {j})", columns[j]))?
        } else {
            vec![F::one(); columns.len()]
        };
        Ok(Self {
            y,
            x: full,
            columns,
            col_scale,
            max_lag: 0,
        })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of columns, intercept included.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Position of the intercept column, if the design has one.
    pub fn intercept_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| *c == ColumnId::Intercept)
    }

    /// Maps coefficients fitted on the standardized design back to the raw
    /// column units.
    pub fn destandardize_coefficients(&self, beta_std: &Array1<F>) -> Array1<F> {
        Array1::from_iter(
            beta_std
                .iter()
                .zip(&self.col_scale)
                .map(|(&b, &s)| b / s),
        )
    }
}

/// Effective-sample lag horizon `⌊5 √n⌋` used when no explicit lag set is
/// given: it grows slowly enough that penalized fitting stays workable while
/// comfortably covering the lags that matter at sample size `n`.
pub fn default_lag_horizon(n: usize) -> usize {
    (5.0 * (n as f64).sqrt()).floor() as usize
}

/// Rescales every non-intercept column to unit RMS in place, returning the
/// scales. A column whose entries are all identical (intercept aside) has no
/// information after scaling and is rejected.
fn standardize<F: Scalar>(
    x: &mut Array2<F>,
    columns: &[ColumnId],
    name_of: impl Fn(usize) -> String,
) -> Result<Vec<F>> {
    let n = x.nrows();
    let mut scales = vec![F::one(); columns.len()];
    for (j, id) in columns.iter().enumerate() {
        if *id == ColumnId::Intercept {
            continue;
        }
        let mut col = x.column_mut(j);
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::DegenerateColumn { name: name_of(j) });
        }
        let rms = (col.iter().map(|&v| v * v).sum::<F>() / F::of(n)).sqrt();
        col.mapv_inplace(|v| v / rms);
        scales[j] = rms;
    }
    Ok(scales)
}
