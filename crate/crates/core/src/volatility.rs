//! Conditional-scale estimation from regression residuals.
//!
//! The model is a power-ARCH recursion: for chosen power δ and lag sets 𝒥,
//!
//! ```text
//! σ_t^δ = α₀ + Σ_s Σ_{k ∈ 𝒥_s} α_{s,k} |ε_{s,t−k}|^δ   (+ threshold terms)
//! ```
//!
//! Since `E|ε_t|^δ = γ σ_t^δ` with `γ = E|Z|^δ`, regressing `|ε_t|^δ` on the
//! lagged powers recovers the recursion up to the factor γ, which is enough:
//! the fitted scales are only used as *relative* observation weights, and the
//! absolute level is pinned afterwards by a normalization step. Coefficients
//! are fitted by non-negative least squares, so the recursion output is
//! non-negative by construction, never by clipping.
//!
//! After the fit, a single constant `c` rescales the raw recursion output and
//! a small floor guards against degenerate weights, chosen jointly so that
//! both invariants hold exactly on the aligned sample:
//!
//! * `fitted_t = max(c·s_t, floor)` for every aligned `t`, and
//! * `mean((ε_t / fitted_t)²) = 1`.
//!
//! Threshold (leverage) variants add gated regressors `1{ε < 0}|ε|^δ` so
//! negative shocks may carry extra weight.

use ndarray::{Array1, Array2};

use crate::design::LagIndexSets;
use crate::error::{Error, Result};
use crate::nnls::nnls;
use crate::scalar::Scalar;

/// Configuration of one conditional-scale fit.
#[derive(Debug, Clone)]
pub struct VolatilitySpec<F: Scalar> {
    /// Power δ > 0 of the recursion; 1 and 2 are special-cased for speed.
    pub delta: F,
    /// Per-source-series lag sets 𝒥.
    pub lag_sets: LagIndexSets,
    /// Add gated `1{ε<0}|ε|^δ` regressors (threshold ARCH).
    pub threshold: bool,
    /// Lower bound for the fitted scales; `None` derives `10⁻⁴ × RMS(ε)` of
    /// the target series.
    pub sigma_floor: Option<F>,
}

impl<F: Scalar> VolatilitySpec<F> {
    /// Spec with an automatic floor.
    pub fn new(delta: F, lag_sets: LagIndexSets, threshold: bool) -> Self {
        Self {
            delta,
            lag_sets,
            threshold,
            sigma_floor: None,
        }
    }

    /// Single-series spec with lags `1..=max_lag`.
    pub fn univariate(delta: F, max_lag: usize, threshold: bool) -> Result<Self> {
        Ok(Self::new(delta, LagIndexSets::uniform(1, max_lag)?, threshold))
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > F::zero() && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if let Some(fl) = self.sigma_floor {
            if !(fl > F::zero() && fl.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "sigma floor must be positive, got {fl}"
                )));
            }
        }
        Ok(())
    }
}

/// A residual series anchored on the absolute time axis: `values[i]` is the
/// residual at time `start + i`. Mean fits on lagged designs produce series
/// that begin at their largest lag, and the anchor keeps several such series
/// alignable.
#[derive(Debug, Clone)]
pub struct ResidualSeries<F: Scalar> {
    pub start: usize,
    pub values: Vec<F>,
}

impl<F: Scalar> ResidualSeries<F> {
    pub fn new(start: usize, values: Vec<F>) -> Self {
        Self { start, values }
    }

    /// Absolute time of the last observation.
    fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    /// Value at absolute time `t`.
    fn at(&self, t: usize) -> F {
        self.values[t - self.start]
    }
}

/// Identity of one recursion regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VolColumn {
    Intercept,
    /// `|ε_{series,t−lag}|^δ`.
    Abs { series: usize, lag: usize },
    /// `1{ε_{series,t−lag} < 0} |ε_{series,t−lag}|^δ`.
    Gated { series: usize, lag: usize },
}

impl std::fmt::Display for VolColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VolColumn::Intercept => write!(f, "intercept"),
            VolColumn::Abs { series, lag } => write!(f, "series{series}.abs.lag{lag}"),
            VolColumn::Gated { series, lag } => write!(f, "series{series}.neg.lag{lag}"),
        }
    }
}

/// The assembled regression problem for one target series.
#[derive(Debug, Clone)]
pub struct ArchDesign<F: Scalar> {
    /// Regressors, all entries ≥ 0.
    pub a: Array2<F>,
    /// Response `|ε_t|^δ`.
    pub b: Array1<F>,
    /// Absolute time of row 0.
    pub aligned_start: usize,
    pub columns: Vec<VolColumn>,
}

/// `|x|^δ`, with the common powers short-circuited.
#[inline]
fn pow_delta<F: Scalar>(x: F, delta: F) -> F {
    if delta == F::one() {
        x.abs()
    } else if delta == F::cast(2.0) {
        x * x
    } else {
        x.abs().powf(delta)
    }
}

/// `v^{1/δ}` for `v ≥ 0`.
#[inline]
fn root_delta<F: Scalar>(v: F, delta: F) -> F {
    if delta == F::one() {
        v
    } else if delta == F::cast(2.0) {
        v.sqrt()
    } else {
        v.powf(delta.recip())
    }
}

/// Builds the recursion design for `residuals[target]`.
///
/// Rows are the absolute times where the target residual and every lagged
/// regressor exist; at least two such rows are required.
pub fn build_arch_design<F: Scalar>(
    residuals: &[ResidualSeries<F>],
    target: usize,
    spec: &VolatilitySpec<F>,
) -> Result<ArchDesign<F>> {
    spec.validate()?;
    let d = residuals.len();
    if target >= d {
        return Err(Error::InvalidParameter(format!(
            "target series {target} out of range ({d} residual series)"
        )));
    }
    if spec.lag_sets.n_series() != d {
        return Err(Error::ShapeMismatch(format!(
            "lag sets describe {} series, got {d} residual series",
            spec.lag_sets.n_series()
        )));
    }
    for (s, r) in residuals.iter().enumerate() {
        if r.values.is_empty() {
            return Err(Error::InsufficientData(format!(
                "residual series {s} is empty"
            )));
        }
        if let Some(v) = r.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("residual series {s} contains {v}")));
        }
    }

    let tgt = &residuals[target];
    let mut t0 = tgt.start;
    let mut t_end = tgt.end();
    for s in 0..d {
        for &k in spec.lag_sets.get(s) {
            t0 = t0.max(residuals[s].start + k);
            t_end = t_end.min(residuals[s].end() + k);
        }
    }
    if t_end < t0 + 1 {
        return Err(Error::InsufficientData(format!(
            "lagged alignment leaves rows {t0}..={t_end}"
        )));
    }
    let n = t_end - t0 + 1;

    let mut columns = vec![VolColumn::Intercept];
    for s in 0..d {
        for &k in spec.lag_sets.get(s) {
            columns.push(VolColumn::Abs { series: s, lag: k });
        }
    }
    if spec.threshold {
        for s in 0..d {
            for &k in spec.lag_sets.get(s) {
                columns.push(VolColumn::Gated { series: s, lag: k });
            }
        }
    }

    let p = columns.len();
    let mut a = Array2::zeros((n, p));
    let mut b = Array1::zeros(n);
    for i in 0..n {
        let t = t0 + i;
        b[i] = pow_delta(tgt.at(t), spec.delta);
        for (j, col) in columns.iter().enumerate() {
            a[(i, j)] = match *col {
                VolColumn::Intercept => F::one(),
                VolColumn::Abs { series, lag } => {
                    pow_delta(residuals[series].at(t - lag), spec.delta)
                }
                VolColumn::Gated { series, lag } => {
                    let e = residuals[series].at(t - lag);
                    if e < F::zero() {
                        pow_delta(e, spec.delta)
                    } else {
                        F::zero()
                    }
                }
            };
        }
    }
    Ok(ArchDesign {
        a,
        b,
        aligned_start: t0,
        columns,
    })
}

/// A fitted conditional-scale model.
#[derive(Debug, Clone)]
pub struct VolatilityFit<F: Scalar> {
    /// Non-negative recursion coefficients (γ-scaled; see module docs).
    pub alpha_tilde: Array1<F>,
    /// Column identities matching `alpha_tilde`.
    pub columns: Vec<VolColumn>,
    /// Fitted scales for the whole target series: `fitted_sigma[i]` belongs
    /// to absolute time `start + i`. Outside the aligned window (before the
    /// lags exist) the constant fallback `max(RMS(ε), floor)` is used.
    pub fitted_sigma: Vec<F>,
    /// Absolute time of `fitted_sigma[0]` (the target series anchor).
    pub start: usize,
    /// Absolute time where the recursion rows begin.
    pub aligned_start: usize,
    /// Empirical `mean |ε/σ̂|^δ` on the aligned sample — an estimate of
    /// `E|Z|^δ` when the recursion is well specified.
    pub gamma_hat: F,
    /// Floor actually applied.
    pub sigma_floor: F,
    /// Normalization constant `c` applied to the raw recursion output.
    pub norm_constant: F,
    /// `‖b − Aα̃‖₂` from the coefficient fit.
    pub nnls_residual_norm: F,
    /// The spec the fit was produced under.
    pub spec: VolatilitySpec<F>,
}

/// Fits the recursion of `spec` to `residuals[target]`.
pub fn fit_volatility<F: Scalar>(
    residuals: &[ResidualSeries<F>],
    target: usize,
    spec: &VolatilitySpec<F>,
) -> Result<VolatilityFit<F>> {
    let design = build_arch_design(residuals, target, spec)?;
    let tgt = &residuals[target];
    let len = tgt.values.len();

    let rms = (tgt.values.iter().map(|&e| e * e).sum::<F>() / F::of(len)).sqrt();
    if rms == F::zero() {
        return Err(Error::ZeroResidualVariance(
            "all target residuals are zero".into(),
        ));
    }
    let floor = spec.sigma_floor.unwrap_or(F::cast(1e-4) * rms);

    let sol = nnls(&design.a, &design.b)?;

    // Raw recursion output on the aligned rows. Entries are ≥ 0 because both
    // the design and the coefficients are.
    let n = design.a.nrows();
    let mut s = vec![F::zero(); n];
    for i in 0..n {
        let row = design.a.row(i);
        let mut acc = F::zero();
        for (j, &aij) in row.iter().enumerate() {
            acc += aij * sol.alpha[j];
        }
        s[i] = root_delta(acc, spec.delta);
    }

    let offset = design.aligned_start - tgt.start;
    let eps_aligned = &tgt.values[offset..offset + n];
    let (c, fitted_aligned) = normalize_with_floor(eps_aligned, &s, floor)?;

    let mut gamma = F::zero();
    for (e, f) in eps_aligned.iter().zip(&fitted_aligned) {
        gamma += pow_delta(*e / *f, spec.delta);
    }
    gamma /= F::of(n);

    let fallback = rms.max(floor);
    let mut fitted_sigma = vec![fallback; len];
    fitted_sigma[offset..offset + n].copy_from_slice(&fitted_aligned);

    Ok(VolatilityFit {
        alpha_tilde: sol.alpha,
        columns: design.columns,
        fitted_sigma,
        start: tgt.start,
        aligned_start: design.aligned_start,
        gamma_hat: gamma,
        sigma_floor: floor,
        norm_constant: c,
        nnls_residual_norm: sol.residual_norm,
        spec: spec.clone(),
    })
}

/// Finds `c > 0` such that `fitted_t = max(c·s_t, floor)` satisfies
/// `mean((ε_t/fitted_t)²) = 1` exactly.
///
/// With the floored index set `𝔉` fixed, the identity solves in closed form:
/// `c² = Σ_{t∉𝔉}(ε_t/s_t)² / (n − Σ_{t∈𝔉}(ε_t/floor)²)`. The set depends on
/// `c`, so the two are iterated to a joint fixed point.
fn normalize_with_floor<F: Scalar>(eps: &[F], s: &[F], floor: F) -> Result<(F, Vec<F>)> {
    let n = eps.len();
    let nf = F::of(n);
    let mut floored: Vec<bool> = s.iter().map(|&v| v == F::zero()).collect();
    for pass in 0..64 {
        let mut sum_free = F::zero();
        let mut sum_floor = F::zero();
        for t in 0..n {
            let e = eps[t];
            if floored[t] {
                let r = e / floor;
                sum_floor += r * r;
            } else {
                let r = e / s[t];
                sum_free += r * r;
            }
        }
        let denom = nf - sum_floor;
        if !(denom > F::zero()) || !sum_free.is_finite() {
            return Err(Error::NumericFailure {
                iteration: pass,
                msg: "scale normalization is degenerate (floor absorbs the whole sample)"
                    .into(),
            });
        }
        let c = (sum_free / denom).sqrt();
        let next: Vec<bool> = s.iter().map(|&v| c * v < floor).collect();
        if next == floored {
            let fitted = s.iter().map(|&v| (c * v).max(floor)).collect();
            return Ok((c, fitted));
        }
        floored = next;
    }
    Err(Error::NumericFailure {
        iteration: 64,
        msg: "scale normalization did not reach a stable floored set".into(),
    })
}

/// One-step-ahead scale forecast.
///
/// `recent[s]` holds the most recent residuals of series `s`, oldest first;
/// each slice must cover that series' largest lag. The forecast applies the
/// same normalization and floor as the in-sample fit.
pub fn forecast_sigma<F: Scalar>(fit: &VolatilityFit<F>, recent: &[&[F]]) -> Result<F> {
    let spec = &fit.spec;
    if recent.len() != spec.lag_sets.n_series() {
        return Err(Error::ShapeMismatch(format!(
            "{} recent-residual slices for {} series",
            recent.len(),
            spec.lag_sets.n_series()
        )));
    }
    for (s, r) in recent.iter().enumerate() {
        let need = spec.lag_sets.get(s).last().copied().unwrap_or(0);
        if r.len() < need {
            return Err(Error::InsufficientData(format!(
                "series {s}: {} recent residuals for lag {need}",
                r.len()
            )));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("recent residuals contain {v}")));
        }
    }
    let mut acc = F::zero();
    for (j, col) in fit.columns.iter().enumerate() {
        let aj = fit.alpha_tilde[j];
        if aj == F::zero() {
            continue;
        }
        let x = match *col {
            VolColumn::Intercept => F::one(),
            VolColumn::Abs { series, lag } => {
                let r = recent[series];
                pow_delta(r[r.len() - lag], spec.delta)
            }
            VolColumn::Gated { series, lag } => {
                let r = recent[series];
                let e = r[r.len() - lag];
                if e < F::zero() {
                    pow_delta(e, spec.delta)
                } else {
                    F::zero()
                }
            }
        };
        acc += aj * x;
    }
    Ok((fit.norm_constant * root_delta(acc, spec.delta)).max(fit.sigma_floor))
}
