//! Weighted ℓ₁-penalized least squares by cyclic coordinate descent.
//!
//! The objective is
//!
//! ```text
//! Σ_t w_t² (y_t − x_t'β)²  +  λ Σ_j v_j |β_j|
//! ```
//!
//! with per-observation weights `w` and per-coefficient penalty weights `v`.
//! The intercept always carries `v = 0`. Adaptive fits set `v_j =
//! |β_init,j|^{−τ}`, so coordinates whose pilot estimate is exactly zero get
//! `v_j = ∞` and are frozen at zero: they are skipped by the sweeps, excluded
//! from the penalty sum, and report zero KKT violation.
//!
//! Each coordinate update is a closed-form soft-threshold step; full sweeps
//! alternate with cheaper sweeps over the current active set, and the fit
//! counts as converged when a full sweep moves no coefficient by `tol` or
//! more.

use ndarray::{Array1, Array2};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Penalty configuration: level, adaptivity exponent, and the pilot estimate
/// the adaptive weights are derived from.
#[derive(Debug, Clone)]
pub struct PenaltySpec<F: Scalar> {
    /// Penalty level λ ≥ 0.
    pub lambda: F,
    /// Adaptive exponent τ ≥ 0; τ = 0 gives plain unit penalty weights.
    pub tau: F,
    /// Pilot coefficients (standardized scale), required when `tau > 0`.
    pub beta_init: Option<Array1<F>>,
}

impl<F: Scalar> PenaltySpec<F> {
    /// Plain lasso at level `lambda` (unit penalty weights).
    pub fn plain(lambda: F) -> Self {
        Self {
            lambda,
            tau: F::zero(),
            beta_init: None,
        }
    }

    /// Adaptive lasso: `v_j = |beta_init[j]|^{−tau}`.
    pub fn adaptive(lambda: F, tau: F, beta_init: Array1<F>) -> Self {
        Self {
            lambda,
            tau,
            beta_init: Some(beta_init),
        }
    }

    /// Same penalty shape at a different level.
    pub fn with_lambda(&self, lambda: F) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    /// Per-coefficient penalty weights for `design`: 0 for the intercept,
    /// `|β_init|^{−τ}` (∞ where the pilot is zero) otherwise.
    pub fn penalty_weights(&self, design: &Design<F>) -> Result<Vec<F>> {
        let p = design.p();
        if !(self.lambda >= F::zero() && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.tau >= F::zero() && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and non-negative, got {}",
                self.tau
            )));
        }
        let intercept = design.intercept_index();
        let mut v = vec![F::one(); p];
        if let Some(j0) = intercept {
            v[j0] = F::zero();
        }
        if self.tau > F::zero() {
            let Some(init) = &self.beta_init else {
                return Err(Error::InvalidParameter(
                    "adaptive penalty (tau > 0) needs beta_init".into(),
                ));
            };
            if init.len() != p {
                return Err(Error::ShapeMismatch(format!(
                    "beta_init has {} entries, design has {p} columns",
                    init.len()
                )));
            }
            if let Some(b) = init.iter().find(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("beta_init contains {b}")));
            }
            for (j, &b) in init.iter().enumerate() {
                if Some(j) == intercept {
                    continue;
                }
                v[j] = if b == F::zero() {
                    F::infinity()
                } else {
                    b.abs().powf(-self.tau)
                };
            }
        }
        Ok(v)
    }
}

/// Knobs of the coordinate-descent loop.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<'a, F: Scalar> {
    /// A full sweep whose largest coefficient move is below this counts as
    /// converged.
    pub tol: F,
    /// Total sweep budget (full and active-set sweeps combined).
    pub max_sweeps: usize,
    /// Starting coefficients; zero when absent.
    pub warm_start: Option<&'a Array1<F>>,
}

impl<F: Scalar> Default for SolveOptions<'_, F> {
    fn default() -> Self {
        Self {
            tol: F::cast(1e-7),
            max_sweeps: 10_000,
            warm_start: None,
        }
    }
}

/// A fitted weighted lasso.
#[derive(Debug, Clone)]
pub struct WeightedLassoFit<F: Scalar> {
    /// Coefficients on the standardized design scale.
    pub beta: Array1<F>,
    /// Penalty level the fit was produced at.
    pub lambda: F,
    /// Final objective value, recomputed from a fresh residual.
    pub objective: F,
    /// Sweeps consumed (full and active-set combined).
    pub n_sweeps: usize,
    /// Whether a full sweep fell below `tol` within the budget.
    pub converged: bool,
    /// Indices of nonzero coefficients, intercept included when nonzero.
    pub active_set: Vec<usize>,
    /// Largest stationarity-condition violation at the returned β.
    pub kkt_max_violation: F,
}

/// Static data shared by every solve against one (design, weights, penalty)
/// triple: transposed columns, their weighted copies, column energies, and
/// the penalty weights.
struct Prepared<'d, F: Scalar> {
    design: &'d Design<F>,
    xt: Array2<F>,
    uxt: Array2<F>,
    s: Vec<F>,
    v: Vec<F>,
    frozen: Vec<bool>,
}

fn prepare<'d, F: Scalar>(
    design: &'d Design<F>,
    weights: &Array1<F>,
    penalty: &PenaltySpec<F>,
) -> Result<Prepared<'d, F>> {
    let n = design.n();
    let p = design.p();
    if weights.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {n} rows",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > F::zero() && w.is_finite())) {
        return Err(Error::InvalidWeights(format!(
            "weights must be finite and strictly positive, got {w}"
        )));
    }
    let v = penalty.penalty_weights(design)?;

    // Standard layout is forced so each transposed row (one design column)
    // is a contiguous slice for the sweep kernels.
    let xt = design.x.t().as_standard_layout().into_owned();
    let mut uxt = xt.clone();
    for mut row in uxt.rows_mut() {
        for (t, e) in row.iter_mut().enumerate() {
            let w = weights[t];
            *e *= w * w;
        }
    }
    let mut s = vec![F::zero(); p];
    let mut frozen = vec![false; p];
    for j in 0..p {
        let xj = xt.row(j);
        let uxj = uxt.row(j);
        s[j] = xj
            .as_slice()
            .unwrap()
            .iter()
            .zip(uxj.as_slice().unwrap())
            .map(|(&a, &b)| a * b)
            .sum();
        // v = ∞ freezes the coordinate; a zero-energy column (possible only
        // for unstandardized external matrices) has no update direction and
        // is frozen too.
        frozen[j] = v[j].is_infinite() || s[j] == F::zero();
    }
    Ok(Prepared {
        design,
        xt,
        uxt,
        s,
        v,
        frozen,
    })
}

/// One coordinate sweep over `coords`; returns the largest |Δβ|.
fn sweep<F: Scalar>(
    prep: &Prepared<'_, F>,
    lambda: F,
    coords: &[usize],
    beta: &mut Array1<F>,
    resid: &mut [F],
) -> F {
    let mut max_delta = F::zero();
    for &j in coords {
        let xj = prep.xt.row(j);
        let xj = xj.as_slice().unwrap();
        let uxj = prep.uxt.row(j);
        let uxj = uxj.as_slice().unwrap();
        let old = beta[j];
        let mut rho = F::zero();
        for (a, r) in uxj.iter().zip(resid.iter()) {
            rho += *a * *r;
        }
        rho += prep.s[j] * old;
        let thr = lambda * prep.v[j] / F::cast(2.0);
        let new = if rho > thr {
            (rho - thr) / prep.s[j]
        } else if rho < -thr {
            (rho + thr) / prep.s[j]
        } else {
            F::zero()
        };
        if new != old {
            let delta = new - old;
            for (r, &x) in resid.iter_mut().zip(xj) {
                *r -= delta * x;
            }
            beta[j] = new;
            max_delta = max_delta.max(delta.abs());
        }
    }
    max_delta
}

fn objective_with_u<F: Scalar>(
    prep: &Prepared<'_, F>,
    u: &[F],
    lambda: F,
    beta: &Array1<F>,
    resid: &[F],
) -> F {
    let mut loss = F::zero();
    for (&ut, &rt) in u.iter().zip(resid) {
        loss += ut * rt * rt;
    }
    let mut pen = F::zero();
    for (j, &b) in beta.iter().enumerate() {
        if prep.frozen[j] || prep.v[j] == F::zero() {
            continue;
        }
        pen += prep.v[j] * b.abs();
    }
    loss + lambda * pen
}

fn fresh_residual<F: Scalar>(prep: &Prepared<'_, F>, beta: &Array1<F>) -> Vec<F> {
    let mut resid: Vec<F> = prep.design.y.to_vec();
    for j in 0..prep.design.p() {
        let b = beta[j];
        if b == F::zero() {
            continue;
        }
        let xj = prep.xt.row(j);
        for (r, &x) in resid.iter_mut().zip(xj.as_slice().unwrap()) {
            *r -= b * x;
        }
    }
    resid
}

fn cd_solve<F: Scalar>(
    prep: &Prepared<'_, F>,
    u: &[F],
    lambda: F,
    beta: &mut Array1<F>,
    tol: F,
    max_sweeps: usize,
) -> (usize, bool) {
    let p = prep.design.p();
    for (j, b) in beta.iter_mut().enumerate() {
        if prep.frozen[j] {
            *b = F::zero();
        }
    }
    let mut resid = fresh_residual(prep, beta);
    let all_coords: Vec<usize> = (0..p).filter(|&j| !prep.frozen[j]).collect();

    #[cfg(debug_assertions)]
    let mut prev_obj = objective_with_u(prep, u, lambda, beta, &resid);
    #[cfg(not(debug_assertions))]
    let _ = u;

    let mut n_sweeps = 0usize;
    let mut converged = false;
    while n_sweeps < max_sweeps {
        let delta = sweep(prep, lambda, &all_coords, beta, &mut resid);
        n_sweeps += 1;

        #[cfg(debug_assertions)]
        {
            let obj = objective_with_u(prep, u, lambda, beta, &resid);
            let slack = F::epsilon().sqrt() * (F::one() + prev_obj.abs());
            debug_assert!(
                obj <= prev_obj + slack,
                "objective rose across a sweep: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }

        if delta < tol {
            converged = true;
            break;
        }
        // Cheap sweeps over the coordinates that are currently nonzero until
        // they stabilize, then confirm with another full sweep.
        let active: Vec<usize> = all_coords
            .iter()
            .copied()
            .filter(|&j| beta[j] != F::zero())
            .collect();
        if active.is_empty() {
            continue;
        }
        while n_sweeps < max_sweeps {
            let da = sweep(prep, lambda, &active, beta, &mut resid);
            n_sweeps += 1;
            if da < tol {
                break;
            }
        }
    }
    (n_sweeps, converged)
}

fn finalize<F: Scalar>(
    prep: &Prepared<'_, F>,
    u: &[F],
    lambda: F,
    beta: Array1<F>,
    n_sweeps: usize,
    converged: bool,
) -> WeightedLassoFit<F> {
    let resid = fresh_residual(prep, &beta);
    let objective = objective_with_u(prep, u, lambda, &beta, &resid);
    let kkt_max_violation = kkt_violation(prep, lambda, &beta, &resid);
    let active_set = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != F::zero())
        .map(|(j, _)| j)
        .collect();
    WeightedLassoFit {
        beta,
        lambda,
        objective,
        n_sweeps,
        converged,
        active_set,
        kkt_max_violation,
    }
}

/// Largest violation of the stationarity conditions at `beta`:
/// active coordinates must satisfy `g_j = (λ/2) v_j sign(β_j)`, inactive ones
/// `|g_j| ≤ (λ/2) v_j`, with `g_j = Σ_t u_t x_{tj} r_t`. Frozen coordinates
/// contribute nothing.
fn kkt_violation<F: Scalar>(
    prep: &Prepared<'_, F>,
    lambda: F,
    beta: &Array1<F>,
    resid: &[F],
) -> F {
    let mut worst = F::zero();
    for j in 0..prep.design.p() {
        if prep.frozen[j] {
            continue;
        }
        let uxj = prep.uxt.row(j);
        let mut g = F::zero();
        for (a, r) in uxj.as_slice().unwrap().iter().zip(resid) {
            g += *a * *r;
        }
        let thr = lambda * prep.v[j] / F::cast(2.0);
        let viol = if beta[j] > F::zero() {
            (g - thr).abs()
        } else if beta[j] < F::zero() {
            (g + thr).abs()
        } else {
            (g.abs() - thr).max(F::zero())
        };
        worst = worst.max(viol);
    }
    worst
}

/// Fits the weighted lasso on `design` at `penalty.lambda`.
pub fn solve_weighted_lasso<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    penalty: &PenaltySpec<F>,
    opts: SolveOptions<'_, F>,
) -> Result<WeightedLassoFit<F>> {
    let prep = prepare(design, weights, penalty)?;
    let u: Vec<F> = weights.iter().map(|&w| w * w).collect();
    let mut beta = match opts.warm_start {
        Some(b0) => {
            if b0.len() != design.p() {
                return Err(Error::ShapeMismatch(format!(
                    "warm start has {} entries, design has {} columns",
                    b0.len(),
                    design.p()
                )));
            }
            if let Some(b) = b0.iter().find(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("warm start contains {b}")));
            }
            b0.clone()
        }
        None => Array1::zeros(design.p()),
    };
    let (n_sweeps, converged) = cd_solve(&prep, &u, penalty.lambda, &mut beta, opts.tol, opts.max_sweeps);
    Ok(finalize(&prep, &u, penalty.lambda, beta, n_sweeps, converged))
}

/// Fits the weighted lasso along a λ grid, warm-starting each fit from the
/// previous one. Grids should be passed in descending order so supports grow
/// as the path proceeds; fits are returned in grid order.
pub fn lasso_path<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    penalty: &PenaltySpec<F>,
    lambdas: &[F],
    opts: SolveOptions<'_, F>,
) -> Result<Vec<WeightedLassoFit<F>>> {
    let prep = prepare(design, weights, penalty)?;
    let u: Vec<F> = weights.iter().map(|&w| w * w).collect();
    let mut beta: Array1<F> = match opts.warm_start {
        Some(b0) => b0.clone(),
        None => Array1::zeros(design.p()),
    };
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda >= F::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda grid entry {lambda} must be finite and non-negative"
            )));
        }
        let (n_sweeps, converged) = cd_solve(&prep, &u, lambda, &mut beta, opts.tol, opts.max_sweeps);
        fits.push(finalize(&prep, &u, lambda, beta.clone(), n_sweeps, converged));
    }
    Ok(fits)
}

/// Stationarity diagnostics for an externally supplied coefficient vector.
pub fn check_kkt<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    penalty: &PenaltySpec<F>,
    beta: &Array1<F>,
) -> Result<F> {
    if beta.len() != design.p() {
        return Err(Error::ShapeMismatch(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            design.p()
        )));
    }
    let prep = prepare(design, weights, penalty)?;
    let resid = fresh_residual(&prep, beta);
    Ok(kkt_violation(&prep, penalty.lambda, beta, &resid))
}

/// Objective value `Σ w²(y − Xβ)² + λ Σ v|β|` at an arbitrary β.
pub fn objective<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    penalty: &PenaltySpec<F>,
    beta: &Array1<F>,
) -> Result<F> {
    let prep = prepare(design, weights, penalty)?;
    let u: Vec<F> = weights.iter().map(|&w| w * w).collect();
    for (j, &b) in beta.iter().enumerate() {
        if prep.frozen[j] && b != F::zero() {
            return Ok(F::infinity());
        }
    }
    let resid = fresh_residual(&prep, beta);
    Ok(objective_with_u(&prep, &u, penalty.lambda, beta, &resid))
}

/// Grid of penalty levels `2^g` with `len` exponents spaced evenly from
/// `g_hi` down to `g_lo` (endpoints exact), descending.
pub fn lambda_grid<F: Scalar>(g_hi: f64, g_lo: f64, len: usize) -> Result<Vec<F>> {
    if len == 0 {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if !(g_hi.is_finite() && g_lo.is_finite() && g_hi >= g_lo) {
        return Err(Error::InvalidParameter(format!(
            "grid exponents must be finite with g_hi ≥ g_lo, got {g_hi}..{g_lo}"
        )));
    }
    let mut grid = Vec::with_capacity(len);
    for i in 0..len {
        let g = if i == 0 {
            g_hi
        } else if i == len - 1 {
            g_lo
        } else {
            g_hi + (g_lo - g_hi) * i as f64 / (len - 1) as f64
        };
        grid.push(F::cast(g.exp2()));
    }
    Ok(grid)
}

/// The default 100-point grid `2^{−4}` down to `2^{−18}`.
pub fn default_lambda_grid<F: Scalar>() -> Vec<F> {
    lambda_grid(-4.0, -18.0, 100).expect("default grid parameters are valid")
}
