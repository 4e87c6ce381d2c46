//! The iteratively reweighted fitting loop that ties the pieces together.
//!
//! One fit alternates two estimators until the volatility profile settles:
//!
//! 1. start with unit observation weights `w ≡ 1`;
//! 2. solve the weighted lasso for the conditional-mean coefficients;
//! 3. fit the volatility recursion to the resulting residuals;
//! 4. set the next weights to `1/σ̂_t` and repeat;
//! 5. stop when `‖σ̂^[k] − σ̂^[k−1]‖` falls below `stop_epsilon` or after
//!    `k_max` rounds. For the very first comparison `σ̂^[0]` is the constant
//!    vector equal to the root mean square of the round-1 residuals.
//!
//! Every round is recorded, so callers can inspect the whole trajectory;
//! `final_*` fields duplicate the last record for convenience.
//!
//! # Penalty levels
//!
//! λ values in [`LambdaPolicy`] (and pilot levels in [`BetaInit::Lasso`]) are
//! *per observation, per unit weight*: before each solve the driver converts
//! a level λ to the summed-objective penalty `λ · n · mean(w²)`. Round one
//! (`w ≡ 1`) therefore solves at `λ·n`, and later rounds rescale with the
//! current weights. This keeps one grid meaningful across sample sizes and
//! across rounds — by the `c·w ↔ λ/c²` equivalence of the solver it is the
//! same as normalizing each round's weights to unit root mean square — so the
//! largest grid levels genuinely empty the model while the smallest approach
//! the unpenalized fit, whatever the data scale. Each recorded round keeps
//! both numbers: `lambda` is the level, `lambda_effective` the penalty the
//! solver actually saw.
//!
//! [`multivariate_fit`] runs one such loop per target series over a shared
//! panel. The loops are synchronized at an iteration barrier: after all mean
//! fits of round `k`, each series' volatility design is built from *every*
//! series' current residuals (cross-series recursion terms). A series that
//! fails mid-loop keeps its last residuals in the shared pool and is reported
//! as an error without aborting the others.

use ndarray::Array1;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::selection::{select_lambda, selection_report, Criterion, SelectionReport};
use crate::volatility::{fit_volatility, ResidualSeries, VolatilityFit, VolatilitySpec};
use crate::wlasso::{
    default_lambda_grid, lasso_path, solve_weighted_lasso, PenaltySpec, SolveOptions,
    WeightedLassoFit,
};
use crate::{LagIndexSets, SeriesPanel};

/// How λ is chosen in each round.
#[derive(Debug, Clone)]
pub enum LambdaPolicy<F: Scalar> {
    /// One fixed level for every round (the Monte Carlo studies run this way,
    /// sweeping the level externally).
    Fixed(F),
    /// Solve the whole descending path each round and keep the winner under
    /// `criterion`. Re-selecting per round lets the penalty adapt as the
    /// weights change.
    Grid {
        lambdas: Vec<F>,
        criterion: Criterion,
    },
}

/// Norm applied to `σ̂^[k] − σ̂^[k−1]` in the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopNorm {
    MaxAbs,
    Euclidean,
}

/// Why the loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The σ̂ difference fell below `stop_epsilon`.
    EpsilonMet,
    /// The round budget ran out first.
    KMaxReached,
}

/// Where the pilot coefficients for the adaptive penalty come from. Only
/// consulted when `tau > 0`.
#[derive(Debug, Clone)]
pub enum BetaInit<F: Scalar> {
    /// No pilot — valid only with `tau == 0`.
    None,
    /// Ordinary least squares on the unweighted design (requires p < n).
    Ols,
    /// Plain lasso (τ = 0, unit weights) at the given level, or BIC-selected
    /// on the default grid when absent.
    Lasso { lambda: Option<F> },
}

/// Everything one reweighted fit needs besides the design itself.
#[derive(Debug, Clone)]
pub struct IrwalConfig<F: Scalar> {
    pub lambda_policy: LambdaPolicy<F>,
    /// Adaptive-penalty exponent; 0 disables the pilot machinery.
    pub tau: F,
    pub beta_init: BetaInit<F>,
    /// Volatility recursion fitted to each round's residuals.
    pub vol: VolatilitySpec<F>,
    /// Round budget (≥ 1).
    pub k_max: usize,
    /// Stopping threshold; `None` resolves to 1e-3 × the root mean square of
    /// the round-1 residuals once that scale is known.
    pub stop_epsilon: Option<F>,
    pub stop_norm: StopNorm,
    /// Coordinate-descent convergence tolerance for every lasso solve.
    pub solver_tol: F,
    pub max_sweeps: usize,
    /// Score λ candidates on weighted residuals (`true`, matching the solver
    /// objective) or raw ones.
    pub weighted_ic: bool,
}

impl<F: Scalar> IrwalConfig<F> {
    /// Defaults: τ = 0, three rounds, max-abs stopping at the data-driven
    /// threshold, solver tolerance 1e-7.
    pub fn new(lambda_policy: LambdaPolicy<F>, vol: VolatilitySpec<F>) -> Self {
        Self {
            lambda_policy,
            tau: F::zero(),
            beta_init: BetaInit::None,
            vol,
            k_max: 3,
            stop_epsilon: None,
            stop_norm: StopNorm::MaxAbs,
            solver_tol: F::cast(1e-7),
            max_sweeps: 10_000,
            weighted_ic: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidParameter(
                "k_max must be at least 1".into(),
            ));
        }
        if let Some(eps) = self.stop_epsilon {
            if !(eps > F::zero() && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "stop_epsilon must be positive and finite, got {eps}"
                )));
            }
        }
        if !(self.tau >= F::zero() && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and non-negative, got {}",
                self.tau
            )));
        }
        if self.tau > F::zero() && matches!(self.beta_init, BetaInit::None) {
            return Err(Error::InvalidParameter(
                "tau > 0 needs pilot coefficients; set beta_init to Ols or Lasso".into(),
            ));
        }
        if !(self.solver_tol > F::zero() && self.solver_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "solver_tol must be positive and finite, got {}",
                self.solver_tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        match &self.lambda_policy {
            LambdaPolicy::Fixed(l) => {
                if !(*l >= F::zero() && l.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "fixed lambda must be finite and non-negative, got {l}"
                    )));
                }
            }
            LambdaPolicy::Grid { lambdas, .. } => {
                if lambdas.is_empty() {
                    return Err(Error::InvalidParameter("empty lambda grid".into()));
                }
            }
        }
        Ok(())
    }
}

/// One recorded round.
#[derive(Debug, Clone)]
pub struct IrwalIteration<F: Scalar> {
    /// Mean coefficients on the standardized design scale.
    pub beta_std: Array1<F>,
    /// Mean coefficients on the original regressor scale.
    pub beta: Array1<F>,
    /// Observation weights used by this round's lasso solve (all ones in
    /// round 1, `1/σ̂^[k−1]` afterwards).
    pub weights: Array1<F>,
    /// Penalty level used (fixed, or this round's criterion winner).
    pub lambda: F,
    /// Summed-objective penalty handed to the solver:
    /// `lambda · n · mean(weights²)`. Re-solving at this value with this
    /// round's `weights` reproduces `beta_std`.
    pub lambda_effective: F,
    /// Nonzero penalized coefficients (intercept excluded).
    pub n_active: usize,
    /// Weighted-lasso objective (at `lambda_effective`) at the returned
    /// coefficients.
    pub objective: F,
    pub kkt_max_violation: F,
    pub solver_converged: bool,
    /// Volatility fit to this round's residuals; its `fitted_sigma` is
    /// `σ̂^[k]`.
    pub vol: VolatilityFit<F>,
    /// `‖σ̂^[k] − σ̂^[k−1]‖` under the configured norm.
    pub sigma_diff: F,
    /// Path scores when λ was grid-selected.
    pub selection: Option<SelectionReport<F>>,
}

impl<F: Scalar> IrwalIteration<F> {
    /// Fitted scales `σ̂^[k]`, one per design row.
    pub fn sigma_hat(&self) -> &[F] {
        &self.vol.fitted_sigma
    }
}

/// Full trace of one reweighted fit.
#[derive(Debug, Clone)]
pub struct IrwalResult<F: Scalar> {
    /// Round records in order; `iterations.len()` is the stopping round.
    pub iterations: Vec<IrwalIteration<F>>,
    pub stop_reason: StopReason,
    /// Threshold actually applied (resolved from the round-1 residual scale
    /// when the config left it data-driven).
    pub stop_epsilon: F,
    /// Last round's coefficients on the original scale.
    pub final_beta: Array1<F>,
    /// Last round's coefficients on the standardized scale.
    pub final_beta_std: Array1<F>,
    /// Last round's fitted scales.
    pub final_sigma: Array1<F>,
}

impl<F: Scalar> IrwalResult<F> {
    /// Number of rounds performed.
    pub fn stopped_at(&self) -> usize {
        self.iterations.len()
    }

    /// The last recorded round.
    pub fn last(&self) -> &IrwalIteration<F> {
        self.iterations.last().expect("a result holds at least one round")
    }
}

fn sigma_diff_norm<F: Scalar>(cur: &[F], prev: impl Fn(usize) -> F, norm: StopNorm) -> F {
    match norm {
        StopNorm::MaxAbs => cur
            .iter()
            .enumerate()
            .map(|(i, &s)| (s - prev(i)).abs())
            .fold(F::zero(), F::max),
        StopNorm::Euclidean => cur
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let d = s - prev(i);
                d * d
            })
            .sum::<F>()
            .sqrt(),
    }
}

fn resolve_pilot<F: Scalar>(design: &Design<F>, cfg: &IrwalConfig<F>) -> Result<Option<Array1<F>>> {
    if cfg.tau == F::zero() {
        return Ok(None);
    }
    let ones = Array1::ones(design.n());
    let opts = SolveOptions {
        tol: cfg.solver_tol,
        max_sweeps: cfg.max_sweeps,
        warm_start: None,
    };
    match &cfg.beta_init {
        // validate() rejects this combination up front.
        BetaInit::None => unreachable!("checked by IrwalConfig::validate"),
        BetaInit::Ols => {
            if design.p() >= design.n() {
                return Err(Error::InvalidParameter(format!(
                    "least-squares pilot needs p < n, got p = {} and n = {}",
                    design.p(),
                    design.n()
                )));
            }
            let xt = design.x.t();
            let gram = xt.dot(&design.x);
            let rhs = xt.dot(&design.y);
            Ok(Some(crate::linalg::solve_dense(&gram, &rhs)?))
        }
        BetaInit::Lasso { lambda } => match lambda {
            // Pilot levels follow the same per-observation convention as the
            // main loop; the pilot always runs at unit weights.
            Some(l) => {
                let pen = PenaltySpec::plain(*l * F::of(design.n()));
                Ok(Some(solve_weighted_lasso(design, &ones, &pen, opts)?.beta))
            }
            None => {
                let grid: Vec<F> = default_lambda_grid::<F>()
                    .into_iter()
                    .map(|l| l * F::of(design.n()))
                    .collect();
                let fits = lasso_path(design, &ones, &PenaltySpec::plain(F::zero()), &grid, opts)?;
                let sel = select_lambda(design, &ones, &fits, Criterion::Bic, false)?;
                let beta = fits
                    .into_iter()
                    .nth(sel.index)
                    .expect("winner index lies inside the path")
                    .beta;
                Ok(Some(beta))
            }
        },
    }
}

/// Mean fit and volatility refit state for one target series.
struct SeriesEngine<'a, F: Scalar> {
    design: &'a Design<F>,
    cfg: &'a IrwalConfig<F>,
    penalty: PenaltySpec<F>,
    /// Previous round's standardized coefficients (fixed-λ warm start).
    warm: Option<Array1<F>>,
    /// `σ̂^[k−1]`; `None` before the first volatility fit.
    sigma_prev: Option<Vec<F>>,
    /// Root mean square of round-1 residuals (`σ̂^[0]` level), set in round 1.
    rms0: Option<F>,
    eps: Option<F>,
    iterations: Vec<IrwalIteration<F>>,
    done: bool,
    pending: Option<PendingMean<F>>,
}

/// Mean-fit output parked between the two halves of a round.
struct PendingMean<F: Scalar> {
    fit: WeightedLassoFit<F>,
    weights: Array1<F>,
    /// Penalty level in per-observation units (`fit.lambda` is the scaled
    /// solver penalty).
    lambda_level: F,
    selection: Option<SelectionReport<F>>,
    resid: Array1<F>,
}

impl<'a, F: Scalar> SeriesEngine<'a, F> {
    fn new(design: &'a Design<F>, cfg: &'a IrwalConfig<F>) -> Result<Self> {
        cfg.validate()?;
        let pilot = resolve_pilot(design, cfg)?;
        Ok(Self {
            design,
            cfg,
            penalty: PenaltySpec {
                lambda: F::zero(),
                tau: cfg.tau,
                beta_init: pilot,
            },
            warm: None,
            sigma_prev: None,
            rms0: None,
            eps: cfg.stop_epsilon,
            iterations: Vec::with_capacity(cfg.k_max),
            done: false,
            pending: None,
        })
    }

    /// Runs round `k`'s lasso solve and parks the outcome for [`vol_step`].
    /// Returns the residuals so the caller can assemble the residual panel.
    fn mean_step(&mut self, k: usize, warm_override: Option<&Array1<F>>) -> Result<&Array1<F>> {
        let weights: Array1<F> = match &self.sigma_prev {
            None => Array1::ones(self.design.n()),
            Some(s) => {
                debug_assert!(s.iter().all(|&v| v > F::zero()));
                s.iter().map(|&v| F::one() / v).collect()
            }
        };
        // Per-observation, per-unit-weight level → summed-objective penalty
        // (see the module docs): λ·n·mean(w²) = λ·Σw², which is λ·n in
        // round 1 where the weights are all ones.
        let scale = weights.iter().map(|&w| w * w).sum::<F>();
        let (fit, lambda_level, selection) = match &self.cfg.lambda_policy {
            LambdaPolicy::Fixed(lambda) => {
                let opts = SolveOptions {
                    tol: self.cfg.solver_tol,
                    max_sweeps: self.cfg.max_sweeps,
                    warm_start: warm_override.or(self.warm.as_ref()),
                };
                let fit = solve_weighted_lasso(
                    self.design,
                    &weights,
                    &self.penalty.with_lambda(*lambda * scale),
                    opts,
                )?;
                (fit, *lambda, None)
            }
            LambdaPolicy::Grid { lambdas, criterion } => {
                // The path warm-chains internally from its largest λ, which is
                // essentially all-zero territory; a cross-round warm start
                // would buy nothing here.
                let opts = SolveOptions {
                    tol: self.cfg.solver_tol,
                    max_sweeps: self.cfg.max_sweeps,
                    warm_start: None,
                };
                let scaled: Vec<F> = lambdas.iter().map(|&l| l * scale).collect();
                let fits = lasso_path(self.design, &weights, &self.penalty, &scaled, opts)?;
                let mut report =
                    selection_report(self.design, &weights, &fits, self.cfg.weighted_ic)?;
                // Report the levels, not the internal solver penalties.
                for sel in report.chosen.iter_mut() {
                    sel.lambda = lambdas[sel.index];
                }
                let idx = report.winner(*criterion).index;
                let fit = fits
                    .into_iter()
                    .nth(idx)
                    .expect("winner index lies inside the path");
                (fit, lambdas[idx], Some(report))
            }
        };
        let resid = &self.design.y - &self.design.x.dot(&fit.beta);
        if !resid.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericFailure {
                iteration: k,
                msg: "non-finite residuals after the mean fit".into(),
            });
        }
        self.pending = Some(PendingMean {
            fit,
            weights,
            lambda_level,
            selection,
            resid,
        });
        Ok(&self.pending.as_ref().expect("just set").resid)
    }

    /// Standardized coefficients and residuals parked by [`mean_step`].
    fn pending_view(&self) -> (&Array1<F>, &Array1<F>) {
        let p = self.pending.as_ref().expect("mean_step precedes pending_view");
        (&p.fit.beta, &p.resid)
    }

    /// Completes round `k`: fits the volatility recursion on the shared
    /// residual panel, records the round, and updates the stopping state.
    fn vol_step(&mut self, k: usize, panel: &[ResidualSeries<F>], target: usize) -> Result<()> {
        let pending = self.pending.take().expect("mean_step precedes vol_step");
        let vol = fit_volatility(panel, target, &self.cfg.vol)?;
        let n = self.design.n();
        debug_assert_eq!(vol.fitted_sigma.len(), n);
        if self.rms0.is_none() {
            let ms = pending.resid.iter().map(|&r| r * r).sum::<F>() / F::of(n);
            let rms = ms.sqrt();
            if !(rms.is_finite() && rms > F::zero()) {
                return Err(Error::ZeroResidualVariance(
                    "round-1 residuals have no scale to calibrate the stopping rule".into(),
                ));
            }
            self.rms0 = Some(rms);
            if self.eps.is_none() {
                self.eps = Some(F::cast(1e-3) * rms);
            }
        }
        let diff = match &self.sigma_prev {
            Some(prev) => sigma_diff_norm(&vol.fitted_sigma, |i| prev[i], self.cfg.stop_norm),
            None => {
                let rms0 = self.rms0.expect("set above");
                sigma_diff_norm(&vol.fitted_sigma, |_| rms0, self.cfg.stop_norm)
            }
        };
        if !vol.fitted_sigma.iter().all(|v| v.is_finite()) || !diff.is_finite() {
            return Err(Error::NumericFailure {
                iteration: k,
                msg: "non-finite fitted scales".into(),
            });
        }
        let beta = self.design.destandardize_coefficients(&pending.fit.beta);
        let intercept = self.design.intercept_index();
        let n_active = pending
            .fit
            .active_set
            .iter()
            .filter(|&&j| Some(j) != intercept)
            .count();
        self.sigma_prev = Some(vol.fitted_sigma.clone());
        self.warm = Some(pending.fit.beta.clone());
        self.iterations.push(IrwalIteration {
            beta_std: pending.fit.beta,
            beta,
            weights: pending.weights,
            lambda: pending.lambda_level,
            lambda_effective: pending.fit.lambda,
            n_active,
            objective: pending.fit.objective,
            kkt_max_violation: pending.fit.kkt_max_violation,
            solver_converged: pending.fit.converged,
            vol,
            sigma_diff: diff,
            selection: pending.selection,
        });
        if diff < self.eps.expect("resolved in round 1") {
            self.done = true;
        }
        Ok(())
    }

    fn finish(self) -> Result<IrwalResult<F>> {
        let last = self
            .iterations
            .last()
            .ok_or_else(|| Error::InvalidParameter("no rounds were run".into()))?;
        let final_beta = last.beta.clone();
        let final_beta_std = last.beta_std.clone();
        let final_sigma = Array1::from(last.vol.fitted_sigma.clone());
        Ok(IrwalResult {
            stop_reason: if self.done {
                StopReason::EpsilonMet
            } else {
                StopReason::KMaxReached
            },
            stop_epsilon: self.eps.expect("resolved in round 1"),
            final_beta,
            final_beta_std,
            final_sigma,
            iterations: self.iterations,
        })
    }
}

/// Runs the reweighted loop on one design.
///
/// `residual_panel_builder` maps each round's `(beta_std, residuals)` to the
/// residual series the volatility fit should see, plus the index of the
/// target series within them. Univariate callers want
/// [`irwal_fit_univariate`]; the builder exists so residuals of *other*
/// series can enter the volatility design (see [`multivariate_fit`]).
pub fn irwal_fit<F, B>(
    design: &Design<F>,
    mut residual_panel_builder: B,
    cfg: &IrwalConfig<F>,
) -> Result<IrwalResult<F>>
where
    F: Scalar,
    B: FnMut(&Array1<F>, &Array1<F>) -> Result<(Vec<ResidualSeries<F>>, usize)>,
{
    irwal_fit_warm(design, &mut residual_panel_builder, cfg, None)
}

/// [`irwal_fit`] with an explicit warm start for the first round's solve —
/// the Monte Carlo harness chains fits across a λ grid this way.
pub(crate) fn irwal_fit_warm<F: Scalar>(
    design: &Design<F>,
    residual_panel_builder: &mut dyn FnMut(
        &Array1<F>,
        &Array1<F>,
    ) -> Result<(Vec<ResidualSeries<F>>, usize)>,
    cfg: &IrwalConfig<F>,
    warm0: Option<&Array1<F>>,
) -> Result<IrwalResult<F>> {
    let mut eng = SeriesEngine::new(design, cfg)?;
    for k in 1..=cfg.k_max {
        eng.mean_step(k, if k == 1 { warm0 } else { None })?;
        let (beta, resid) = eng.pending_view();
        let (panel, target) = residual_panel_builder(beta, resid)?;
        eng.vol_step(k, &panel, target)?;
        if eng.done {
            break;
        }
    }
    eng.finish()
}

/// [`irwal_fit`] over the design's own residuals only — the usual
/// single-series estimator. `cfg.vol` must describe exactly one series.
pub fn irwal_fit_univariate<F: Scalar>(
    design: &Design<F>,
    cfg: &IrwalConfig<F>,
) -> Result<IrwalResult<F>> {
    irwal_fit_univariate_warm(design, cfg, None)
}

pub(crate) fn irwal_fit_univariate_warm<F: Scalar>(
    design: &Design<F>,
    cfg: &IrwalConfig<F>,
    warm0: Option<&Array1<F>>,
) -> Result<IrwalResult<F>> {
    let start = design.max_lag;
    irwal_fit_warm(
        design,
        &mut |_beta: &Array1<F>, resid: &Array1<F>| {
            Ok((vec![ResidualSeries::new(start, resid.to_vec())], 0))
        },
        cfg,
        warm0,
    )
}

/// Fits every series of `panel` as a target, one reweighted loop each, over
/// a common regressor pool built from `mean_lags` (which must cover all
/// series of the panel, as must each config's volatility lag sets).
///
/// Loops advance in lockstep: after every series has finished round `k`'s
/// mean fit, each volatility design is built from the whole panel's current
/// residuals. A series whose rounds are exhausted (or that has stopped, or
/// failed) keeps contributing its most recent residuals. Per-series errors
/// land in the corresponding slot without stopping the rest; the outer error
/// covers panel-level problems only.
pub fn multivariate_fit<F: Scalar>(
    panel: &SeriesPanel<F>,
    mean_lags: &LagIndexSets,
    cfgs: &[IrwalConfig<F>],
) -> Result<Vec<Result<IrwalResult<F>>>> {
    let d = panel.n_series();
    if mean_lags.n_series() != d {
        return Err(Error::InvalidLagSet(format!(
            "mean lag sets describe {} series, panel has {d}",
            mean_lags.n_series()
        )));
    }
    if cfgs.len() != d {
        return Err(Error::InvalidParameter(format!(
            "{} configs for {d} series",
            cfgs.len()
        )));
    }
    for (i, cfg) in cfgs.iter().enumerate() {
        if cfg.vol.lag_sets.n_series() != d {
            return Err(Error::InvalidLagSet(format!(
                "volatility lag sets of series {i} describe {} series, panel has {d}",
                cfg.vol.lag_sets.n_series()
            )));
        }
    }
    let designs: Vec<Design<F>> = (0..d)
        .map(|i| Design::build_ar_design(panel, i, mean_lags))
        .collect::<Result<_>>()?;
    let max_lag = designs[0].max_lag;

    let mut engines: Vec<Result<SeriesEngine<'_, F>>> = designs
        .iter()
        .zip(cfgs)
        .map(|(design, cfg)| SeriesEngine::new(design, cfg))
        .collect();
    // Most recent residuals per series, feeding everyone's volatility design.
    // Before a series' first mean fit this is its raw target (β = 0).
    let mut latest: Vec<Vec<F>> = designs.iter().map(|design| design.y.to_vec()).collect();

    let k_cap = cfgs.iter().map(|c| c.k_max).max().expect("d >= 1");
    for k in 1..=k_cap {
        let live = |eng: &SeriesEngine<'_, F>| !eng.done && k <= eng.cfg.k_max;
        let mut stepped = vec![false; d];
        for i in 0..d {
            let Ok(eng) = &mut engines[i] else { continue };
            if !live(eng) {
                continue;
            }
            match eng.mean_step(k, None) {
                Ok(resid) => {
                    latest[i] = resid.to_vec();
                    stepped[i] = true;
                }
                Err(e) => engines[i] = Err(e),
            }
        }
        let res_panel: Vec<ResidualSeries<F>> = latest
            .iter()
            .map(|r| ResidualSeries::new(max_lag, r.clone()))
            .collect();
        for i in 0..d {
            if !stepped[i] {
                continue;
            }
            let Ok(eng) = &mut engines[i] else { continue };
            if let Err(e) = eng.vol_step(k, &res_panel, i) {
                engines[i] = Err(e);
            }
        }
        let any_live = engines
            .iter()
            .any(|e| matches!(e, Ok(eng) if !eng.done && k < eng.cfg.k_max));
        if !any_live {
            break;
        }
    }
    Ok(engines
        .into_iter()
        .map(|e| e.and_then(SeriesEngine::finish))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_path, DgpSpec, SupportRule, VolKind};
    use crate::wlasso::lambda_grid;
    use ndarray::Array2;

    /// AR(1) with coefficient exactly 0.5: the lag-decay formula gives
    /// mass·(1/φ − 1)·φ^√1 = 1.0·(2 − 1)·0.5 over the single support lag.
    fn ar1_spec(n: usize, vol: VolKind<f64>, seed: u64) -> DgpSpec<f64> {
        DgpSpec {
            n,
            burn_in: 200,
            phi: 0.5,
            mass: 1.0,
            support: SupportRule::Explicit(vec![1]),
            vol,
            seed,
            stream: 0,
        }
    }

    fn ar1_design(n: usize, vol: VolKind<f64>, seed: u64, max_lag: usize) -> Design<f64> {
        let path = simulate_path(&ar1_spec(n, vol, seed)).unwrap();
        let panel = SeriesPanel::univariate(path.y, "y").unwrap();
        let lags = LagIndexSets::univariate((1..=max_lag).collect()).unwrap();
        Design::build_ar_design(&panel, 0, &lags).unwrap()
    }

    fn fixed_cfg(lambda: f64, vol_max_lag: usize) -> IrwalConfig<f64> {
        IrwalConfig::new(
            LambdaPolicy::Fixed(lambda),
            VolatilitySpec::univariate(1.0, vol_max_lag, false).unwrap(),
        )
    }

    #[test]
    fn k_max_one_matches_plain_weighted_lasso() {
        let design = ar1_design(400, VolKind::Constant(1.0), 7, 3);
        let mut cfg = fixed_cfg(2f64.powi(-8), 2);
        cfg.k_max = 1;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        assert_eq!(res.stopped_at(), 1);
        let it = &res.iterations[0];
        assert!(it.weights.iter().all(|&w| w == 1.0));

        assert_eq!(it.lambda, 2f64.powi(-8));
        assert_eq!(it.lambda_effective, 2f64.powi(-8) * design.n() as f64);

        let ones = Array1::ones(design.n());
        let direct = solve_weighted_lasso(
            &design,
            &ones,
            &PenaltySpec::plain(it.lambda_effective),
            SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(it.beta_std.as_slice().unwrap(), direct.beta.as_slice().unwrap());
        assert_eq!(res.final_beta_std.as_slice().unwrap(), direct.beta.as_slice().unwrap());
    }

    #[test]
    fn tiny_epsilon_forces_exactly_three_rounds() {
        let path = simulate_path(&DgpSpec {
            n: 600,
            burn_in: 200,
            phi: 0.85,
            mass: 0.8,
            support: SupportRule::Explicit(vec![1, 4]),
            vol: VolKind::arch_default(),
            seed: 11,
            stream: 0,
        })
        .unwrap();
        let panel = SeriesPanel::univariate(path.y, "y").unwrap();
        let lags = LagIndexSets::univariate((1..=10).collect()).unwrap();
        let design = Design::build_ar_design(&panel, 0, &lags).unwrap();

        let grid: Vec<f64> = lambda_grid(-4.0, -18.0, 25).unwrap();
        let mut cfg = IrwalConfig::new(
            LambdaPolicy::Grid {
                lambdas: grid.clone(),
                criterion: Criterion::Bic,
            },
            VolatilitySpec::univariate(1.0, 2, false).unwrap(),
        );
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        assert_eq!(res.stopped_at(), 3);
        assert_eq!(res.stop_reason, StopReason::KMaxReached);
        for it in &res.iterations {
            let report = it.selection.as_ref().expect("grid policy records scores");
            assert_eq!(report.winner(Criterion::Bic).lambda, it.lambda);
            assert!(grid.contains(&it.lambda));
            let scale: f64 = it.weights.iter().map(|w| w * w).sum();
            assert_eq!(it.lambda_effective, it.lambda * scale);
        }
    }

    #[test]
    fn weights_are_inverse_previous_sigma() {
        let design = ar1_design(600, VolKind::arch_default(), 3, 4);
        let mut cfg = fixed_cfg(2f64.powi(-9), 2);
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        assert_eq!(res.stopped_at(), 3);
        assert!(res.iterations[0].weights.iter().all(|&w| w == 1.0));
        for k in 1..3 {
            let prev_sigma = res.iterations[k - 1].sigma_hat();
            let w = &res.iterations[k].weights;
            assert_eq!(w.len(), prev_sigma.len());
            for i in 0..w.len() {
                assert_eq!(w[i], 1.0 / prev_sigma[i]);
                assert!(w[i] > 0.0);
            }
        }
    }

    #[test]
    fn recorded_rounds_can_be_resolved() {
        let design = ar1_design(500, VolKind::arch_default(), 19, 4);
        let grid: Vec<f64> = lambda_grid(-5.0, -14.0, 10).unwrap();
        let mut cfg = IrwalConfig::new(
            LambdaPolicy::Grid {
                lambdas: grid,
                criterion: Criterion::Bic,
            },
            VolatilitySpec::univariate(1.0, 2, false).unwrap(),
        );
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;
        cfg.solver_tol = 1e-9;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        for it in &res.iterations {
            let refit = solve_weighted_lasso(
                &design,
                &it.weights,
                &PenaltySpec::plain(it.lambda_effective),
                SolveOptions {
                    tol: 1e-9,
                    max_sweeps: 10_000,
                    warm_start: None,
                },
            )
            .unwrap();
            for (a, b) in it.beta_std.iter().zip(refit.beta.iter()) {
                assert!((a - b).abs() < 1e-8, "re-solve drifted: {a} vs {b}");
            }
        }
    }

    /// On truly homoscedastic data the second round's weights are nearly
    /// constant, so its coefficients should match the first round's up to
    /// solver tolerance and weight-estimation noise. At n = 2000 that noise
    /// floor sits near 1e-4, which a 1e-4-tolerance solve absorbs; the spread
    /// between rounds stays within ten times the tolerance.
    #[test]
    fn homoscedastic_rounds_agree() {
        let mut beta_gaps = Vec::new();
        let mut sigma_gaps = Vec::new();
        for seed in 0..100 {
            let design = ar1_design(2000, VolKind::Constant(1.0), 1000 + seed, 5);
            let mut cfg = fixed_cfg(2f64.powi(-10), 2);
            cfg.stop_epsilon = Some(1e-300);
            cfg.k_max = 2;
            cfg.solver_tol = 1e-4;
            let res = irwal_fit_univariate(&design, &cfg).unwrap();
            assert_eq!(res.stopped_at(), 2);
            let gap = res.iterations[0]
                .beta_std
                .iter()
                .zip(res.iterations[1].beta_std.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            beta_gaps.push(gap);
            sigma_gaps.push(res.iterations[1].sigma_diff);
        }
        beta_gaps.sort_by(|a, b| a.total_cmp(b));
        sigma_gaps.sort_by(|a, b| a.total_cmp(b));
        let beta_med = beta_gaps[50];
        let sigma_med = sigma_gaps[50];
        assert!(
            beta_med <= 1e-3,
            "median round-2 coefficient gap {beta_med:.2e} exceeds 10x solver tol"
        );
        assert!(
            sigma_med <= 0.05,
            "median round-2 sigma change {sigma_med:.3} is not small"
        );
    }

    #[test]
    fn stabilized_sigma_stops_early() {
        let design = ar1_design(2000, VolKind::Constant(1.0), 42, 5);
        let mut cfg = fixed_cfg(2f64.powi(-10), 2);
        cfg.k_max = 5;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        assert_eq!(res.stop_reason, StopReason::EpsilonMet);
        assert!(res.stopped_at() < 5, "stopped only at {}", res.stopped_at());
        assert!(res.last().sigma_diff < res.stop_epsilon);
        // The data-driven threshold is 1e-3 x the residual scale (about 1).
        assert!(res.stop_epsilon > 5e-4 && res.stop_epsilon < 5e-3);
    }

    #[test]
    fn adaptive_penalty_requires_pilot() {
        let design = ar1_design(300, VolKind::Constant(1.0), 5, 3);
        let mut cfg = fixed_cfg(2f64.powi(-10), 2);
        cfg.tau = 1.0;
        let err = irwal_fit_univariate(&design, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "got {err}");
    }

    #[test]
    fn lasso_pilot_freezes_its_zeros() {
        let design = ar1_design(800, VolKind::Constant(1.0), 23, 6);
        let mut cfg = fixed_cfg(2f64.powi(-10), 2);
        cfg.tau = 1.0;
        cfg.beta_init = BetaInit::Lasso { lambda: None };
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();

        // Recompute the pilot the driver used: plain lasso, BIC on the
        // default grid of levels (scaled by n for the summed objective),
        // unit weights.
        let ones = Array1::ones(design.n());
        let grid: Vec<f64> = default_lambda_grid::<f64>()
            .into_iter()
            .map(|l| l * design.n() as f64)
            .collect();
        let fits = lasso_path(
            &design,
            &ones,
            &PenaltySpec::plain(0.0),
            &grid,
            SolveOptions::default(),
        )
        .unwrap();
        let sel = select_lambda(&design, &ones, &fits, Criterion::Bic, false).unwrap();
        let pilot = &fits[sel.index].beta;

        let intercept = design.intercept_index();
        let lag1 = 1; // columns are intercept-first, then lags ascending
        assert!(pilot[lag1] != 0.0, "pilot should keep the true lag");
        for it in &res.iterations {
            for j in 0..design.p() {
                if Some(j) != intercept && pilot[j] == 0.0 {
                    assert_eq!(it.beta_std[j], 0.0, "frozen coordinate {j} moved");
                }
            }
            assert!(it.beta_std[lag1] != 0.0);
        }
    }

    #[test]
    fn ols_pilot_needs_more_rows_than_columns() {
        let design = ar1_design(500, VolKind::Constant(1.0), 9, 4);
        let mut cfg = fixed_cfg(2f64.powi(-10), 2);
        cfg.tau = 0.5;
        cfg.beta_init = BetaInit::Ols;
        cfg.k_max = 1;
        let res = irwal_fit_univariate(&design, &cfg).unwrap();
        assert!(res.final_beta_std.iter().any(|&b| b != 0.0));

        // 40 rows against 61 columns: the least-squares pilot must refuse.
        let wide = ar1_design(100, VolKind::Constant(1.0), 9, 60);
        assert!(wide.p() >= wide.n());
        let err = irwal_fit_univariate(&wide, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "got {err}");
    }

    #[test]
    fn rejects_bad_configs() {
        let design = ar1_design(300, VolKind::Constant(1.0), 2, 3);
        let base = fixed_cfg(2f64.powi(-10), 2);

        let mut cfg = base.clone();
        cfg.k_max = 0;
        assert!(irwal_fit_univariate(&design, &cfg).is_err());

        let mut cfg = base.clone();
        cfg.stop_epsilon = Some(0.0);
        assert!(irwal_fit_univariate(&design, &cfg).is_err());

        let mut cfg = base.clone();
        cfg.lambda_policy = LambdaPolicy::Grid {
            lambdas: vec![],
            criterion: Criterion::Bic,
        };
        assert!(irwal_fit_univariate(&design, &cfg).is_err());

        let mut cfg = base;
        cfg.lambda_policy = LambdaPolicy::Fixed(-0.5);
        assert!(irwal_fit_univariate(&design, &cfg).is_err());
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let design = ar1_design(600, VolKind::arch_default(), 31, 4);
        let mut cfg = fixed_cfg(2f64.powi(-9), 2);
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;
        let a = irwal_fit_univariate(&design, &cfg).unwrap();
        let b = irwal_fit_univariate(&design, &cfg).unwrap();
        assert_eq!(a.final_beta_std.as_slice().unwrap(), b.final_beta_std.as_slice().unwrap());
        assert_eq!(a.final_sigma.as_slice().unwrap(), b.final_sigma.as_slice().unwrap());
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(x.lambda, y.lambda);
            assert_eq!(x.sigma_diff, y.sigma_diff);
            assert_eq!(x.weights.as_slice().unwrap(), y.weights.as_slice().unwrap());
        }
    }

    fn two_series_panel(n: usize, seed: u64) -> SeriesPanel<f64> {
        let mut spec = ar1_spec(n, VolKind::Constant(1.0), seed);
        let y1 = simulate_path(&spec).unwrap().y;
        spec.stream = 1;
        let y2 = simulate_path(&spec).unwrap().y;
        let t = y1.len();
        let mut values = Array2::zeros((2, t));
        for i in 0..t {
            values[[0, i]] = y1[i];
            values[[1, i]] = y2[i];
        }
        SeriesPanel::new(values, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn single_series_panel_reduces_to_univariate() {
        let spec = ar1_spec(500, VolKind::arch_default(), 77);
        let y = simulate_path(&spec).unwrap().y;
        let panel = SeriesPanel::univariate(y, "y").unwrap();
        let lags = LagIndexSets::univariate((1..=4).collect()).unwrap();
        let design = Design::build_ar_design(&panel, 0, &lags).unwrap();

        let mut cfg = fixed_cfg(2f64.powi(-9), 2);
        cfg.stop_epsilon = Some(1e-300);
        cfg.k_max = 3;

        let uni = irwal_fit_univariate(&design, &cfg).unwrap();
        let multi = multivariate_fit(&panel, &lags, std::slice::from_ref(&cfg)).unwrap();
        assert_eq!(multi.len(), 1);
        let multi = multi.into_iter().next().unwrap().unwrap();

        assert_eq!(uni.stopped_at(), multi.stopped_at());
        assert_eq!(
            uni.final_beta_std.as_slice().unwrap(),
            multi.final_beta_std.as_slice().unwrap()
        );
        assert_eq!(
            uni.final_sigma.as_slice().unwrap(),
            multi.final_sigma.as_slice().unwrap()
        );
    }

    /// Two independent AR(1) series with coefficient 0.5, fit jointly with
    /// cross-series lags available: each equation should put ~0.5 on its own
    /// first lag and next to nothing on the other series.
    #[test]
    fn diagonal_var_recovery() {
        let lags = LagIndexSets::uniform(2, 2).unwrap();
        let grid: Vec<f64> = lambda_grid(-4.0, -18.0, 25).unwrap();
        let cfg = IrwalConfig::new(
            LambdaPolicy::Grid {
                lambdas: grid,
                criterion: Criterion::Bic,
            },
            VolatilitySpec::new(1.0, LagIndexSets::uniform(2, 1).unwrap(), false),
        );
        let cfgs = vec![cfg.clone(), cfg];

        let mut own = [Vec::new(), Vec::new()];
        let mut cross = [Vec::new(), Vec::new()];
        for seed in 0..100 {
            let panel = two_series_panel(2000, 5000 + seed);
            let results = multivariate_fit(&panel, &lags, &cfgs).unwrap();
            for (i, res) in results.into_iter().enumerate() {
                let res = res.unwrap();
                let design = Design::build_ar_design(&panel, i, &lags).unwrap();
                let mut own_lag1 = None;
                let mut max_cross = 0.0f64;
                for (j, col) in design.columns.iter().enumerate() {
                    if let crate::design::ColumnId::Lag { series, lag } = col {
                        let b = res.final_beta[j].abs();
                        if *series == i && *lag == 1 {
                            own_lag1 = Some(res.final_beta[j]);
                        } else if *series != i {
                            max_cross = max_cross.max(b);
                        }
                    }
                }
                own[i].push(own_lag1.expect("own first lag is a column"));
                cross[i].push(max_cross);
            }
        }
        for i in 0..2 {
            own[i].sort_by(|a, b| a.total_cmp(b));
            cross[i].sort_by(|a, b| a.total_cmp(b));
            let own_med = own[i][50];
            let cross_med = cross[i][50];
            assert!(
                (own_med - 0.5).abs() < 0.1,
                "series {i}: median own-lag coefficient {own_med:.3}"
            );
            assert!(
                cross_med < 0.1,
                "series {i}: median cross-series coefficient {cross_med:.3}"
            );
        }
    }

    #[test]
    fn multivariate_rejects_mismatched_shapes() {
        let panel = two_series_panel(300, 1);
        let lags = LagIndexSets::uniform(2, 2).unwrap();
        let cfg = fixed_cfg(2f64.powi(-9), 2); // univariate vol: wrong for d=2

        // One config for two series.
        assert!(multivariate_fit(&panel, &lags, std::slice::from_ref(&cfg)).is_err());
        // Volatility lag sets cover one series, panel has two.
        assert!(multivariate_fit(&panel, &lags, &[cfg.clone(), cfg]).is_err());
        // Mean lag sets cover one series, panel has two.
        let uni_lags = LagIndexSets::univariate(vec![1]).unwrap();
        let good_vol = IrwalConfig::new(
            LambdaPolicy::Fixed(2f64.powi(-9)),
            VolatilitySpec::new(1.0, LagIndexSets::uniform(2, 1).unwrap(), false),
        );
        assert!(multivariate_fit(&panel, &uni_lags, &[good_vol.clone(), good_vol]).is_err());
    }
}
