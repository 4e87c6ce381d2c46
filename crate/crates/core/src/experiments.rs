//! Monte Carlo studies of the reweighted estimator on simulated processes:
//! inclusion-proportion curves over a λ grid, one-step-ahead forecast error
//! per reweighting depth, and sign-recovery trends over the sample size.
//!
//! Every study follows the same replication protocol. Replication `r` of the
//! `i`-th sample size draws its path from the study's [`DgpSpec`] with the
//! RNG stream set to `dgp.stream + i·N + r`, so results are independent of
//! execution order and thread count: replications may run in parallel, and
//! the aggregation is a fixed-order reduction over the replication index.
//! Failed replications are counted and excluded from the aggregates.
//!
//! The estimation design uses the lag pool 𝓘 = {1..⌊5√n⌋} (see
//! [`default_lag_horizon`]); "relevant" lags are the true-support lags that
//! fall inside that pool, since lags beyond it are unreachable by any
//! estimator under study. In oracle mode the design is restricted to exactly
//! those reachable support lags — the lag structure is treated as known, but
//! volatility is still estimated.
//!
//! Depth `k` means `k` rounds of the reweighted loop at a fixed λ; all
//! depths of interest are read off one forced-depth run per λ, and λs are
//! warm-started from their predecessor on the grid. Grids should therefore
//! be descending (as [`default_lambda_grid`] is). When the loop reaches an
//! exact fixed point early (identical σ̂ two rounds in a row), deeper records
//! repeat the last round — the continuation is exact.
//!
//! Criterion-selected rows ("`mae_bic`" and friends, λ column empty) score
//! each λ's depth-`k` fit on *unweighted* residual variance. Fits on the
//! grid are produced under different weight vectors, so the weighted
//! variances are not comparable across λ.

use std::io::{self, Write};

use ndarray::Array1;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::design::{default_lag_horizon, ColumnId, Design, LagIndexSets};
use crate::driver::{irwal_fit_univariate_warm, IrwalConfig, IrwalIteration, IrwalResult, LambdaPolicy};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::selection::Criterion;
use crate::simulate::{simulate_path, DgpSpec, VolKind};
use crate::volatility::VolatilitySpec;
use crate::wlasso::default_lambda_grid;
use crate::SeriesPanel;

/// One tidy result cell: `(lambda, k, n, metric) -> value`, with the number
/// of replications behind it. `lambda` is empty for criterion-selected and
/// per-sample metrics.
#[derive(Debug, Clone)]
pub struct McRow<F: Scalar> {
    pub lambda: Option<F>,
    /// Reweighting depth the row belongs to (0 for estimator-free metrics
    /// such as the mean absolute target).
    pub k: usize,
    /// Sample size.
    pub n: usize,
    pub metric: String,
    pub value: F,
    /// Successful replications aggregated into `value`.
    pub n_reps: usize,
}

/// Aggregated study output plus enough bookkeeping to reproduce it.
#[derive(Debug, Clone)]
pub struct McReport<F: Scalar> {
    pub rows: Vec<McRow<F>>,
    /// Replications requested per sample size.
    pub n_requested: usize,
    /// Failed replications over the whole study (excluded from aggregates).
    pub n_failed: usize,
    /// Human-readable echo of the study configuration.
    pub config: String,
    /// Base RNG seed of the data-generating process.
    pub seed: u64,
}

impl<F: Scalar> McReport<F> {
    /// Writes `lambda,k,n,metric,value,n_reps` rows; floats carry 17
    /// significant digits so they round-trip.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lambda,k,n,metric,value,n_reps")?;
        for row in &self.rows {
            let lambda = match row.lambda {
                Some(l) => crate::format_sig17(l.f64()),
                None => String::new(),
            };
            writeln!(
                w,
                "{lambda},{},{},{},{},{}",
                row.k,
                row.n,
                row.metric,
                crate::format_sig17(row.value.f64()),
                row.n_reps
            )?;
        }
        Ok(())
    }

    /// Writes the companion manifest (TOML): configuration echo, seed,
    /// replication counts, and the software version.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "version = {:?}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "seed = {}", self.seed)?;
        writeln!(w, "n_requested = {}", self.n_requested)?;
        writeln!(w, "n_failed = {}", self.n_failed)?;
        writeln!(w, "config = {:?}", self.config)?;
        Ok(())
    }

    /// The value of a λ-free metric cell, if present.
    pub fn value(&self, metric: &str, k: usize, n: usize) -> Option<F> {
        self.rows
            .iter()
            .find(|r| r.lambda.is_none() && r.k == k && r.n == n && r.metric == metric)
            .map(|r| r.value)
    }

    /// `(lambda, value)` pairs of a per-λ metric in grid order.
    pub fn values_over_lambda(&self, metric: &str, k: usize, n: usize) -> Vec<(F, F)> {
        self.rows
            .iter()
            .filter(|r| r.k == k && r.n == n && r.metric == metric)
            .filter_map(|r| r.lambda.map(|l| (l, r.value)))
            .collect()
    }
}

/// Volatility recursion spec matching a generating process: power δ = 1,
/// own-series lags up to the generator's order, threshold terms iff the
/// generator has them. A constant-volatility generator yields an
/// intercept-only recursion.
pub fn matched_vol_spec<F: Scalar>(vol: &VolKind<F>) -> Result<VolatilitySpec<F>> {
    let (order, threshold) = match vol {
        VolKind::Constant(_) => (0, false),
        VolKind::Arch { alpha, .. } => (alpha.len(), false),
        VolKind::Tarch { alpha, alpha_neg, .. } => (alpha.len().max(alpha_neg.len()), true),
    };
    VolatilitySpec::univariate(F::one(), order, threshold)
}

/// Runs the fixed-λ loop at every grid point, forcing `k_max` rounds (the
/// stopping threshold is the smallest positive value, so only an exact σ̂
/// fixed point stops early), warm-starting each λ from its predecessor.
fn chain_over_grid<'d, F: Scalar>(
    design: &'d Design<F>,
    lambdas: &[F],
    k_max: usize,
    vol: &VolatilitySpec<F>,
) -> Result<Vec<IrwalResult<F>>> {
    let mut cfg = IrwalConfig::new(LambdaPolicy::Fixed(F::zero()), vol.clone());
    cfg.k_max = k_max;
    cfg.stop_epsilon = Some(F::min_positive_value());
    let mut results = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Array1<F>> = None;
    for &lambda in lambdas {
        cfg.lambda_policy = LambdaPolicy::Fixed(lambda);
        let res = irwal_fit_univariate_warm(design, &cfg, warm.as_ref())?;
        warm = Some(res.iterations[0].beta_std.clone());
        results.push(res);
    }
    Ok(results)
}

/// The depth-`k` record of a forced-depth run; once an exact fixed point is
/// reached, deeper records coincide with the last one.
fn round_at<F: Scalar>(res: &IrwalResult<F>, k: usize) -> &IrwalIteration<F> {
    &res.iterations[k.min(res.iterations.len()) - 1]
}

/// GIC scores of one coefficient vector per criterion, on unweighted
/// residual variance.
fn gic_scores<F: Scalar>(design: &Design<F>, ones: &Array1<F>, beta: &Array1<F>) -> Result<[F; 3]> {
    let n = design.n();
    let mut out = [F::zero(); 3];
    for (slot, crit) in out.iter_mut().zip(Criterion::ALL) {
        *slot = crate::selection::evaluate_gic(design, ones, beta, crit.kappa(n), false)?;
    }
    Ok(out)
}

/// Strict-minimum argmin; ties keep the earliest (largest-λ) index.
fn argmin<F: Scalar>(scores: impl Iterator<Item = F>) -> usize {
    let mut best = 0;
    let mut best_score = F::infinity();
    for (i, s) in scores.enumerate() {
        if s < best_score {
            best_score = s;
            best = i;
        }
    }
    best
}

fn mean<F: Scalar>(values: &[F]) -> F {
    values.iter().copied().sum::<F>() / F::of(values.len())
}

fn validate_common<F: Scalar>(lambdas: &[F], n_reps: usize, k_list: &[usize]) -> Result<usize> {
    if n_reps == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::InvalidParameter(
            "k_list must hold depths >= 1".into(),
        ));
    }
    Ok(*k_list.iter().max().expect("non-empty"))
}

/// Splits successful replications from failures, erroring only when nothing
/// succeeded.
fn collect_reps<T, F: Scalar>(reps: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let n = reps.len();
    let mut ok = Vec::with_capacity(n);
    let mut first_err = None;
    for r in reps {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if ok.is_empty() {
        return Err(Error::NumericFailure {
            iteration: 0,
            msg: format!(
                "all {n} replications failed; first error: {}",
                first_err.expect("at least one failure")
            ),
        });
    }
    let failed = n - ok.len();
    Ok((ok, failed))
}

/// Lag values (not column indices) of the nonzero lag coefficients.
fn active_lags<F: Scalar>(design: &Design<F>, beta_std: &Array1<F>) -> Vec<usize> {
    design
        .columns
        .iter()
        .zip(beta_std.iter())
        .filter_map(|(col, &b)| match col {
            ColumnId::Lag { lag, .. } if b != F::zero() => Some(*lag),
            _ => None,
        })
        .collect()
}

/// Per-replication inclusion fractions: one `(relevant, irrelevant)` pair
/// per (k, λ), plus one criterion-selected pair per (k, criterion) and one
/// active-count nesting check per k.
struct InclusionRep<F> {
    per_lambda: Vec<(Option<F>, F)>,
    per_criterion: Vec<(Option<F>, F)>,
    /// Whether K(BIC) ≤ K(HQC) ≤ K(AIC) held, one entry per k.
    nesting_ok: Vec<bool>,
}

/// Inclusion-proportion study: how much of the true support, and how much
/// noise, enters the active set along the λ grid, per reweighting depth and
/// per sample size.
///
/// Emits `relevant_inclusion` / `irrelevant_inclusion` rows per (λ, k, n),
/// `{metric}_{criterion}` rows (λ empty) for the criterion-selected points,
/// and one `ic_nesting_violations` count per (k, n) — replications whose
/// criterion-chosen active sizes break K(BIC) ≤ K(HQC) ≤ K(AIC). Relevant
/// rows are omitted when the reachable support is empty.
pub fn run_inclusion_study<F: Scalar>(
    dgp: &DgpSpec<F>,
    n_values: &[usize],
    lambdas: &[F],
    n_reps: usize,
    k_list: &[usize],
) -> Result<McReport<F>>
where
    StandardNormal: Distribution<F>,
{
    let k_max = validate_common(lambdas, n_reps, k_list)?;
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("no sample sizes".into()));
    }

    let mut rows = Vec::new();
    let mut n_failed = 0;
    for (n_idx, &n) in n_values.iter().enumerate() {
        let horizon = default_lag_horizon(n);
        let support = dgp.support.lags(horizon)?;
        let n_rel = support.len();
        let n_irrel = horizon - n_rel;
        let vol = matched_vol_spec(&dgp.vol)?;

        let reps: Vec<Result<InclusionRep<F>>> = (0..n_reps)
            .into_par_iter()
            .map(|rep| {
                let spec = dgp
                    .clone()
                    .with_stream(dgp.stream + (n_idx * n_reps + rep) as u64);
                let spec = DgpSpec { n, ..spec };
                let path = simulate_path(&spec)?;
                let panel = SeriesPanel::univariate(path.y, "y")?;
                let lags = LagIndexSets::univariate((1..=horizon).collect())?;
                let design = Design::build_ar_design(&panel, 0, &lags)?;
                let chain = chain_over_grid(&design, lambdas, k_max, &vol)?;
                let ones = Array1::ones(design.n());

                let mut per_lambda = Vec::with_capacity(k_list.len() * lambdas.len());
                let mut per_criterion = Vec::with_capacity(k_list.len() * 3);
                let mut nesting_ok = Vec::with_capacity(k_list.len());
                for &k in k_list {
                    let mut fractions = Vec::with_capacity(lambdas.len());
                    let mut actives = Vec::with_capacity(lambdas.len());
                    let mut scores = Vec::with_capacity(lambdas.len());
                    for res in &chain {
                        let round = round_at(res, k);
                        let active = active_lags(&design, &round.beta_std);
                        let rel = active.iter().filter(|l| support.contains(l)).count();
                        let irrel = active.len() - rel;
                        let rel_frac = (n_rel > 0).then(|| F::of(rel) / F::of(n_rel));
                        let irrel_frac = if n_irrel > 0 {
                            F::of(irrel) / F::of(n_irrel)
                        } else {
                            F::zero()
                        };
                        fractions.push((rel_frac, irrel_frac));
                        actives.push(active.len());
                        scores.push(gic_scores(&design, &ones, &round.beta_std)?);
                    }
                    per_lambda.extend(fractions.iter().copied());
                    // Criterion::ALL is κ-ascending, so chosen sizes must be
                    // K(AIC) ≥ K(HQC) ≥ K(BIC).
                    let mut picked_k = [0usize; 3];
                    for c in 0..3 {
                        let pick = argmin(scores.iter().map(|s| s[c]));
                        per_criterion.push(fractions[pick]);
                        picked_k[c] = actives[pick];
                    }
                    nesting_ok.push(picked_k[0] >= picked_k[1] && picked_k[1] >= picked_k[2]);
                }
                Ok(InclusionRep {
                    per_lambda,
                    per_criterion,
                    nesting_ok,
                })
            })
            .collect();
        let (ok, failed) = collect_reps::<_, F>(reps)?;
        n_failed += failed;

        for (ki, &k) in k_list.iter().enumerate() {
            for (li, &lambda) in lambdas.iter().enumerate() {
                let cell = ki * lambdas.len() + li;
                push_fraction_rows(
                    &mut rows,
                    ok.iter().map(|r| r.per_lambda[cell]),
                    Some(lambda),
                    k,
                    n,
                    "relevant_inclusion",
                    "irrelevant_inclusion",
                );
            }
            for (c, crit) in Criterion::ALL.iter().enumerate() {
                let cell = ki * 3 + c;
                push_fraction_rows(
                    &mut rows,
                    ok.iter().map(|r| r.per_criterion[cell]),
                    None,
                    k,
                    n,
                    &format!("relevant_inclusion_{}", crit.name()),
                    &format!("irrelevant_inclusion_{}", crit.name()),
                );
            }
            let violations = ok.iter().filter(|r| !r.nesting_ok[ki]).count();
            rows.push(McRow {
                lambda: None,
                k,
                n,
                metric: "ic_nesting_violations".into(),
                value: F::of(violations),
                n_reps: ok.len(),
            });
        }
    }

    Ok(McReport {
        rows,
        n_requested: n_reps,
        n_failed,
        config: format!(
            "inclusion study: dgp = {dgp:?}; n_values = {n_values:?}; {} lambdas in [{:e}, {:e}]; k_list = {k_list:?}; N = {n_reps}",
            lambdas.len(),
            lambdas.last().expect("non-empty").f64(),
            lambdas[0].f64(),
        ),
        seed: dgp.seed,
    })
}

#[allow(clippy::too_many_arguments)]
fn push_fraction_rows<F: Scalar>(
    rows: &mut Vec<McRow<F>>,
    cells: impl Iterator<Item = (Option<F>, F)> + Clone,
    lambda: Option<F>,
    k: usize,
    n: usize,
    rel_metric: &str,
    irrel_metric: &str,
) {
    let rel: Vec<F> = cells.clone().filter_map(|(r, _)| r).collect();
    if !rel.is_empty() {
        rows.push(McRow {
            lambda,
            k,
            n,
            metric: rel_metric.to_string(),
            value: mean(&rel),
            n_reps: rel.len(),
        });
    }
    let irrel: Vec<F> = cells.map(|(_, i)| i).collect();
    rows.push(McRow {
        lambda,
        k,
        n,
        metric: irrel_metric.to_string(),
        value: mean(&irrel),
        n_reps: irrel.len(),
    });
}

/// Per-replication forecast errors: `|Ŷ_{n+1} − Y_{n+1}|` per (k, λ), per
/// (k, criterion), and the target magnitude itself.
struct MaeRep<F> {
    per_lambda: Vec<F>,
    per_criterion: Vec<F>,
    abs_target: F,
}

/// One-step-ahead forecast study. Each replication simulates `n + 1` points,
/// fits on the first `n`, and forecasts the last with the original-scale
/// coefficients on the raw lagged values (the in-sample column scaling is
/// thereby applied to the new row).
///
/// Emits `mae` rows per (λ, k), `mae_{criterion}` rows (λ empty), and one
/// `mean_abs_target` row (k = 0) — the error of the zero forecast.
///
/// With `oracle` set, the design holds exactly the reachable true-support
/// lags instead of the full pool; volatility is still estimated.
pub fn run_mae_study<F: Scalar>(
    dgp: &DgpSpec<F>,
    n: usize,
    lambdas: &[F],
    n_reps: usize,
    k_list: &[usize],
    oracle: bool,
) -> Result<McReport<F>>
where
    StandardNormal: Distribution<F>,
{
    let k_max = validate_common(lambdas, n_reps, k_list)?;
    let horizon = default_lag_horizon(n);
    let support = dgp.support.lags(horizon)?;
    let pool: Vec<usize> = if oracle {
        support.clone()
    } else {
        (1..=horizon).collect()
    };
    let vol = matched_vol_spec(&dgp.vol)?;

    let reps: Vec<Result<MaeRep<F>>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let spec = dgp.clone().with_stream(dgp.stream + rep as u64);
            let spec = DgpSpec { n: n + 1, ..spec };
            let path = simulate_path(&spec)?;
            let y_next = path.y[n];
            let train = path.y[..n].to_vec();
            let panel = SeriesPanel::univariate(train, "y")?;
            let lags = LagIndexSets::univariate(pool.clone())?;
            let design = Design::build_ar_design(&panel, 0, &lags)?;
            let chain = chain_over_grid(&design, lambdas, k_max, &vol)?;
            let ones = Array1::ones(design.n());

            let forecast = |beta: &Array1<F>| -> F {
                let mut yhat = F::zero();
                for (j, col) in design.columns.iter().enumerate() {
                    match col {
                        ColumnId::Intercept => yhat += beta[j],
                        ColumnId::Lag { lag, .. } => yhat += beta[j] * path.y[n - lag],
                        ColumnId::Covariate(_) => {}
                    }
                }
                yhat
            };

            let mut per_lambda = Vec::with_capacity(k_list.len() * lambdas.len());
            let mut per_criterion = Vec::with_capacity(k_list.len() * 3);
            for &k in k_list {
                let mut errors = Vec::with_capacity(lambdas.len());
                let mut scores = Vec::with_capacity(lambdas.len());
                for res in &chain {
                    let round = round_at(res, k);
                    errors.push((forecast(&round.beta) - y_next).abs());
                    scores.push(gic_scores(&design, &ones, &round.beta_std)?);
                }
                per_lambda.extend(errors.iter().copied());
                for c in 0..3 {
                    per_criterion.push(errors[argmin(scores.iter().map(|s| s[c]))]);
                }
            }
            Ok(MaeRep {
                per_lambda,
                per_criterion,
                abs_target: y_next.abs(),
            })
        })
        .collect();
    let (ok, n_failed) = collect_reps::<_, F>(reps)?;
    let n_ok = ok.len();

    let mut rows = Vec::new();
    for (ki, &k) in k_list.iter().enumerate() {
        for (li, &lambda) in lambdas.iter().enumerate() {
            let cell = ki * lambdas.len() + li;
            let errs: Vec<F> = ok.iter().map(|r| r.per_lambda[cell]).collect();
            rows.push(McRow {
                lambda: Some(lambda),
                k,
                n,
                metric: "mae".into(),
                value: mean(&errs),
                n_reps: n_ok,
            });
        }
        for (c, crit) in Criterion::ALL.iter().enumerate() {
            let cell = ki * 3 + c;
            let errs: Vec<F> = ok.iter().map(|r| r.per_criterion[cell]).collect();
            rows.push(McRow {
                lambda: None,
                k,
                n,
                metric: format!("mae_{}", crit.name()),
                value: mean(&errs),
                n_reps: n_ok,
            });
        }
    }
    let targets: Vec<F> = ok.iter().map(|r| r.abs_target).collect();
    rows.push(McRow {
        lambda: None,
        k: 0,
        n,
        metric: "mean_abs_target".into(),
        value: mean(&targets),
        n_reps: n_ok,
    });

    Ok(McReport {
        rows,
        n_requested: n_reps,
        n_failed,
        config: format!(
            "forecast study: dgp = {dgp:?}; n = {n}; {} lambdas in [{:e}, {:e}]; k_list = {k_list:?}; N = {n_reps}; oracle = {oracle}",
            lambdas.len(),
            lambdas.last().expect("non-empty").f64(),
            lambdas[0].f64(),
        ),
        seed: dgp.seed,
    })
}

/// Sign-recovery trend over ascending sample sizes: the fraction of
/// replications whose criterion-selected depth-`k` fit puts the true sign on
/// the first three reachable true-support lags. When the true support is
/// empty, recovery means an empty active set.
///
/// Emits one `sign_recovery` row per n (λ empty).
pub fn run_consistency_trend<F: Scalar>(
    dgp: &DgpSpec<F>,
    n_values: &[usize],
    lambdas: &[F],
    criterion: Criterion,
    n_reps: usize,
    k: usize,
) -> Result<McReport<F>>
where
    StandardNormal: Distribution<F>,
{
    let k_max = validate_common(lambdas, n_reps, &[k])?;
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("no sample sizes".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sample sizes must be strictly ascending".into(),
        ));
    }
    let crit_idx = Criterion::ALL
        .iter()
        .position(|c| *c == criterion)
        .expect("ALL contains every criterion");

    let mut rows = Vec::new();
    let mut n_failed = 0;
    for (n_idx, &n) in n_values.iter().enumerate() {
        let horizon = default_lag_horizon(n);
        let truth: Vec<(usize, F)> = dgp
            .ar_coefficients(horizon)?
            .into_iter()
            .take(3)
            .collect();
        let vol = matched_vol_spec(&dgp.vol)?;

        let reps: Vec<Result<bool>> = (0..n_reps)
            .into_par_iter()
            .map(|rep| {
                let spec = dgp
                    .clone()
                    .with_stream(dgp.stream + (n_idx * n_reps + rep) as u64);
                let spec = DgpSpec { n, ..spec };
                let path = simulate_path(&spec)?;
                let panel = SeriesPanel::univariate(path.y, "y")?;
                let lags = LagIndexSets::univariate((1..=horizon).collect())?;
                let design = Design::build_ar_design(&panel, 0, &lags)?;
                let chain = chain_over_grid(&design, lambdas, k_max, &vol)?;
                let ones = Array1::ones(design.n());

                let mut scores = Vec::with_capacity(lambdas.len());
                for res in &chain {
                    scores.push(gic_scores(&design, &ones, &round_at(res, k).beta_std)?[crit_idx]);
                }
                let round = round_at(&chain[argmin(scores.into_iter())], k);

                if truth.is_empty() {
                    return Ok(round.n_active == 0);
                }
                let recovered = truth.iter().all(|&(lag, coef)| {
                    design.columns.iter().zip(round.beta_std.iter()).any(
                        |(col, &b)| {
                            matches!(col, ColumnId::Lag { lag: l, .. } if *l == lag)
                                && b != F::zero()
                                && (b > F::zero()) == (coef > F::zero())
                        },
                    )
                });
                Ok(recovered)
            })
            .collect();
        let (ok, failed) = collect_reps::<_, F>(reps)?;
        n_failed += failed;
        let hits = ok.iter().filter(|&&r| r).count();
        rows.push(McRow {
            lambda: None,
            k,
            n,
            metric: "sign_recovery".into(),
            value: F::of(hits) / F::of(ok.len()),
            n_reps: ok.len(),
        });
    }

    Ok(McReport {
        rows,
        n_requested: n_reps,
        n_failed,
        config: format!(
            "sign-recovery trend: dgp = {dgp:?}; n_values = {n_values:?}; {} lambdas; criterion = {}; k = {k}; N = {n_reps}",
            lambdas.len(),
            criterion.name(),
        ),
        seed: dgp.seed,
    })
}

/// The studies' default grid — re-exported here because every caller of the
/// harness wants one.
pub fn study_grid<F: Scalar>() -> Vec<F> {
    default_lambda_grid()
}
