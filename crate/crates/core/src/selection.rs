//! Penalty-level selection by generalized information criteria.
//!
//! A fit at penalty level λ with coefficients β is scored as
//!
//! ```text
//! GIC(κ) = ln σ̂²(β) + κ K(β) / n
//! ```
//!
//! where `K` counts the nonzero *penalized* coefficients (the intercept is
//! free and never counted) and σ̂² is the mean squared residual, by default
//! under the same observation weights the fit used. The three standard
//! weightings κ are AIC (2), HQC (2 ln ln n) and BIC (ln n): larger κ buys
//! sparser selections, and because the score is linear in κK the selected
//! model sizes are always nested, K(BIC) ≤ K(HQC) ≤ K(AIC).

use ndarray::Array1;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::wlasso::WeightedLassoFit;

/// The three standard information-criterion weightings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Aic,
    Hqc,
    Bic,
}

impl Criterion {
    /// All criteria, in fixed order (AIC, HQC, BIC) — ascending κ for the
    /// usual sample sizes.
    pub const ALL: [Criterion; 3] = [Criterion::Aic, Criterion::Hqc, Criterion::Bic];

    /// Model-size weight κ at sample size `n`.
    pub fn kappa<F: Scalar>(self, n: usize) -> F {
        debug_assert!(n >= 3, "information criteria need n >= 3");
        let n = n as f64;
        F::cast(match self {
            Criterion::Aic => 2.0,
            Criterion::Hqc => 2.0 * n.ln().ln(),
            Criterion::Bic => n.ln(),
        })
    }

    /// Lower-case label used in reports and config files.
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Hqc => "hqc",
            Criterion::Bic => "bic",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "hqc" => Ok(Criterion::Hqc),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion {other:?} (expected aic, hqc, or bic)"
            ))),
        }
    }
}

/// Mean squared residual of `beta` on `design` and the count of nonzero
/// penalized coefficients.
fn sigma2_and_k<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    beta: &Array1<F>,
    weighted_variance: bool,
) -> Result<(F, usize)> {
    let n = design.n();
    let p = design.p();
    if beta.len() != p {
        return Err(Error::ShapeMismatch(format!(
            "beta has {} entries, design has {p} columns",
            beta.len()
        )));
    }
    if weights.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {n} rows",
            weights.len()
        )));
    }
    let intercept = design.intercept_index();
    let mut ss = F::zero();
    for t in 0..n {
        let mut r = design.y[t];
        for j in 0..p {
            r -= design.x[(t, j)] * beta[j];
        }
        if weighted_variance {
            let w = weights[t];
            ss += w * w * r * r;
        } else {
            ss += r * r;
        }
    }
    let sigma2 = ss / F::of(n);
    if sigma2 <= F::zero() {
        return Err(Error::ZeroResidualVariance(
            "model fits the data exactly; information criteria are undefined".into(),
        ));
    }
    let k = beta
        .iter()
        .enumerate()
        .filter(|&(j, b)| Some(j) != intercept && *b != F::zero())
        .count();
    Ok((sigma2, k))
}

/// Scores one coefficient vector at weight `kappa`.
pub fn evaluate_gic<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    beta: &Array1<F>,
    kappa: F,
    weighted_variance: bool,
) -> Result<F> {
    let (sigma2, k) = sigma2_and_k(design, weights, beta, weighted_variance)?;
    Ok(sigma2.ln() + kappa * F::of(k) / F::of(design.n()))
}

/// The winner of a grid selection.
#[derive(Debug, Clone, Copy)]
pub struct Selected<F: Scalar> {
    /// Position in the fit slice (grids are descending in λ, so ties resolve
    /// toward the larger penalty).
    pub index: usize,
    /// Penalty level of the winning fit.
    pub lambda: F,
    /// Winning criterion value.
    pub score: F,
    /// Nonzero penalized coefficients of the winning fit.
    pub n_active: usize,
    /// Residual variance of the winning fit.
    pub sigma2: F,
}

/// Per-fit criterion values and the winner under each criterion.
#[derive(Debug, Clone)]
pub struct SelectionReport<F: Scalar> {
    /// `scores[i] = [AIC, HQC, BIC]` of `fits[i]`.
    pub scores: Vec<[F; 3]>,
    /// Winners in [`Criterion::ALL`] order.
    pub chosen: [Selected<F>; 3],
}

impl<F: Scalar> SelectionReport<F> {
    /// The winner under `criterion`.
    pub fn winner(&self, criterion: Criterion) -> &Selected<F> {
        let pos = Criterion::ALL
            .iter()
            .position(|c| *c == criterion)
            .expect("ALL contains every criterion");
        &self.chosen[pos]
    }
}

/// Scores every fit of a λ path under all three criteria and picks each
/// criterion's winner. Ties go to the earliest index (largest λ on the
/// descending grids this crate uses).
pub fn selection_report<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    fits: &[WeightedLassoFit<F>],
    weighted_variance: bool,
) -> Result<SelectionReport<F>> {
    if fits.is_empty() {
        return Err(Error::InvalidParameter("no fits to select from".into()));
    }
    let n = design.n();
    let kappas: [F; 3] = [
        Criterion::Aic.kappa(n),
        Criterion::Hqc.kappa(n),
        Criterion::Bic.kappa(n),
    ];
    let mut scores = Vec::with_capacity(fits.len());
    let mut stats = Vec::with_capacity(fits.len());
    for fit in fits {
        let (sigma2, k) = sigma2_and_k(design, weights, &fit.beta, weighted_variance)?;
        let row =
            std::array::from_fn(|c| sigma2.ln() + kappas[c] * F::of(k) / F::of(n));
        scores.push(row);
        stats.push((sigma2, k));
    }
    let chosen = std::array::from_fn(|c| {
        let mut best = 0usize;
        for i in 1..fits.len() {
            if scores[i][c] < scores[best][c] {
                best = i;
            }
        }
        Selected {
            index: best,
            lambda: fits[best].lambda,
            score: scores[best][c],
            n_active: stats[best].1,
            sigma2: stats[best].0,
        }
    });
    Ok(SelectionReport { scores, chosen })
}

/// Convenience wrapper: the winning fit index and stats under one criterion.
pub fn select_lambda<F: Scalar>(
    design: &Design<F>,
    weights: &Array1<F>,
    fits: &[WeightedLassoFit<F>],
    criterion: Criterion,
    weighted_variance: bool,
) -> Result<Selected<F>> {
    Ok(*selection_report(design, weights, fits, weighted_variance)?.winner(criterion))
}
