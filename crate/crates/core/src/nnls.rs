//! Non-negative least squares by the active-set method.
//!
//! Solves `min_{α ≥ 0} ‖b − Aα‖₂` in the classic Lawson–Hanson fashion:
//! repeatedly move the inactive coordinate with the largest positive dual
//! into the support, re-solve the unconstrained least-squares problem on the
//! support, and step back toward feasibility whenever that solve turns a
//! supported coordinate non-positive. The volatility recursions this crate
//! fits produce tall, very sparse solutions, so supports stay small and the
//! normal equations are rebuilt from scratch at each inner solve instead of
//! maintaining a full Gram matrix.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::Scalar;

/// Result of a non-negative least-squares fit.
#[derive(Debug, Clone)]
pub struct NnlsSolution<F: Scalar> {
    /// Coefficients, elementwise `≥ 0`.
    pub alpha: Array1<F>,
    /// `‖b − Aα‖₂`, recomputed from the final coefficients.
    pub residual_norm: F,
    /// Number of support insertions performed.
    pub n_pivots: usize,
}

/// Solves `min_{α ≥ 0} ‖b − Aα‖₂` with default tolerance and pivot budget.
pub fn nnls<F: Scalar>(a: &Array2<F>, b: &Array1<F>) -> Result<NnlsSolution<F>> {
    nnls_with(a, b, None, None)
}

/// [`nnls`] with explicit knobs.
///
/// `tol` is the dual-feasibility threshold: the loop stops once every
/// inactive dual `A_j'(b − Aα)` is at most `tol`. The default scales with the
/// data as `10 ε ‖A‖∞ m` (`m` columns). `pivot_budget` caps support
/// insertions, default `3 m`; exceeding it returns [`Error::MaxPivots`]
/// rather than looping on ill-conditioned input.
pub fn nnls_with<F: Scalar>(
    a: &Array2<F>,
    b: &Array1<F>,
    tol: Option<F>,
    pivot_budget: Option<usize>,
) -> Result<NnlsSolution<F>> {
    let (n, m) = a.dim();
    if b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "a has {n} rows, b has {}",
            b.len()
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::EmptyDesign(format!("{n} rows, {m} columns")));
    }
    if let Some(v) = a.iter().chain(b.iter()).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("nnls input contains {v}")));
    }
    // The kernels below walk rows as contiguous slices.
    let a_std;
    let a = if a.is_standard_layout() {
        a
    } else {
        a_std = a.as_standard_layout().into_owned();
        &a_std
    };

    // ‖A‖∞ (max absolute row sum) sets the natural scale of the duals.
    let norm_inf = (0..n)
        .map(|t| a.row(t).iter().map(|v| v.abs()).sum::<F>())
        .fold(F::zero(), F::max);
    let tol = tol.unwrap_or_else(|| F::cast(10.0) * F::epsilon() * norm_inf * F::of(m));
    let budget = pivot_budget.unwrap_or(3 * m);

    let mut alpha = vec![F::zero(); m];
    let mut in_support = vec![false; m];
    let mut support: Vec<usize> = Vec::new();
    let mut resid: Vec<F> = b.to_vec();
    let mut n_pivots = 0usize;

    loop {
        // Dual vector w = A'resid, accumulated row-wise so the row-major
        // storage is walked sequentially.
        let mut dual = vec![F::zero(); m];
        for t in 0..n {
            let rt = resid[t];
            if rt == F::zero() {
                continue;
            }
            let row = a.row(t);
            let row = row.as_slice().expect("row-major rows are contiguous");
            for (wj, &atj) in dual.iter_mut().zip(row) {
                *wj += atj * rt;
            }
        }

        // Most violated inactive coordinate; strict `>` keeps the lowest
        // index on ties.
        let mut pick: Option<usize> = None;
        let mut best = tol;
        for (j, &wj) in dual.iter().enumerate() {
            if !in_support[j] && wj > best {
                best = wj;
                pick = Some(j);
            }
        }
        let Some(j_new) = pick else {
            break;
        };
        if n_pivots >= budget {
            return Err(Error::MaxPivots { budget });
        }
        n_pivots += 1;
        in_support[j_new] = true;
        support.push(j_new);

        // Inner loop: unconstrained solve on the support, stepping back and
        // shrinking the support until the solve lands in the positive
        // orthant. Each pass removes at least one index, so it terminates.
        loop {
            let z = ls_on_support(a, b, &support).map_err(|e| Error::NumericFailure {
                iteration: n_pivots,
                msg: format!("support solve failed: {e}"),
            })?;
            if z.iter().all(|&v| v > F::zero()) {
                for (pos, &j) in support.iter().enumerate() {
                    alpha[j] = z[pos];
                }
                break;
            }
            // Largest step toward z that keeps every supported coordinate
            // non-negative; the limiting coordinate is zeroed explicitly.
            let mut theta = F::one();
            let mut limiting: Option<usize> = None;
            for (pos, &j) in support.iter().enumerate() {
                if z[pos] <= F::zero() {
                    let denom = alpha[j] - z[pos];
                    let step = if denom > F::zero() {
                        alpha[j] / denom
                    } else {
                        F::zero()
                    };
                    if step < theta {
                        theta = step;
                        limiting = Some(pos);
                    }
                }
            }
            for (pos, &j) in support.iter().enumerate() {
                let cur = alpha[j];
                alpha[j] = cur + theta * (z[pos] - cur);
            }
            if let Some(pos) = limiting {
                alpha[support[pos]] = F::zero();
            }
            support.retain(|&j| {
                let keep = alpha[j] > F::zero();
                if !keep {
                    in_support[j] = false;
                    alpha[j] = F::zero();
                }
                keep
            });
            if support.is_empty() {
                break;
            }
        }

        for (t, r) in resid.iter_mut().enumerate() {
            let mut v = b[t];
            let row = a.row(t);
            let row = row.as_slice().expect("row-major rows are contiguous");
            for &j in &support {
                v -= row[j] * alpha[j];
            }
            *r = v;
        }
    }

    let mut ss = F::zero();
    for t in 0..n {
        let mut v = b[t];
        let row = a.row(t);
        let row = row.as_slice().expect("row-major rows are contiguous");
        for &j in &support {
            v -= row[j] * alpha[j];
        }
        ss += v * v;
    }
    Ok(NnlsSolution {
        alpha: Array1::from(alpha),
        residual_norm: ss.sqrt(),
        n_pivots,
    })
}

/// Unconstrained least squares restricted to `support`, via normal equations.
fn ls_on_support<F: Scalar>(
    a: &Array2<F>,
    b: &Array1<F>,
    support: &[usize],
) -> Result<Array1<F>> {
    let k = support.len();
    let n = a.nrows();
    let mut gram = Array2::zeros((k, k));
    let mut rhs = Array1::zeros(k);
    for t in 0..n {
        let row = a.row(t);
        let row = row.as_slice().expect("row-major rows are contiguous");
        let bt = b[t];
        for (p, &jp) in support.iter().enumerate() {
            let ap = row[jp];
            if ap == F::zero() {
                continue;
            }
            rhs[p] += ap * bt;
            for (q, &jq) in support.iter().enumerate().skip(p) {
                gram[(p, q)] += ap * row[jq];
            }
        }
    }
    for p in 0..k {
        for q in 0..p {
            gram[(p, q)] = gram[(q, p)];
        }
    }
    solve_dense(&gram, &rhs)
}
