//! Brute-force reference implementations for cross-checking the fast solvers.
//!
//! Everything here favors obviousness over speed: problems are solved by
//! exhaustive enumeration (sign patterns, active subsets) plus small dense
//! solves, so a disagreement with the production code points at the
//! production code. All routines are `f64`-only and sized for test problems
//! (at most ~10 columns).

use ndarray::{Array1, Array2};

/// Gaussian elimination with partial pivoting; `None` on singular input.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.clone();
    for k in 0..n {
        let piv = (k..n).max_by(|&r, &s| {
            m[(r, k)].abs().partial_cmp(&m[(s, k)].abs()).unwrap()
        })?;
        if m[(piv, k)].abs() < 1e-13 * (1.0 + m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))) {
            return None;
        }
        if piv != k {
            for c in 0..n {
                m.swap((k, c), (piv, c));
            }
            rhs.swap(k, piv);
        }
        for r in k + 1..n {
            let f = m[(r, k)] / m[(k, k)];
            for c in k..n {
                m[(r, c)] -= f * m[(k, c)];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for c in k + 1..n {
            s -= m[(k, c)] * rhs[c];
        }
        rhs[k] = s / m[(k, k)];
    }
    Some(rhs)
}

/// Weighted least squares via the normal equations `X'W²X β = X'W²y`.
pub fn wls_normal_equations(
    x: &Array2<f64>,
    y: &Array1<f64>,
    w: &Array1<f64>,
) -> Option<Array1<f64>> {
    let (n, p) = x.dim();
    let mut g = Array2::<f64>::zeros((p, p));
    let mut c = Array1::<f64>::zeros(p);
    for t in 0..n {
        let u = w[t] * w[t];
        for j in 0..p {
            let xj = x[(t, j)];
            c[j] += u * xj * y[t];
            for k in j..p {
                g[(j, k)] += u * xj * x[(t, k)];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            g[(j, k)] = g[(k, j)];
        }
    }
    solve_dense(&g, &c)
}

/// Objective of the weighted lasso: `Σ_t w_t²(y_t − x_t'β)² + λ Σ_j v_j|β_j|`.
///
/// A `v_j = ∞` entry freezes coefficient `j` at zero; its penalty term is
/// taken as 0 when `β_j = 0` and ∞ otherwise.
pub fn weighted_lasso_objective(
    x: &Array2<f64>,
    y: &Array1<f64>,
    w: &Array1<f64>,
    beta: &Array1<f64>,
    lambda: f64,
    v: &Array1<f64>,
) -> f64 {
    let (n, p) = x.dim();
    let mut loss = 0.0;
    for t in 0..n {
        let mut r = y[t];
        for j in 0..p {
            r -= x[(t, j)] * beta[j];
        }
        loss += w[t] * w[t] * r * r;
    }
    let mut pen = 0.0;
    for j in 0..p {
        if v[j].is_infinite() {
            if beta[j] != 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        pen += v[j] * beta[j].abs();
    }
    loss + lambda * pen
}

/// Global minimizer of the weighted lasso found by enumerating all `3^p`
/// sign patterns and solving the stationarity equations of each.
///
/// Returns `(β, objective)`. Works because the minimizer is the stationary
/// point of the smooth restriction to its own sign orthant, and every
/// stationary candidate is a feasible point whose exact objective can be
/// compared directly. Limited to `p ≤ 10`.
pub fn lasso_by_sign_enumeration(
    x: &Array2<f64>,
    y: &Array1<f64>,
    w: &Array1<f64>,
    lambda: f64,
    v: &Array1<f64>,
) -> (Array1<f64>, f64) {
    let (n, p) = x.dim();
    assert!(p <= 10, "sign enumeration is exponential in p");
    let mut g = Array2::<f64>::zeros((p, p));
    let mut c = Array1::<f64>::zeros(p);
    for t in 0..n {
        let u = w[t] * w[t];
        for j in 0..p {
            c[j] += u * x[(t, j)] * y[t];
            for k in 0..p {
                g[(j, k)] += u * x[(t, j)] * x[(t, k)];
            }
        }
    }

    let mut best = Array1::zeros(p);
    let mut best_obj = weighted_lasso_objective(x, y, w, &best, lambda, v);
    let n_patterns = 3usize.pow(p as u32);
    'patterns: for code in 1..n_patterns {
        let mut signs = vec![0i8; p];
        let mut rem = code;
        let mut active = Vec::new();
        for j in 0..p {
            signs[j] = match rem % 3 {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            rem /= 3;
            if signs[j] != 0 {
                if v[j].is_infinite() {
                    continue 'patterns;
                }
                active.push(j);
            }
        }
        let k = active.len();
        let mut sub = Array2::<f64>::zeros((k, k));
        let mut rhs = Array1::<f64>::zeros(k);
        for (a, &ja) in active.iter().enumerate() {
            rhs[a] = 2.0 * c[ja] - lambda * v[ja] * signs[ja] as f64;
            for (b, &jb) in active.iter().enumerate() {
                sub[(a, b)] = 2.0 * g[(ja, jb)];
            }
        }
        let Some(sol) = solve_dense(&sub, &rhs) else {
            continue;
        };
        let mut beta = Array1::zeros(p);
        for (a, &ja) in active.iter().enumerate() {
            if !sol[a].is_finite() {
                continue 'patterns;
            }
            beta[ja] = sol[a];
        }
        let obj = weighted_lasso_objective(x, y, w, &beta, lambda, v);
        if obj < best_obj {
            best_obj = obj;
            best = beta;
        }
    }
    (best, best_obj)
}

/// Exact non-negative least squares by enumerating all `2^m` support sets.
///
/// Returns `(α, ‖b − Aα‖)` for the feasible support with the smallest
/// residual norm. Limited to `m ≤ 16` columns.
pub fn nnls_by_enumeration(a: &Array2<f64>, b: &Array1<f64>) -> (Array1<f64>, f64) {
    let (n, m) = a.dim();
    assert!(m <= 16, "subset enumeration is exponential in m");
    let resid_norm = |alpha: &Array1<f64>| -> f64 {
        let mut ss = 0.0;
        for t in 0..n {
            let mut r = b[t];
            for j in 0..m {
                r -= a[(t, j)] * alpha[j];
            }
            ss += r * r;
        }
        ss.sqrt()
    };

    let mut best = Array1::zeros(m);
    let mut best_norm = resid_norm(&best);
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let k = support.len();
        let mut gram = Array2::<f64>::zeros((k, k));
        let mut rhs = Array1::<f64>::zeros(k);
        for (p, &jp) in support.iter().enumerate() {
            for t in 0..n {
                rhs[p] += a[(t, jp)] * b[t];
            }
            for (q, &jq) in support.iter().enumerate() {
                for t in 0..n {
                    gram[(p, q)] += a[(t, jp)] * a[(t, jq)];
                }
            }
        }
        let Some(sol) = solve_dense(&gram, &rhs) else {
            continue;
        };
        if sol.iter().any(|&v| v < -1e-10 || !v.is_finite()) {
            continue;
        }
        let mut alpha = Array1::zeros(m);
        for (p, &jp) in support.iter().enumerate() {
            alpha[jp] = sol[p].max(0.0);
        }
        let norm = resid_norm(&alpha);
        if norm < best_norm {
            best_norm = norm;
            best = alpha;
        }
    }
    (best, best_norm)
}
