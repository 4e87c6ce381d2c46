//! Small dense solves shared by the estimators.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Meant for the small systems that arise inside the active-set and
/// initialization steps (tens of unknowns); fails on (numerically) singular
/// input.
pub(crate) fn solve_dense<F: Scalar>(a: &Array2<F>, b: &Array1<F>) -> Result<Array1<F>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve expects square system, got {}×{} with rhs {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = a
        .iter()
        .map(|v| v.abs())
        .fold(F::zero(), F::max)
        .max(F::one());
    let tiny = F::epsilon() * scale * F::of(n.max(1));

    for k in 0..n {
        let mut piv = k;
        let mut best = m[(k, k)].abs();
        for r in k + 1..n {
            let v = m[(r, k)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= tiny {
            return Err(Error::NumericFailure {
                iteration: k,
                msg: format!("singular system (pivot {:e})", best.f64()),
            });
        }
        if piv != k {
            for c in k..n {
                let tmp = m[(k, c)];
                m[(k, c)] = m[(piv, c)];
                m[(piv, c)] = tmp;
            }
            let tmp = rhs[k];
            rhs[k] = rhs[piv];
            rhs[piv] = tmp;
        }
        let d = m[(k, k)];
        for r in k + 1..n {
            let f = m[(r, k)] / d;
            if f == F::zero() {
                continue;
            }
            for c in k..n {
                let v = m[(k, c)];
                m[(r, c)] -= f * v;
            }
            let v = rhs[k];
            rhs[r] -= f * v;
        }
    }
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for c in k + 1..n {
            s -= m[(k, c)] * rhs[c];
        }
        rhs[k] = s / m[(k, k)];
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_a_known_system() {
        let a = Array2::from_shape_vec((3, 3), vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0])
            .unwrap();
        let x_true = Array1::from(vec![1.0, -2.0, 0.5]);
        let b = a.dot(&x_true);
        let x = solve_dense(&a, &b).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(x[j], x_true[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn needs_pivoting_when_leading_entry_vanishes() {
        let a = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let b = Array1::from(vec![2.0, 3.0]);
        let x = solve_dense(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_singular_input() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let b = Array1::from(vec![1.0, 2.0]);
        assert!(solve_dense(&a, &b).is_err());
    }
}
