use nalgebra::DMatrix;

use crate::error::{PlpError, Result};

const MAX_SWEEPS: usize = 100;

/// `A = U · diag(λ) · V` with `λ` non-increasing. Note `V` is stored with the
/// right singular vectors as *rows*.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * &self.v
    }
}

/// Singular value decomposition of a square matrix by one-sided Jacobi
/// rotations, which keeps small singular values accurate to working precision
/// and leaves exactly-zero columns exactly zero.
///
/// Signs are fixed so that the first entry of each column of `U` with
/// magnitude above `1e-10` is positive; the matching row of `V` flips along.
pub fn compute_svd(matrix: &DMatrix<f64>) -> Result<SvdFactors> {
    if !matrix.is_square() {
        return Err(PlpError::invalid(format!(
            "expected a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(PlpError::invalid("matrix has non-finite entries"));
    }
    let n = matrix.ncols();
    let mut w = matrix.clone();
    let mut right = DMatrix::<f64>::identity(n, n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut right, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PlpError::NumericFailure {
            message: format!("SVD of {n}x{n} matrix did not converge"),
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let singular_values: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        v.row_mut(dst).copy_from(&right.column(src).transpose());
        if norms[src] > 0.0 {
            u.set_column(dst, &(w.column(src) / norms[src]));
            filled += 1;
        }
    }
    complete_basis(&mut u, filled);

    for k in 0..n {
        let flip = u
            .column(k)
            .iter()
            .find(|x| x.abs() > 1e-10)
            .is_some_and(|&x| x < 0.0);
        if flip {
            u.column_mut(k).neg_mut();
            v.row_mut(k).neg_mut();
        }
    }
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (a, b) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// Fills columns `filled..n` of `u` with unit vectors orthogonal to the
/// first `filled` columns (left singular vectors of zero singular values).
fn complete_basis(u: &mut DMatrix<f64>, filled: usize) {
    let n = u.nrows();
    let mut next = filled;
    for e in 0..n {
        if next == n {
            break;
        }
        let mut cand = DMatrix::<f64>::zeros(n, 1);
        cand[(e, 0)] = 1.0;
        for _ in 0..2 {
            for k in 0..next {
                let proj = u.column(k).dot(&cand.column(0));
                cand.column_mut(0).axpy(-proj, &u.column(k), 1.0);
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            u.set_column(next, &(cand.column(0) / norm));
            next += 1;
        }
    }
}
