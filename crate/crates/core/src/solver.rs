//! Conjugate gradient for sparse symmetric positive definite systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once `|r| / |b| <= rel_tol`.
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the system size.
    pub max_iter_factor: usize,
    /// Scale the residual by the inverse diagonal.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter_factor: 10,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearSolveStats {
    pub iterations: usize,
    /// `|b - A x| / |b|`, recomputed from the returned solution.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("conjugate gradient did not converge in {} iterations (relative residual {:e})", .0.iterations, .0.relative_residual)]
    NotConverged(LinearSolveStats),
    #[error("conjugate gradient broke down at iteration {iteration}: matrix is not positive definite")]
    Breakdown { iteration: usize },
    #[error("system size {matrix} does not match right-hand side length {rhs}")]
    Dimension { matrix: usize, rhs: usize },
    #[error("non-positive diagonal entry at row {0}")]
    BadDiagonal(usize),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Solve `A x = b` from a zero initial guess.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    opts: &CgOptions,
) -> Result<(Vec<f64>, LinearSolveStats), SolveError> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(SolveError::Dimension {
            matrix: a.nrows(),
            rhs: n,
        });
    }
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((x, LinearSolveStats::default()));
    }

    let inv_diag: Option<Vec<f64>> = if opts.jacobi {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
            return Err(SolveError::BadDiagonal(i));
        }
        Some(d.iter().map(|v| 1.0 / v).collect())
    } else {
        None
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };

    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = opts.max_iter_factor.max(1) * n;

    let mut iterations = 0;
    loop {
        while norm(&r) > opts.rel_tol * b_norm {
            if iterations == max_iter {
                let stats = LinearSolveStats {
                    iterations,
                    relative_residual: true_residual(a, &x, b) / b_norm,
                };
                return Err(SolveError::NotConverged(stats));
            }
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(SolveError::Breakdown { iteration: iterations });
            }
            let step = rz / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            z = precondition(&r);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            iterations += 1;
        }

        // the recurrence residual can drift from b - Ax; restart from the true one
        let ax = a.mul_vec(&x);
        r = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let relative_residual = norm(&r) / b_norm;
        if relative_residual <= opts.rel_tol {
            return Ok((
                x,
                LinearSolveStats {
                    iterations,
                    relative_residual,
                },
            ));
        }
        z = precondition(&r);
        p = z.clone();
        rz = dot(&r, &z);
    }
}

fn true_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    libm::sqrt(ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum())
}
