//! Linear solvers for the implicit diffusion step.

use crate::error::{Error, Result};
use crate::real::Real;

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i` to
/// column `i + 1`. The matrices assembled by the solver are symmetric and
/// strictly diagonally dominant, so no pivoting is needed.
pub fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) -> Result<()> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n || upper.len() + 1 != n {
        return Err(Error::Shape(format!(
            "tridiagonal system of size {n} with bands {}/{} and rhs {}",
            lower.len(),
            upper.len(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c_prime = vec![T::zero(); n];
    let mut denom = diag[0];
    if denom == T::zero() {
        return Err(Error::LinearSolve {
            residual: f64::INFINITY,
            iterations: 0,
        });
    }
    c_prime[0] = if n > 1 { upper[0] / denom } else { T::zero() };
    rhs[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c_prime[i - 1];
        if denom == T::zero() {
            return Err(Error::LinearSolve {
                residual: f64::INFINITY,
                iterations: i,
            });
        }
        if i < n - 1 {
            c_prime[i] = upper[i] / denom;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c_prime[i] * rhs[i + 1];
    }
    Ok(())
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator
/// given matrix-free, with a diagonal (Jacobi) preconditioner.
///
/// Iterates until `||r|| <= rel_tol * ||b||`. `x` holds the initial guess on entry.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    diagonal: &[T],
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iterations: usize,
) -> Result<usize> {
    let n = b.len();
    let dot = |a: &[T], c: &[T]| a.iter().zip(c).map(|(&p, &q)| p * q).sum::<T>();
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(0);
    }
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let mut z: Vec<T> = r.iter().zip(diagonal).map(|(&ri, &di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    for iteration in 0..max_iterations {
        let r_norm = dot(&r, &r).sqrt();
        if r_norm <= rel_tol * b_norm {
            return Ok(iteration);
        }
        apply(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + step * p[i];
            r[i] = r[i] - step * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diagonal[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = (dot(&r, &r).sqrt() / b_norm).as_f64();
    Err(Error::LinearSolve {
        residual,
        iterations: max_iterations,
    })
}
