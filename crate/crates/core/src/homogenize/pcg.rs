//! Jacobi-preconditioned conjugate gradient for matrix-free operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Iteration count and final relative residual `|b - Ax| / |b|` of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x`. A right-hand side whose norm is below
/// `zero_rhs` is treated as exactly zero. Semidefinite operators are fine as
/// long as `b` lies in their range.
pub fn pcg<A: LinearOperator>(
    op: &A,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iterations: usize,
    zero_rhs: f64,
) -> Result<SolveStats> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let b_norm = dot(b, b).sqrt();
    if b_norm <= zero_rhs {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residual = dot(&r, &r).sqrt() / b_norm;

    for it in 0..max_iterations {
        if residual <= tol {
            return Ok(SolveStats {
                iterations: it,
                residual,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if residual <= tol {
        return Ok(SolveStats {
            iterations: max_iterations,
            residual,
        });
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}
