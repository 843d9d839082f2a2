use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::SparseMatrix;
use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone, Serialize)]
pub struct CgOutcome {
    #[serde(skip)]
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x_k||` for every iterate, starting with `x_0 = 0`.
    pub history: Vec<f64>,
}

/// Jacobi-preconditioned conjugate gradients for an SPD matrix, stopped at
/// `||b - A x|| <= tol ||b||`.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut history = vec![bnorm];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, history });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Divergence(format!("CG met non-positive curvature {pap:e}")));
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, q)| *r -= alpha * q);
        let rn = norm(&r);
        history.push(rn);
        if rn <= tol * bnorm {
            return Ok(CgOutcome { x, iterations: it, history });
        }
        z.par_iter_mut().zip(&r).zip(&inv_diag).for_each(|((z, r), d)| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    let tail = history[history.len().saturating_sub(5)..].to_vec();
    Err(Error::NoConvergence { method: "conjugate gradients", iterations: max_iter, tail })
}
