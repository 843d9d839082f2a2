use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::cg::{dot, norm};
use super::{conjugate_gradient, SolveOptions};
use crate::assembly::{assemble_gram, assemble_mixed, Gram, PressureSpace, SparseMatrix, Viscosity};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::webbasis::WebBasis;

/// Systems up to this size are handled by a dense symmetric eigensolver.
const DENSE_LIMIT: usize = 2500;

/// Spectral condition number `lambda_max / lambda_min` of a symmetric
/// positive semidefinite matrix; infinite when it is numerically singular.
pub fn condition_number(m: &SparseMatrix) -> Result<f64> {
    let n = m.nrows();
    if n == 0 || n != m.ncols() {
        return Err(Error::Domain("condition number of an empty or rectangular matrix".into()));
    }
    let (lmin, lmax) = if n <= DENSE_LIMIT {
        let dense = m.to_dense();
        let lmax = SymmetricEigen::new(dense.clone()).eigenvalues.max();
        // the largest eigenvalue of the Cholesky inverse keeps its relative
        // accuracy when badly scaled rows push lambda_min below eps * lambda_max
        let lmin = match dense.cholesky() {
            Some(c) => 1.0 / SymmetricEigen::new(c.inverse()).eigenvalues.max(),
            None => 0.0,
        };
        (lmin, lmax)
    } else {
        iterative_extremes(m)?
    };
    Ok(if lmin > 0.0 { lmax / lmin } else { f64::INFINITY })
}

/// Power iteration for the largest eigenvalue and inverse iteration (inner
/// solves by conjugate gradients) for the smallest.
pub(crate) fn iterative_extremes(m: &SparseMatrix) -> Result<(f64, f64)> {
    let n = m.nrows();
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let unit = |v: Vec<f64>| {
        let s = norm(&v);
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let mut v = unit(start.clone());
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w = m.mul_vec(&v);
        let next = dot(&v, &w);
        v = unit(w);
        if (next - lmax).abs() <= 1e-10 * next.abs() {
            lmax = next;
            break;
        }
        lmax = next;
    }
    let mut v = unit(start);
    let mut lmin = f64::INFINITY;
    for _ in 0..200 {
        let w = match conjugate_gradient(m, &v, 1e-12, 50 * n) {
            Ok(out) => out.x,
            Err(Error::Divergence(_)) => return Ok((0.0, lmax)),
            Err(e) => return Err(e),
        };
        let next = 1.0 / dot(&v, &w);
        v = unit(w);
        if (next - lmin).abs() <= 1e-10 * next.abs() {
            lmin = next;
            break;
        }
        lmin = next;
    }
    Ok((lmin, lmax))
}

/// Discrete inf-sup constant of a velocity/pressure pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfSupEstimate {
    /// `min over mean-zero q of sup_v b(v, q) / (|v|_{H^1} ||q||_{L^2})`.
    pub value: f64,
    /// Largest generalized eigenvalue, square-rooted; bounded by `sqrt(2)`.
    pub upper: f64,
    pub pressure_dofs: usize,
}

/// Smallest generalized singular value of the divergence operator: with the
/// velocity Gram matrix `K` (full `H^1` inner product, both components), the
/// pressure mass matrix `M` and `S = B K^{-1} B^T`, returns the square root
/// of the smallest eigenvalue of `S y = lambda M y` on pressures
/// `M`-orthogonal to the constants.
pub fn estimate_infsup(basis: &WebBasis, quad: &Quadrature, pressure: &PressureSpace) -> Result<InfSupEstimate> {
    let n = basis.len();
    let np = pressure.len();
    if np < 2 {
        return Err(Error::Config("inf-sup estimate needs at least two pressure functions".into()));
    }
    let k = assemble_gram(basis, quad, Gram::H1)?;
    let zero = vec![0.0; 2 * n];
    let sys = assemble_mixed(basis, quad, pressure, &Viscosity::Constant { value: 1.0 }, &zero, |_| [0.0, 0.0])?;
    let (mass, _) = pressure.mass_and_means(quad);
    let opts = SolveOptions::default();
    // K^{-1} B^T column by column, one scalar solve per velocity component
    let solved: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|q| {
            let mut col = vec![0.0; 2 * n];
            let (cols, vals) = sys.b.row(q);
            for (&c, &v) in cols.iter().zip(vals) {
                col[c] = v;
            }
            let mut out = Vec::with_capacity(2 * n);
            for comp in 0..2 {
                out.extend(conjugate_gradient(&k, &col[comp * n..(comp + 1) * n], 1e-13, opts.max_linear_iter)?.x);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut s = DMatrix::zeros(np, np);
    for (l, y) in solved.iter().enumerate() {
        let by = sys.b.mul_vec(y);
        for q in 0..np {
            s[(q, l)] = by[q];
        }
    }
    let s = 0.5 * (&s + s.transpose());
    let m = mass.to_dense();
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Config("pressure mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Config("pressure mass matrix is singular".into()))?;
    let t = &linv * s * linv.transpose();
    // constants in the transformed coordinates
    let e = nalgebra::DVector::from_vec(pressure.constant_coefficients());
    let v0 = l.transpose() * e;
    let v0 = &v0 / v0.norm();
    let proj = DMatrix::identity(np, np) - &v0 * v0.transpose();
    let t = &proj * t * &proj;
    let t = 0.5 * (&t + t.transpose());
    // the constant direction now has eigenvalue zero; lift it past the top
    // of the spectrum (the Frobenius norm bounds every eigenvalue)
    let lift = t.norm() + 1.0;
    let eig = SymmetricEigen::new(&t + lift * &v0 * v0.transpose()).eigenvalues;
    let top = eig.iter().copied().filter(|&v| v < lift * (1.0 - 1e-9)).fold(0.0, f64::max);
    let lmin = eig.min().max(0.0);
    Ok(InfSupEstimate { value: lmin.sqrt(), upper: top.sqrt(), pressure_dofs: np })
}
