//! Galerkin operators over the web basis.

mod mixed;
mod sparse;

pub use mixed::{assemble_mixed, MixedSystem, PressureSpace, Viscosity};
pub use sparse::SparseMatrix;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, Quadrature};
use crate::webbasis::{combine, WebBasis};

/// Sparse operator with its load vector.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Everything a kernel sees at one quadrature point.
pub struct PointData<'a> {
    pub x: [f64; 2],
    /// Quadrature weight.
    pub weight: f64,
    pub values: &'a [f64],
    pub grads: &'a [[f64; 2]],
    /// Current iterate and its gradient (zero when no iterate is given).
    pub u: f64,
    pub du: [f64; 2],
}

/// Dense element matrix and vector in the local numbering of a cell.
pub struct Local {
    pub n: usize,
    pub mat: Vec<f64>,
    pub vec: Vec<f64>,
}

type CellOutput = (Vec<(usize, usize, f64)>, Vec<(usize, f64)>);

/// Runs `kernel` at every quadrature point and scatters the element
/// contributions. Cells are processed in parallel and merged in cell order.
pub fn assemble_with<K>(
    basis: &WebBasis,
    quad: &Quadrature,
    coeffs: Option<&[f64]>,
    with_matrix: bool,
    kernel: K,
) -> Result<(Option<SparseMatrix>, Vec<f64>)>
where
    K: Fn(&PointData, &mut Local) -> Result<()> + Sync,
{
    let n = basis.len();
    let per_cell: Vec<CellOutput> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let cb = basis.cell_basis(r.cell);
            let nl = cb.len();
            let mut local = Local { n: nl, mat: vec![0.0; if with_matrix { nl * nl } else { 0 }], vec: vec![0.0; nl] };
            let (mut v, mut g) = (Vec::new(), Vec::new());
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                basis.eval_cell(&cb, x, &mut v, &mut g);
                let (u, du) = match coeffs {
                    Some(c) => combine(&cb.indices, c, &v, &g),
                    None => (0.0, [0.0; 2]),
                };
                kernel(&PointData { x, weight: w, values: &v, grads: &g, u, du }, &mut local)?;
            }
            let mut trip = Vec::with_capacity(local.mat.len());
            if with_matrix {
                for (a, &ia) in cb.indices.iter().enumerate() {
                    for (b, &ib) in cb.indices.iter().enumerate() {
                        trip.push((ia, ib, local.mat[a * nl + b]));
                    }
                }
            }
            let vec = cb.indices.iter().copied().zip(local.vec).collect();
            Ok((trip, vec))
        })
        .collect::<Result<_>>()?;
    let mut rhs = vec![0.0; n];
    let mut trip = Vec::new();
    for (t, v) in per_cell {
        trip.extend(t);
        for (i, x) in v {
            rhs[i] += x;
        }
    }
    let matrix = with_matrix.then(|| SparseMatrix::from_triplets(n, n, trip));
    Ok((matrix, rhs))
}

/// `int_domain g(x, u_h, grad u_h)` for the field with coefficients `coeffs`.
pub fn field_integral<G>(basis: &WebBasis, quad: &Quadrature, coeffs: &[f64], g: G) -> Result<f64>
where
    G: Fn([f64; 2], f64, [f64; 2]) -> f64 + Sync,
{
    let per_cell: Vec<f64> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let cb = basis.cell_basis(r.cell);
            let (mut v, mut gr) = (Vec::new(), Vec::new());
            let mut terms = Vec::with_capacity(r.points.len());
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                basis.eval_cell(&cb, x, &mut v, &mut gr);
                let (u, du) = combine(&cb.indices, coeffs, &v, &gr);
                let t = g(x, u, du);
                if !t.is_finite() {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                terms.push(w * t);
            }
            Ok(pairwise_sum(&terms))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_cell))
}

/// `A[j,i] = int a grad B_j . grad B_i + reaction B_j B_i`, `F[j] = int f B_j`.
pub fn assemble_vcpe<A, F>(basis: &WebBasis, quad: &Quadrature, a: A, reaction: f64, f: F) -> Result<AssembledSystem>
where
    A: Fn([f64; 2]) -> f64 + Sync,
    F: Fn([f64; 2]) -> f64 + Sync,
{
    let (m, rhs) = assemble_with(basis, quad, None, true, |p, loc| {
        let av = a(p.x);
        if !(av > 0.0) {
            return Err(Error::Coercivity { value: av, x: p.x[0], y: p.x[1] });
        }
        let fv = f(p.x);
        if !fv.is_finite() {
            return Err(Error::Evaluation { x: p.x[0], y: p.x[1] });
        }
        let n = loc.n;
        for l in 0..n {
            let gl = p.grads[l];
            let bl = p.values[l];
            let row = &mut loc.mat[l * n..(l + 1) * n];
            for k in 0..n {
                let gk = p.grads[k];
                row[k] += p.weight * (av * (gl[0] * gk[0] + gl[1] * gk[1]) + reaction * bl * p.values[k]);
            }
            loc.vec[l] += p.weight * fv * bl;
        }
        Ok(())
    })?;
    Ok(AssembledSystem { matrix: m.unwrap(), rhs })
}

/// Load vector of a source given in divergence form `f = div d`:
/// `F[j] = -int d . grad B_j`.
pub fn assemble_dipole_rhs<D>(basis: &WebBasis, quad: &Quadrature, d: D) -> Result<Vec<f64>>
where
    D: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    let (_, rhs) = assemble_with(basis, quad, None, false, |p, loc| {
        let dv = d(p.x);
        for l in 0..loc.n {
            loc.vec[l] -= p.weight * (dv[0] * p.grads[l][0] + dv[1] * p.grads[l][1]);
        }
        Ok(())
    })?;
    Ok(rhs)
}

/// Gram matrices of the web basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gram {
    L2,
    /// Full `H^1` inner product.
    H1,
}

pub fn assemble_gram(basis: &WebBasis, quad: &Quadrature, kind: Gram) -> Result<SparseMatrix> {
    let s = if kind == Gram::H1 { 1.0 } else { 0.0 };
    let (m, _) = assemble_with(basis, quad, None, true, |p, loc| {
        let n = loc.n;
        for l in 0..n {
            for k in 0..n {
                let gg = p.grads[l][0] * p.grads[k][0] + p.grads[l][1] * p.grads[k][1];
                loc.mat[l * n + k] += p.weight * (p.values[l] * p.values[k] + s * gg);
            }
        }
        Ok(())
    })?;
    Ok(m.unwrap())
}

/// L2 Gram matrix of the weighted B-splines `w b_k` over all relevant `k`,
/// ordered as [`crate::geometry::IndexSets::relevant`]. This is the basis
/// without extension, kept for stability comparisons.
pub fn assemble_weighted_bspline_gram(basis: &WebBasis, quad: &Quadrature) -> Result<SparseMatrix> {
    let grid = basis.grid();
    let domain = basis.domain();
    let relevant = basis.index_sets().relevant();
    let nb1 = grid.num_basis(1);
    let mut ordinal = vec![usize::MAX; grid.num_basis(0) * nb1];
    for (o, k) in relevant.iter().enumerate() {
        ordinal[k[0] * nb1 + k[1]] = o;
    }
    let per_cell: Vec<Vec<(usize, usize, f64)>> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let active: Vec<(usize, [usize; 2])> = grid
                .active_on_cell(r.cell)
                .filter_map(|k| {
                    let o = ordinal[k[0] * nb1 + k[1]];
                    (o != usize::MAX).then_some((o, k))
                })
                .collect();
            let n = active.len();
            let mut mat = vec![0.0; n * n];
            let mut vals = vec![0.0; n];
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                let wx = domain.weight(x);
                for (a, &(_, k)) in active.iter().enumerate() {
                    vals[a] = wx * grid.eval_tensor(k, x, [0, 0])?;
                }
                for a in 0..n {
                    for b in 0..n {
                        mat[a * n + b] += w * vals[a] * vals[b];
                    }
                }
            }
            let mut t = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    t.push((active[a].0, active[b].0, mat[a * n + b]));
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let n = relevant.len();
    Ok(SparseMatrix::from_triplets(n, n, per_cell.into_iter().flatten().collect()))
}

/// Regularized p-Laplace flux coefficient `(eps^2 + s^2)^{(p-2)/2}` and its
/// companion `(p-2)(eps^2 + s^2)^{(p-4)/2}` from the Jacobian.
fn plap_coefficients(p: f64, eps: f64, s2: f64) -> (f64, f64) {
    let q = eps * eps + s2;
    if p == 2.0 {
        return (1.0, 0.0);
    }
    let mu = q.powf(0.5 * (p - 2.0));
    (mu, if q > 0.0 { (p - 2.0) * mu / q } else { 0.0 })
}

fn check_plap(p: f64, eps: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p = {p} outside (1, inf)")));
    }
    if !(eps >= 0.0) || (p < 2.0 && eps == 0.0) {
        return Err(Error::Domain(format!("regularization eps = {eps} not admissible for p = {p}")));
    }
    Ok(())
}

/// Residual `R[j] = int mu_eps(|grad u|) grad u . grad B_j + u B_j - f B_j`
/// and, when requested, its exact Jacobian in the coefficients.
pub fn assemble_plap<F>(
    basis: &WebBasis,
    quad: &Quadrature,
    coeffs: &[f64],
    p: f64,
    eps: f64,
    f: F,
    with_jacobian: bool,
) -> Result<(Option<SparseMatrix>, Vec<f64>)>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    check_plap(p, eps)?;
    let (m, r) = assemble_with(basis, quad, Some(coeffs), with_jacobian, |pt, loc| {
        let du = pt.du;
        let (mu, nu) = plap_coefficients(p, eps, du[0] * du[0] + du[1] * du[1]);
        let fv = f(pt.x);
        if !(mu.is_finite() && nu.is_finite() && fv.is_finite() && pt.u.is_finite()) {
            return Err(Error::Divergence(format!("non-finite flux at ({}, {})", pt.x[0], pt.x[1])));
        }
        let n = loc.n;
        let w = pt.weight;
        for l in 0..n {
            let gl = pt.grads[l];
            let dl = du[0] * gl[0] + du[1] * gl[1];
            loc.vec[l] += w * (mu * dl + (pt.u - fv) * pt.values[l]);
            if with_jacobian {
                let row = &mut loc.mat[l * n..(l + 1) * n];
                for k in 0..n {
                    let gk = pt.grads[k];
                    let dk = du[0] * gk[0] + du[1] * gk[1];
                    row[k] += w * (mu * (gl[0] * gk[0] + gl[1] * gk[1]) + nu * dl * dk + pt.values[l] * pt.values[k]);
                }
            }
        }
        Ok(())
    })?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("non-finite residual".into()));
    }
    Ok((m, r))
}

/// Jacobian and residual of the regularized p-Laplace problem at `coeffs`.
pub fn assemble_plap_jacobian_and_residual<F>(
    basis: &WebBasis,
    quad: &Quadrature,
    coeffs: &[f64],
    p: f64,
    eps: f64,
    f: F,
) -> Result<(SparseMatrix, Vec<f64>)>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    let (m, r) = assemble_plap(basis, quad, coeffs, p, eps, f, true)?;
    Ok((m.unwrap(), r))
}

/// Regularized energy `int (eps^2 + |grad u|^2)^{p/2} / p + u^2 / 2 - f u`,
/// whose gradient in the coefficients is the residual.
pub fn plap_energy<F>(basis: &WebBasis, quad: &Quadrature, coeffs: &[f64], p: f64, eps: f64, f: F) -> Result<f64>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    check_plap(p, eps)?;
    field_integral(basis, quad, coeffs, |x, u, du| {
        let q = eps * eps + du[0] * du[0] + du[1] * du[1];
        q.powf(0.5 * p) / p + 0.5 * u * u - f(x) * u
    })
}
