use rayon::prelude::*;

use super::{combine, WebBasis};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::splines::{deboor_fix, PolynomialPiece};

/// Coefficients of the quasi-interpolant `P_h f = sum_i w(x_i) lambda_i(f / w) B_i`.
///
/// `f / w` is replaced by its tensor interpolant of the spline degree on the
/// interior cell that contains `x_i`.
pub fn project<F>(basis: &WebBasis, f: F) -> Result<Vec<f64>>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    let grid = basis.grid();
    let idx = basis.index_sets();
    let domain = basis.domain();
    let degree = [grid.degree(0), grid.degree(1)];
    (0..basis.len())
        .into_par_iter()
        .map(|i| {
            let rect = grid.cell_rect(idx.inner_cell[i]);
            let mut bad = None;
            let piece = PolynomialPiece::interpolate(rect, degree, |x| {
                let w = domain.weight(x);
                let q = f(x) / w;
                if !(w > 0.0) || !q.is_finite() {
                    bad.get_or_insert((x, w));
                    return 0.0;
                }
                q
            })?;
            if let Some((x, w)) = bad {
                return Err(Error::Blowup {
                    index: i,
                    detail: format!("f/w is not finite at ({}, {}) where w = {w:e}", x[0], x[1]),
                });
            }
            Ok(basis.center_weights()[i] * deboor_fix(grid.axes(), idx.inner[i], &piece)?)
        })
        .collect()
}

/// `||u - P_h u||_1` over the domain, with the exact gradient supplied.
pub fn jackson_error<U, G>(basis: &WebBasis, quad: &Quadrature, u: U, grad_u: G) -> Result<f64>
where
    U: Fn([f64; 2]) -> f64 + Sync,
    G: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    let c = project(basis, &u)?;
    let per_cell: Vec<f64> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let cb = basis.cell_basis(r.cell);
            let (mut v, mut g) = (Vec::new(), Vec::new());
            let mut terms = Vec::with_capacity(r.points.len());
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                if !basis.domain().inside(x) {
                    continue;
                }
                basis.eval_cell(&cb, x, &mut v, &mut g);
                let (uh, duh) = combine(&cb.indices, &c, &v, &g);
                let du = grad_u(x);
                let e = u(x) - uh;
                let ex = du[0] - duh[0];
                let ey = du[1] - duh[1];
                let t = e * e + ex * ex + ey * ey;
                if !t.is_finite() {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                terms.push(w * t);
            }
            Ok(crate::quadrature::pairwise_sum(&terms))
        })
        .collect::<Result<_>>()?;
    Ok(crate::quadrature::pairwise_sum(&per_cell).sqrt())
}
