use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::PressureSpace;
use crate::error::{Error, Result};
use crate::geometry::ImplicitDomain;
use crate::quadrature::{pairwise_sum, Quadrature};
use crate::webbasis::{combine, WebBasis};

/// Error measures recorded per level; their names key the report tables and
/// the EOC floors of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    L2,
    H1Semi,
    /// Full `H^1` norm.
    H1,
    /// Full `W^{1,p}` norm.
    W1p,
    /// `sqrt(int (|grad u| + |grad e|)^{p-2} |grad e|^2)`.
    Quasi,
    /// `||p - p_h||_{L^2}`.
    PressureL2,
    /// `||u - u_h||_{H^1} + ||p - p_h||_{L^2}`.
    Combined,
    /// The quasi-interpolant error `||u - P_h u||_{H^1}`.
    ProjectionH1,
    /// `|u - P_h u|` in the quasi-norm.
    ProjectionQuasi,
    /// `||p - Pi_h p||_{L^2}` for the element-wise `L^2` projection.
    PressureProjection,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::L2 => "l2",
            Measure::H1Semi => "h1_semi",
            Measure::H1 => "h1",
            Measure::W1p => "w1p",
            Measure::Quasi => "quasi",
            Measure::PressureL2 => "pressure_l2",
            Measure::Combined => "combined",
            Measure::ProjectionH1 => "projection_h1",
            Measure::ProjectionQuasi => "projection_quasi",
            Measure::PressureProjection => "pressure_projection",
        }
    }
}

/// Integrated error terms of a scalar or vector field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldErrors {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
    /// Present when an exponent was supplied.
    pub w1p: Option<f64>,
    pub quasi: Option<f64>,
}

/// Errors of the discrete field with per-component coefficients `comps`
/// against `exact`, which returns value and gradient of every component.
/// With `p` given, also the `W^{1,p}` norm and the quasi-norm (scalar
/// fields only; for vectors the component terms are summed).
pub fn field_errors<E>(
    basis: &WebBasis,
    quad: &Quadrature,
    comps: &[&[f64]],
    exact: E,
    p: Option<f64>,
) -> Result<FieldErrors>
where
    E: Fn([f64; 2]) -> Vec<(f64, [f64; 2])> + Sync,
{
    let pe = p.unwrap_or(2.0);
    let per_cell: Vec<[f64; 5]> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let cb = basis.cell_basis(r.cell);
            let (mut v, mut g) = (Vec::new(), Vec::new());
            let mut terms: [Vec<f64>; 5] = Default::default();
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                // leaves of cut cells may stick out of the domain, where the
                // exact solution is meaningless
                if !basis.domain().inside(x) {
                    continue;
                }
                basis.eval_cell(&cb, x, &mut v, &mut g);
                let ex = exact(x);
                let mut t = [0.0; 5];
                for (c, &(u, du)) in comps.iter().zip(&ex) {
                    let (uh, duh) = combine(&cb.indices, c, &v, &g);
                    let e = u - uh;
                    let ge = [du[0] - duh[0], du[1] - duh[1]];
                    let gn = ge[0].hypot(ge[1]);
                    t[0] += e * e;
                    t[1] += gn * gn;
                    t[2] += e.abs().powf(pe);
                    t[3] += gn.powf(pe);
                    if gn > 0.0 {
                        t[4] += (du[0].hypot(du[1]) + gn).powf(pe - 2.0) * gn * gn;
                    }
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                for k in 0..5 {
                    terms[k].push(w * t[k]);
                }
            }
            Ok(std::array::from_fn(|k| pairwise_sum(&terms[k])))
        })
        .collect::<Result<_>>()?;
    let total: [f64; 5] = std::array::from_fn(|k| pairwise_sum(&per_cell.iter().map(|t| t[k]).collect::<Vec<_>>()));
    Ok(FieldErrors {
        l2: total[0].sqrt(),
        h1_semi: total[1].sqrt(),
        h1: (total[0] + total[1]).sqrt(),
        w1p: p.map(|p| (total[2] + total[3]).powf(1.0 / p)),
        quasi: p.map(|_| total[4].sqrt()),
    })
}

/// `||p - p_h||_{L^2(domain)}` for a discrete pressure with coefficients `coeffs`.
pub fn pressure_error<E>(
    pressure: &PressureSpace,
    domain: &ImplicitDomain,
    quad: &Quadrature,
    coeffs: &[f64],
    exact: E,
) -> Result<f64>
where
    E: Fn([f64; 2]) -> f64 + Sync,
{
    let per_cell: Vec<f64> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let mut terms = Vec::with_capacity(r.points.len());
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                if !domain.inside(x) {
                    continue;
                }
                let e = exact(x) - pressure.eval_field(coeffs, r.cell, x);
                if !e.is_finite() {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                terms.push(w * e * e);
            }
            Ok(pairwise_sum(&terms))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_cell).sqrt())
}
