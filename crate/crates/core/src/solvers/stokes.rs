use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::cg::norm;
use super::{conjugate_gradient, SolutionField, SolveOptions};
use crate::assembly::{assemble_mixed, MixedSystem, PressureSpace, Viscosity};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::webbasis::WebBasis;

/// Velocity, pressure and multiplier of one saddle-point solve.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub multiplier: f64,
}

/// Direct LU of the full saddle-point matrix. Cubic in the number of
/// unknowns; meant for small systems and cross-checks.
pub fn solve_saddle_dense(sys: &MixedSystem) -> Result<SaddleSolution> {
    let (m, rhs) = sys.saddle_dense();
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InfSup("saddle-point matrix is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InfSup("saddle-point solve produced non-finite values".into()));
    }
    let nv = sys.velocity_len();
    let np = sys.pressure_len();
    Ok(SaddleSolution {
        velocity: x.rows(0, nv).iter().copied().collect(),
        pressure: x.rows(nv, np).iter().copied().collect(),
        multiplier: x[nv + np],
    })
}

/// Pressure Schur complement: `Y = A^{-1} B^T` and `y0 = A^{-1} F` by
/// conjugate gradients on the SPD viscous block, then the dense system
/// `[S -m; m^T 0] (p, lambda) = (B y0, 0)` with `S = B Y` by LU, and
/// `u = y0 - Y p`. The discrete constraint `B u + m lambda = 0` holds to
/// the accuracy of the small dense solve whatever the CG tolerance.
pub fn solve_saddle(sys: &MixedSystem, opts: &SolveOptions) -> Result<SaddleSolution> {
    let nv = sys.velocity_len();
    let np = sys.pressure_len();
    let tol = opts.linear_tol.min(1e-12);
    let columns: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|k| {
            let mut col = vec![0.0; nv];
            let (cols, vals) = sys.b.row(k);
            for (&c, &v) in cols.iter().zip(vals) {
                col[c] = v;
            }
            Ok(conjugate_gradient(&sys.a, &col, tol, opts.max_linear_iter)?.x)
        })
        .collect::<Result<_>>()?;
    let y0 = conjugate_gradient(&sys.a, &sys.rhs, tol, opts.max_linear_iter)?.x;
    let by0 = sys.b.mul_vec(&y0);
    let n = np + 1;
    let mut s = DMatrix::zeros(n, n);
    for (l, yl) in columns.iter().enumerate() {
        let byl = sys.b.mul_vec(yl);
        for k in 0..np {
            s[(k, l)] = byl[k];
        }
    }
    // S is symmetric up to the CG error; use the symmetric part
    for k in 0..np {
        for l in 0..k {
            let v = 0.5 * (s[(k, l)] + s[(l, k)]);
            s[(k, l)] = v;
            s[(l, k)] = v;
        }
    }
    for (k, &m) in sys.means.iter().enumerate() {
        s[(k, np)] = -m;
        s[(np, k)] = m;
    }
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, np).copy_from_slice(&by0);
    let x = s
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InfSup("pressure Schur complement is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InfSup("pressure Schur complement produced non-finite values".into()));
    }
    let pressure: Vec<f64> = x.rows(0, np).iter().copied().collect();
    let mut velocity = y0;
    for (yl, &pl) in columns.iter().zip(&pressure) {
        velocity.par_iter_mut().zip(yl).for_each(|(u, y)| *u -= pl * y);
    }
    Ok(SaddleSolution { velocity, pressure, multiplier: x[np] })
}

/// `max_k |b(u, q_k - (m_k / |Omega|) 1)|` over the pressure basis shifted to
/// mean zero. The constant pressure is left out: it is balanced by the
/// multiplier of the mean-value constraint rather than by the velocity.
pub fn incompressibility_defect(sys: &MixedSystem, pressure: &PressureSpace, velocity: &[f64]) -> f64 {
    let bu = sys.b.mul_vec(velocity);
    let e = pressure.constant_coefficients();
    let area: f64 = sys.means.iter().zip(&e).map(|(m, e)| m * e).sum();
    let b_one: f64 = bu.iter().zip(&e).map(|(b, e)| b * e).sum();
    bu.iter()
        .zip(&sys.means)
        .map(|(b, m)| (b - m / area * b_one).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct StokesSolution {
    pub velocity: SolutionField,
    pub pressure: Vec<f64>,
    /// Relative coefficient updates of the Picard iteration.
    pub updates: Vec<f64>,
    pub iterations: usize,
    /// [`incompressibility_defect`] of the final velocity.
    pub incompressibility: f64,
    /// `int p_h`.
    pub pressure_mean: f64,
    pub multiplier: f64,
}

/// Quasi-Newtonian flow `-div(a(|D u|^2) D u) + grad p = phi`, `div u = 0`,
/// zero velocity on the boundary and mean-zero pressure.
///
/// Picard iteration: freeze the viscosity at the previous velocity, solve
/// the linear saddle-point problem, repeat until the relative coefficient
/// update drops below `picard_tol`.
pub fn solve_quasi_newtonian<P>(
    basis: &WebBasis,
    quad: &Quadrature,
    pressure: &PressureSpace,
    viscosity: &Viscosity,
    phi: P,
    opts: &SolveOptions,
) -> Result<StokesSolution>
where
    P: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    opts.validate()?;
    let mut c = vec![0.0; 2 * basis.len()];
    let mut updates = Vec::new();
    for it in 1..=opts.max_picard_iter {
        let sys = assemble_mixed(basis, quad, pressure, viscosity, &c, &phi)?;
        let sol = solve_saddle(&sys, opts)?;
        let diff: Vec<f64> = sol.velocity.iter().zip(&c).map(|(a, b)| a - b).collect();
        let upd = norm(&diff) / norm(&sol.velocity).max(1.0);
        if !upd.is_finite() {
            return Err(Error::Divergence("Picard update is not finite".into()));
        }
        updates.push(upd);
        c = sol.velocity;
        let frozen = matches!(viscosity, Viscosity::Constant { .. });
        if upd <= opts.picard_tol || frozen {
            let incompressibility = incompressibility_defect(&sys, pressure, &c);
            let pressure_mean = sol.pressure.iter().zip(&sys.means).map(|(p, m)| p * m).sum();
            return Ok(StokesSolution {
                velocity: SolutionField::vector(c),
                pressure: sol.pressure,
                updates,
                iterations: it,
                incompressibility,
                pressure_mean,
                multiplier: sol.multiplier,
            });
        }
    }
    let tail = updates[updates.len().saturating_sub(5)..].to_vec();
    Err(Error::NoConvergence { method: "Picard", iterations: opts.max_picard_iter, tail })
}
