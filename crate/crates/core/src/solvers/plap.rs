use serde::Serialize;

use super::cg::{dot, norm};
use super::{conjugate_gradient, solve_vcpe, SolutionField, SolveOptions};
use crate::assembly::{assemble_plap, assemble_plap_jacobian_and_residual, plap_energy};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::webbasis::WebBasis;

/// Record of one Newton run at fixed `(p, eps)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonStage {
    pub p: f64,
    pub eps: f64,
    /// `||R||` at every iterate, the last one being the accepted solution.
    pub residuals: Vec<f64>,
    /// Regularized energy at every iterate.
    pub energies: Vec<f64>,
    /// Accepted step lengths.
    pub steps: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PlapSolution {
    pub field: SolutionField,
    pub stages: Vec<NewtonStage>,
    /// `||F||` of the load vector.
    pub load_norm: f64,
}

impl PlapSolution {
    pub fn final_stage(&self) -> &NewtonStage {
        self.stages.last().expect("at least one stage")
    }

    pub fn newton_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.steps.len()).sum()
    }
}

/// `(p, eps)` stages visited after the linear warm start.
///
/// Exponents above 3 are reached in unit steps from 3 and exponents below
/// 1.3 in steps of 0.1 from 1.5. Intermediate exponents use one
/// regularization level; the target exponent runs the full `eps` ladder
/// (divide by 10 from `eps_start` down to `eps_final`) when `p < 2` and only
/// `eps_final` otherwise.
pub fn plap_schedule(p: f64, opts: &SolveOptions) -> Vec<(f64, f64)> {
    let first_eps = |q: f64| if q < 2.0 { opts.eps_start } else { opts.eps_final };
    let mut out = Vec::new();
    if p > 3.0 {
        let mut q = 3.0;
        while q < p - 1e-12 {
            out.push((q, first_eps(q)));
            q += 1.0;
        }
    } else if p < 1.3 {
        let mut q = 1.5;
        while q > p + 1e-12 {
            out.push((q, first_eps(q)));
            q -= 0.1;
        }
    }
    if p < 2.0 {
        let mut e = opts.eps_start;
        while e > opts.eps_final * (1.0 + 1e-9) {
            out.push((p, e));
            e /= 10.0;
        }
    }
    out.push((p, opts.eps_final));
    out
}

#[allow(clippy::too_many_arguments)]
fn newton<F>(
    basis: &WebBasis,
    quad: &Quadrature,
    mut c: Vec<f64>,
    p: f64,
    eps: f64,
    f: &F,
    opts: &SolveOptions,
    scale: f64,
) -> Result<(Vec<f64>, NewtonStage)>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    let mut stage = NewtonStage {
        p,
        eps,
        residuals: Vec::new(),
        energies: Vec::new(),
        steps: Vec::new(),
        linear_iterations: Vec::new(),
    };
    let mut energy = plap_energy(basis, quad, &c, p, eps, f)?;
    for _ in 0..opts.max_newton_iter {
        let (jac, r) = assemble_plap_jacobian_and_residual(basis, quad, &c, p, eps, f)?;
        let rn = norm(&r);
        stage.residuals.push(rn);
        stage.energies.push(energy);
        if rn <= opts.nonlinear_tol * scale {
            return Ok((c, stage));
        }
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let lin = conjugate_gradient(&jac, &minus_r, opts.linear_tol, opts.max_linear_iter)?;
        stage.linear_iterations.push(lin.iterations);
        let d = lin.x;
        let slope = dot(&r, &d);
        let slack = 1e-14 * energy.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            match plap_energy(basis, quad, &cand, p, eps, f) {
                Ok(e) if e <= energy + opts.armijo * t * slope + slack => {
                    accepted = Some((cand, e));
                    break;
                }
                Ok(_) | Err(Error::Evaluation { .. }) => t *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((cand, e)) = accepted else {
            return Err(Error::Stagnation { eps, residual: rn });
        };
        stage.steps.push(t);
        c = cand;
        energy = e;
    }
    let (_, r) = assemble_plap(basis, quad, &c, p, eps, f, false)?;
    let rn = norm(&r);
    if rn <= opts.nonlinear_tol * scale {
        stage.residuals.push(rn);
        stage.energies.push(energy);
        return Ok((c, stage));
    }
    let tail = stage.residuals[stage.residuals.len().saturating_sub(5)..].to_vec();
    Err(Error::NoConvergence { method: "Newton", iterations: opts.max_newton_iter, tail })
}

/// `-div(|grad u|^{p-2} grad u) + u = f` with homogeneous boundary values.
///
/// Damped Newton on the regularized residual, warm-started from the
/// linear problem `p = 2`, with continuation in `p` and `eps` following
/// [`plap_schedule`]. Every accepted step satisfies the Armijo condition on
/// the regularized energy, so energies never increase within a stage.
pub fn solve_plap<F>(basis: &WebBasis, quad: &Quadrature, p: f64, f: F, opts: &SolveOptions) -> Result<PlapSolution>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    opts.validate()?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p = {p} outside (1, inf)")));
    }
    let warm = solve_vcpe(basis, quad, |_| 1.0, 1.0, &f, opts)?;
    let (_, r0) = assemble_plap(basis, quad, &vec![0.0; basis.len()], 2.0, 0.0, &f, false)?;
    let load_norm = norm(&r0);
    let scale = load_norm.max(1.0);
    let mut c = warm.field.coeffs;
    let mut stages = Vec::new();
    for (q, eps) in plap_schedule(p, opts) {
        let (next, stage) = newton(basis, quad, c, q, eps, &f, opts, scale)?;
        log::debug!("p = {q}, eps = {eps:e}: {} Newton steps, |R| = {:e}", stage.steps.len(), stage.residuals.last().unwrap());
        c = next;
        stages.push(stage);
    }
    Ok(PlapSolution { field: SolutionField::scalar(c), stages, load_norm })
}
