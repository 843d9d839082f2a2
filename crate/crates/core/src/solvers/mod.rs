//! Linear, Newton and Picard solvers on top of the assembled operators, plus
//! spectral diagnostics (Gram conditioning, discrete inf-sup constants).

mod cg;
mod plap;
mod spectra;
mod stokes;

pub use cg::{conjugate_gradient, CgOutcome};
pub use plap::{plap_schedule, solve_plap, NewtonStage, PlapSolution};
pub use spectra::{condition_number, estimate_infsup, InfSupEstimate};
pub use stokes::{
    incompressibility_defect, solve_quasi_newtonian, solve_saddle, solve_saddle_dense, SaddleSolution,
    StokesSolution,
};

use serde::{Deserialize, Serialize};

use crate::assembly::assemble_vcpe;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::webbasis::WebBasis;

/// Tolerances, iteration limits and continuation schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Relative residual for conjugate gradients.
    pub linear_tol: f64,
    pub max_linear_iter: usize,
    /// Newton stops at `||R|| <= nonlinear_tol * max(1, ||F||)`.
    pub nonlinear_tol: f64,
    pub max_newton_iter: usize,
    /// Step halvings allowed in the Armijo line search.
    pub max_halvings: usize,
    pub armijo: f64,
    /// First and last regularization in the continuation for `p < 2`.
    pub eps_start: f64,
    pub eps_final: f64,
    /// Picard stops at `||c_new - c|| <= picard_tol * max(1, ||c_new||)`.
    pub picard_tol: f64,
    pub max_picard_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            linear_tol: 1e-10,
            max_linear_iter: 20_000,
            nonlinear_tol: 1e-8,
            max_newton_iter: 50,
            max_halvings: 20,
            armijo: 1e-4,
            eps_start: 1e-1,
            eps_final: 1e-8,
            picard_tol: 1e-8,
            max_picard_iter: 100,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.linear_tol, self.nonlinear_tol, self.picard_tol, self.armijo, self.eps_final, self.eps_start];
        if tols.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::Config("solver tolerances must be positive and finite".into()));
        }
        if self.armijo >= 1.0 {
            return Err(Error::Config("Armijo constant must lie in (0, 1)".into()));
        }
        if self.eps_final > self.eps_start {
            return Err(Error::Config("eps_final must not exceed eps_start".into()));
        }
        if self.max_linear_iter == 0 || self.max_newton_iter == 0 || self.max_picard_iter == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Coefficients of a discrete field in the web basis; vector fields stack
/// one block of `basis.len()` coefficients per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionField {
    pub coeffs: Vec<f64>,
    pub components: usize,
}

impl SolutionField {
    pub fn scalar(coeffs: Vec<f64>) -> Self {
        Self { coeffs, components: 1 }
    }

    pub fn vector(coeffs: Vec<f64>) -> Self {
        Self { coeffs, components: 2 }
    }

    pub fn component(&self, k: usize) -> &[f64] {
        let n = self.coeffs.len() / self.components;
        &self.coeffs[k * n..(k + 1) * n]
    }

    /// Value and gradient of every component at `x`.
    pub fn eval(&self, basis: &WebBasis, x: [f64; 2]) -> Vec<(f64, [f64; 2])> {
        (0..self.components).map(|k| basis.eval_field(self.component(k), x)).collect()
    }
}

/// Solution of a linear problem with its CG record.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub field: SolutionField,
    pub cg: CgOutcome,
    /// `||A c - F|| / ||F||` recomputed from the assembled system.
    pub relative_residual: f64,
}

/// `-div(a grad u) + reaction u = f` with homogeneous boundary values,
/// solved by conjugate gradients.
pub fn solve_vcpe<A, F>(
    basis: &WebBasis,
    quad: &Quadrature,
    a: A,
    reaction: f64,
    f: F,
    opts: &SolveOptions,
) -> Result<LinearSolution>
where
    A: Fn([f64; 2]) -> f64 + Sync,
    F: Fn([f64; 2]) -> f64 + Sync,
{
    opts.validate()?;
    if !(reaction >= 0.0) {
        return Err(Error::Domain(format!("reaction coefficient {reaction} must be nonnegative")));
    }
    let sys = assemble_vcpe(basis, quad, a, reaction, f)?;
    let cg = conjugate_gradient(&sys.matrix, &sys.rhs, opts.linear_tol, opts.max_linear_iter)?;
    let ac = sys.matrix.mul_vec(&cg.x);
    let res: Vec<f64> = ac.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
    let fnorm = cg::norm(&sys.rhs);
    let relative_residual = if fnorm > 0.0 { cg::norm(&res) / fnorm } else { 0.0 };
    Ok(LinearSolution { field: SolutionField::scalar(cg.x.clone()), cg, relative_residual })
}

#[cfg(test)]
mod tests;
