//! Weighted extended B-spline (web-spline) finite elements on implicitly
//! described planar domains.
//!
//! The crate covers the full pipeline of a meshfree Galerkin study:
//!
//! - [`splines`]: non-uniform B-splines, tensor grids, de Boor–Fix functionals
//! - [`geometry`]: R-function domains, weight functions, cell and index classification
//! - [`webbasis`]: extension coefficients, web-spline evaluation, the quasi-interpolant
//! - [`quadrature`]: Gauss rules with adaptive subdivision of cut cells
//! - [`assembly`]: sparse Galerkin operators for the linear, p-Laplace and mixed problems
//! - [`solvers`]: conjugate gradients, damped Newton, Picard iteration, inf-sup estimates
//! - [`analysis`]: manufactured solutions, error norms and convergence reports
//! - [`config`]: declarative run configuration and the study driver

pub mod analysis;
pub mod assembly;
pub mod config;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod solvers;
pub mod splines;
pub mod webbasis;

pub use analysis::{Case, ConvergenceReport, Measure, ProblemClass};
pub use assembly::{AssembledSystem, SparseMatrix};
pub use config::{run_study, RunConfig, StudyOptions};
pub use error::{Error, Result};
pub use geometry::{CellClassification, CellKind, ImplicitDomain, IndexSets, Shape};
pub use quadrature::{LeafRule, Quadrature, QuadratureParams};
pub use splines::{KnotVector, MultiIndex, PolynomialPiece, Rect, TensorGrid};
pub use webbasis::WebBasis;
