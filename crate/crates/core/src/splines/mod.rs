//! Univariate non-uniform B-splines, their tensor products on a grid, local
//! polynomial pieces and the de Boor–Fix dual functionals.

mod dual;
mod grid;
mod knots;
mod polynomial;

pub use dual::deboor_fix;
pub use grid::{CellIndex, MultiIndex, Rect, TensorGrid};
pub use knots::{KnotVector, MAX_DEGREE};
pub use polynomial::{local_polynomial, PolynomialPiece};
