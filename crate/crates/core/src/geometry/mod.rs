//! Implicit domains built from R-functions, weight functions, and the
//! classification of grid cells and B-spline indices against a domain.

mod classify;
mod domain;

pub use classify::{
    classify_cells, classify_indices, classify_rect, lipschitz_reach, CellClassification, CellKind, IndexKind, IndexSets,
};
pub use domain::{ImplicitDomain, Shape};
