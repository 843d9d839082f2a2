//! Fixtures shared by the benchmarks.

use webfem::{ImplicitDomain, LeafRule, Quadrature, QuadratureParams, Rect, TensorGrid, WebBasis};

/// Uniform grid of `cells` per axis on `[-1.2, 1.2]^2`.
pub fn grid(cells: usize, degree: usize) -> TensorGrid {
    TensorGrid::uniform(Rect { lo: [-1.2, -1.2], hi: [1.2, 1.2] }, cells, degree).expect("valid grid")
}

/// Web basis on the unit disk and its clipped-leaf quadrature.
pub fn disk(cells: usize, degree: usize) -> (WebBasis, Quadrature) {
    let basis = WebBasis::new(grid(cells, degree), ImplicitDomain::unit_disk(), 5).expect("valid basis");
    let params = QuadratureParams::for_degree(degree).with_leaf(LeafRule::Clip);
    let quad = Quadrature::for_basis(&basis, params).expect("valid quadrature");
    (basis, quad)
}
