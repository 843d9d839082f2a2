//! Gauss–Legendre rules on interior cells and adaptive dyadic subdivision on
//! cut cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lipschitz_reach, CellClassification, CellKind, ImplicitDomain};
use crate::splines::{CellIndex, Rect, TensorGrid};

/// Treatment of cut sub-boxes at the maximal subdivision depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafRule {
    /// Keep the whole leaf when `phi` is positive at its center. First order
    /// in the leaf size.
    #[default]
    Center,
    /// Gauss rule along one axis, and along the other axis Gauss rules on
    /// the sub-intervals where `phi > 0`, with the end points found by
    /// bisection. High order as long as the zero set is a graph over the
    /// leaf.
    Clip,
}

/// Gauss points per axis and the subdivision depth limit on boundary cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureParams {
    pub order: usize,
    pub depth: usize,
    #[serde(default)]
    pub leaf: LeafRule,
}

impl QuadratureParams {
    pub fn for_degree(degree: usize) -> Self {
        Self { order: degree + 1, depth: 6, leaf: LeafRule::Center }
    }

    pub fn with_leaf(self, leaf: LeafRule) -> Self {
        Self { leaf, ..self }
    }

    /// Same depth, one more Gauss point per axis.
    pub fn raised(self) -> Self {
        Self { order: self.order + 1, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 32 {
            return Err(Error::Config(format!("quadrature order {} not in 1..=32", self.order)));
        }
        if self.depth > 12 {
            return Err(Error::Config(format!("subdivision depth {} exceeds 12", self.depth)));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Quadrature points and weights attached to one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRule {
    pub cell: CellIndex,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Sum with pairwise splitting; keeps the rounding error independent of the
/// evaluation schedule.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn push_tensor(rect: &Rect, nodes: &[f64], weights: &[f64], rule: &mut CellRule) {
    let area = rect.area();
    for (i, &s) in nodes.iter().enumerate() {
        let x = rect.lo[0] + s * rect.width(0);
        for (j, &t) in nodes.iter().enumerate() {
            rule.points.push([x, rect.lo[1] + t * rect.width(1)]);
            rule.weights.push(area * weights[i] * weights[j]);
        }
    }
}

/// Sign pattern of `phi` on the 3x3 lattice of a sub-box.
fn sub_box_signs(domain: &ImplicitDomain, rect: &Rect) -> (bool, bool) {
    let (mut pos, mut neg) = (false, false);
    for i in 0..3 {
        let x = rect.lo[0] + 0.5 * i as f64 * rect.width(0);
        for j in 0..3 {
            let v = domain.phi([x, rect.lo[1] + 0.5 * j as f64 * rect.width(1)]);
            pos |= v > 0.0;
            neg |= v < 0.0;
        }
    }
    (pos, neg)
}

/// Conservative version of [`sub_box_signs`]: the box counts as one-signed
/// only if the center value exceeds [`lipschitz_reach`], so thin slivers of
/// the zero set between samples are not lost.
fn lipschitz_signs(domain: &ImplicitDomain, rect: &Rect) -> (bool, bool) {
    let reach = lipschitz_reach(domain, rect);
    let v = domain.phi(rect.center());
    (v > -reach, v < reach)
}

fn subdivide(
    domain: &ImplicitDomain,
    rect: Rect,
    level: usize,
    depth: usize,
    leaf: LeafRule,
    nodes: &[f64],
    weights: &[f64],
    rule: &mut CellRule,
) {
    let (pos, neg) = match leaf {
        LeafRule::Center => sub_box_signs(domain, &rect),
        LeafRule::Clip => lipschitz_signs(domain, &rect),
    };
    if !pos {
        return;
    }
    if !neg {
        // touching the zero set from inside still counts as inside
        push_tensor(&rect, nodes, weights, rule);
        return;
    }
    if level == depth {
        match leaf {
            LeafRule::Center => {
                if domain.phi(rect.center()) > 0.0 {
                    push_tensor(&rect, nodes, weights, rule);
                }
            }
            LeafRule::Clip => push_clipped(domain, &rect, nodes, weights, rule),
        }
        return;
    }
    for sub in rect.split() {
        subdivide(domain, sub, level + 1, depth, leaf, nodes, weights, rule);
    }
}

/// Sign changes of `g` on `[lo, hi]`, located by bisection.
fn sign_changes<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> Vec<f64> {
    const SAMPLES: usize = 8;
    let mut roots = Vec::new();
    let mut prev = (lo, g(lo));
    for k in 1..=SAMPLES {
        let t = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let v = g(t);
        if (prev.1 > 0.0) != (v > 0.0) {
            let (mut a, mut b) = (prev.0, t);
            let sa = prev.1 > 0.0;
            while b - a > 1e-15 * (1.0 + a.abs().max(b.abs())) {
                let m = 0.5 * (a + b);
                if (g(m) > 0.0) == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (t, v);
    }
    roots
}

/// `[lo, hi]` split at the given interior points.
fn pieces(lo: f64, hi: f64, mut cuts: Vec<f64>) -> Vec<(f64, f64)> {
    cuts.retain(|&c| c > lo && c < hi);
    cuts.sort_by(f64::total_cmp);
    let mut all = vec![lo];
    all.extend(cuts);
    all.push(hi);
    all.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

fn push_clipped(domain: &ImplicitDomain, rect: &Rect, nodes: &[f64], weights: &[f64], rule: &mut CellRule) {
    let grad = domain.shape.eval(rect.center()).1;
    // integrate last along the axis where phi varies fastest
    let inner = if grad[1].abs() >= grad[0].abs() { 1 } else { 0 };
    let outer = 1 - inner;
    let at = |o: f64, t: f64| {
        let mut x = [0.0; 2];
        x[outer] = o;
        x[inner] = t;
        x
    };
    // the inner length has kinks where the zero set crosses the two faces
    let mut kinks = sign_changes(&|o| domain.phi(at(o, rect.lo[inner])), rect.lo[outer], rect.hi[outer]);
    kinks.extend(sign_changes(&|o| domain.phi(at(o, rect.hi[inner])), rect.lo[outer], rect.hi[outer]));
    for (oa, ob) in pieces(rect.lo[outer], rect.hi[outer], kinks) {
        for (i, &s) in nodes.iter().enumerate() {
            let xo = oa + s * (ob - oa);
            let wo = weights[i] * (ob - oa);
            let g = |t: f64| domain.phi(at(xo, t));
            let roots = sign_changes(&g, rect.lo[inner], rect.hi[inner]);
            for (a, b) in pieces(rect.lo[inner], rect.hi[inner], roots) {
                if !(g(0.5 * (a + b)) > 0.0) {
                    continue;
                }
                for (j, &t) in nodes.iter().enumerate() {
                    let w = wo * weights[j] * (b - a);
                    if w > 0.0 {
                        rule.points.push(at(xo, a + t * (b - a)));
                        rule.weights.push(w);
                    }
                }
            }
        }
    }
}

/// Rule for a single cell of the given kind.
pub fn cell_rule(
    domain: &ImplicitDomain,
    rect: &Rect,
    cell: CellIndex,
    kind: CellKind,
    params: QuadratureParams,
) -> CellRule {
    let (nodes, weights) = gauss_legendre(params.order);
    let mut rule = CellRule { cell, points: Vec::new(), weights: Vec::new() };
    match kind {
        CellKind::Interior => push_tensor(rect, &nodes, &weights, &mut rule),
        CellKind::Boundary => subdivide(domain, *rect, 0, params.depth, params.leaf, &nodes, &weights, &mut rule),
        CellKind::Exterior => {}
    }
    rule
}

/// Quadrature over the domain, stored per non-exterior cell in cell order.
#[derive(Debug, Clone)]
pub struct Quadrature {
    params: QuadratureParams,
    rules: Vec<CellRule>,
}

impl Quadrature {
    pub fn new(
        domain: &ImplicitDomain,
        grid: &TensorGrid,
        cls: &CellClassification,
        params: QuadratureParams,
    ) -> Result<Self> {
        params.validate()?;
        let cells: Vec<CellIndex> = grid.cells().filter(|&c| cls.kind(c) != CellKind::Exterior).collect();
        let rules = cells
            .par_iter()
            .map(|&c| cell_rule(domain, &grid.cell_rect(c), c, cls.kind(c), params))
            .filter(|r| !r.points.is_empty())
            .collect();
        Ok(Self { params, rules })
    }

    /// Rule over the cells of an existing web basis.
    pub fn for_basis(basis: &crate::webbasis::WebBasis, params: QuadratureParams) -> Result<Self> {
        Self::new(basis.domain(), basis.grid(), basis.classification(), params)
    }

    pub fn params(&self) -> QuadratureParams {
        self.params
    }

    pub fn rules(&self) -> &[CellRule] {
        &self.rules
    }

    pub fn num_points(&self) -> usize {
        self.rules.iter().map(|r| r.points.len()).sum()
    }

    /// Integral of `f` over the domain. Cells are evaluated in parallel and
    /// reduced in cell order, so the result does not depend on scheduling.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        let per_cell: Vec<f64> = self
            .rules
            .par_iter()
            .map(|r| {
                let mut terms = Vec::with_capacity(r.points.len());
                for (&x, &w) in r.points.iter().zip(&r.weights) {
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(Error::Evaluation { x: x[0], y: x[1] });
                    }
                    terms.push(w * v);
                }
                Ok(pairwise_sum(&terms))
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&per_cell))
    }
}

/// One-shot integration of `f` over the domain.
pub fn integrate<F>(
    domain: &ImplicitDomain,
    grid: &TensorGrid,
    cls: &CellClassification,
    params: QuadratureParams,
    f: F,
) -> Result<f64>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    Quadrature::new(domain, grid, cls, params)?.integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_cells, Shape};
    use std::f64::consts::PI;

    fn disk_setup(cells: usize, degree: usize) -> (ImplicitDomain, TensorGrid, CellClassification) {
        let d = ImplicitDomain::unit_disk();
        let g = TensorGrid::uniform(Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }, cells, degree).unwrap();
        let c = classify_cells(&d, &g, 5).unwrap();
        (d, g, c)
    }

    #[test]
    fn gauss_rule_exactness() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            assert!(w.iter().all(|&w| w > 0.0));
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn disk_area() {
        let (d, g, c) = disk_setup(16, 2);
        let area = integrate(&d, &g, &c, QuadratureParams { order: 3, depth: 6, leaf: LeafRule::Center }, |_| 1.0).unwrap();
        assert!((area - PI).abs() / PI <= 1e-3, "{area}");
        let q = integrate(&d, &g, &c, QuadratureParams { order: 3, depth: 6, leaf: LeafRule::Center }, |x| {
            let s = 1.0 - x[0] * x[0] - x[1] * x[1];
            s * s
        })
        .unwrap();
        assert!((q - PI / 3.0).abs() / (PI / 3.0) <= 1e-3);
    }

    #[test]
    fn clipped_leaves_are_high_order() {
        let (d, g, c) = disk_setup(16, 2);
        for depth in [1, 3] {
            let p = QuadratureParams { order: 4, depth, leaf: LeafRule::Clip };
            let q = Quadrature::new(&d, &g, &c, p).unwrap();
            assert!(q.rules().iter().flat_map(|r| &r.weights).all(|&w| w > 0.0));
            let area = q.integrate(|_| 1.0).unwrap();
            assert!((area - PI).abs() <= 1e-8, "depth {depth}: {}", area - PI);
            let m = q.integrate(|x| (1.0 - x[0] * x[0] - x[1] * x[1]).powi(2)).unwrap();
            assert!((m - PI / 3.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn aligned_box_is_exact() {
        let d = ImplicitDomain::new(Shape::rect([-0.5, -0.25], [0.75, 0.5]), 1.0).unwrap();
        let g = TensorGrid::uniform(Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }, 8, 2).unwrap();
        let c = classify_cells(&d, &g, 5).unwrap();
        let q = Quadrature::new(&d, &g, &c, QuadratureParams { order: 3, depth: 6, leaf: LeafRule::Center }).unwrap();
        let area = q.integrate(|_| 1.0).unwrap();
        assert!((area - 1.25 * 0.75).abs() < 1e-13);
        assert!(q.rules().iter().all(|r| r.points.len() == 9));
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let (d, g, c) = disk_setup(4, 1);
        let e = integrate(&d, &g, &c, QuadratureParams { order: 2, depth: 2, leaf: LeafRule::Center }, |_| f64::NAN);
        assert!(matches!(e, Err(Error::Evaluation { .. })));
    }
}
