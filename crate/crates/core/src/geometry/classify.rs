use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ImplicitDomain;
use crate::error::{Error, Result};
use crate::splines::{CellIndex, MultiIndex, Rect, TensorGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Interior,
    Boundary,
    Exterior,
}

/// Label of every grid cell, stored row-major by cell ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct CellClassification {
    labels: Vec<CellKind>,
    n1: usize,
}

impl CellClassification {
    pub fn kind(&self, c: CellIndex) -> CellKind {
        self.labels[c[0] * self.n1 + c[1]]
    }

    pub fn labels(&self) -> &[CellKind] {
        &self.labels
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.labels.iter().filter(|&&k| k == kind).count()
    }
}

/// A safety factor times the largest gradient norm on a 3x3 lattice times the half diagonal:
/// a center value beyond this bound has the same sign on the whole box.
pub fn lipschitz_reach(domain: &ImplicitDomain, rect: &Rect) -> f64 {
    let mut lip: f64 = 0.0;
    for i in 0..3 {
        let x = rect.lo[0] + 0.5 * i as f64 * rect.width(0);
        for j in 0..3 {
            let g = domain.shape.eval([x, rect.lo[1] + 0.5 * j as f64 * rect.width(1)]).1;
            lip = lip.max(g[0].hypot(g[1]));
        }
    }
    1.25 * lip.max(1e-3) * 0.5 * rect.diameter()
}

/// `phi < 0` on all of `rect`, certified by [`lipschitz_reach`] on the box
/// or, failing that, on its quarters down to `depth` further levels.
fn certainly_outside(domain: &ImplicitDomain, rect: &Rect, depth: usize) -> bool {
    if domain.phi(rect.center()) <= -lipschitz_reach(domain, rect) {
        return true;
    }
    depth > 0 && rect.split().iter().all(|r| certainly_outside(domain, r, depth - 1))
}

/// Samples `phi` on a `samples x samples` lattice spanning `rect` (corners
/// included). All samples positive: Interior. All samples negative and the
/// sign certified by a Lipschitz bound: Exterior, so slivers of the domain
/// between samples are not lost. Anything else is Boundary.
pub fn classify_rect(domain: &ImplicitDomain, rect: &Rect, samples: usize) -> CellKind {
    let mut pos = 0;
    let mut neg = 0;
    let n = samples.max(2);
    for i in 0..n {
        let x = rect.lo[0] + rect.width(0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = rect.lo[1] + rect.width(1) * j as f64 / (n - 1) as f64;
            let v = domain.phi([x, y]);
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            }
        }
    }
    if pos == n * n && domain.phi(rect.center()) > 0.0 {
        CellKind::Interior
    } else if neg == n * n && certainly_outside(domain, rect, 3) {
        CellKind::Exterior
    } else {
        CellKind::Boundary
    }
}

pub fn classify_cells(domain: &ImplicitDomain, grid: &TensorGrid, samples_per_axis: usize) -> Result<CellClassification> {
    if samples_per_axis < 2 {
        return Err(Error::Domain("need at least two samples per axis".into()));
    }
    let labels = (0..grid.num_cells())
        .into_par_iter()
        .map(|o| classify_rect(domain, &grid.cell_rect(grid.cell_from_ordinal(o)), samples_per_axis))
        .collect();
    Ok(CellClassification { labels, n1: grid.cells_per_axis(1) })
}

/// Role of a tensor B-spline with respect to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    /// Support misses the domain.
    Irrelevant,
    /// Ordinal among the inner indices; also the web-spline number.
    Inner(usize),
    /// Ordinal among the outer indices.
    Outer(usize),
}

/// Relevant, inner and outer B-spline index sets with the data needed to
/// build extensions.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    n1: usize,
    kinds: Vec<IndexKind>,
    /// Inner multi-indices in lexicographic order.
    pub inner: Vec<MultiIndex>,
    /// Outer multi-indices in lexicographic order.
    pub outer: Vec<MultiIndex>,
    /// Interior cell closest (Hausdorff) to the support of each outer index.
    pub outer_cell: Vec<CellIndex>,
    /// Inner ordinals whose support contains `outer_cell[j]`.
    pub outer_partners: Vec<Vec<usize>>,
    /// Outer ordinals `j` with inner index `i` among their partners.
    pub inner_partners: Vec<Vec<usize>>,
    /// Center of the designated interior cell in the support of each inner index.
    pub inner_center: Vec<[f64; 2]>,
    /// Designated interior cell of each inner index.
    pub inner_cell: Vec<CellIndex>,
}

impl IndexSets {
    pub fn kind(&self, k: MultiIndex) -> IndexKind {
        self.kinds[k[0] * self.n1 + k[1]]
    }

    pub fn num_relevant(&self) -> usize {
        self.inner.len() + self.outer.len()
    }

    pub fn relevant(&self) -> Vec<MultiIndex> {
        let mut all: Vec<MultiIndex> = self.inner.iter().chain(&self.outer).copied().collect();
        all.sort();
        all
    }
}

/// Splits the relevant B-splines into inner and outer indices and picks the
/// interior cell used for each extension.
pub fn classify_indices(grid: &TensorGrid, cls: &CellClassification) -> Result<IndexSets> {
    let nb = [grid.num_basis(0), grid.num_basis(1)];
    let mut kinds = vec![IndexKind::Irrelevant; nb[0] * nb[1]];
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    let mut inner_cell = Vec::new();
    for k0 in 0..nb[0] {
        let cx = grid.support_cells(0, k0);
        for k1 in 0..nb[1] {
            let cy = grid.support_cells(1, k1);
            let mut any_relevant = false;
            let mut first_interior = None;
            for &a in &cx {
                for &b in &cy {
                    match cls.kind([a, b]) {
                        CellKind::Interior => {
                            any_relevant = true;
                            if first_interior.is_none() {
                                first_interior = Some([a, b]);
                            }
                        }
                        CellKind::Boundary => any_relevant = true,
                        CellKind::Exterior => {}
                    }
                }
            }
            let slot = &mut kinds[k0 * nb[1] + k1];
            if let Some(c) = first_interior {
                *slot = IndexKind::Inner(inner.len());
                inner.push([k0, k1]);
                inner_cell.push(c);
            } else if any_relevant {
                *slot = IndexKind::Outer(outer.len());
                outer.push([k0, k1]);
            }
        }
    }
    if inner.is_empty() {
        return Err(Error::Resolution(
            "no B-spline has an interior cell in its support; refine the grid".into(),
        ));
    }
    let interior: Vec<CellIndex> = grid
        .cells()
        .filter(|&c| cls.kind(c) == CellKind::Interior)
        .collect();
    let interior_rects: Vec<Rect> = interior.iter().map(|&c| grid.cell_rect(c)).collect();

    let outer_cell: Vec<CellIndex> = outer
        .par_iter()
        .map(|&j| {
            let supp = grid.support_rect(j);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (n, r) in interior_rects.iter().enumerate() {
                let d = supp.hausdorff(r);
                // cells are scanned lexicographically, so near-ties keep the first
                if d < best_d * (1.0 - 1e-12) {
                    best_d = d;
                    best = n;
                }
            }
            interior[best]
        })
        .collect();

    let mut outer_partners = Vec::with_capacity(outer.len());
    let mut inner_partners = vec![Vec::new(); inner.len()];
    for (jn, &q) in outer_cell.iter().enumerate() {
        let mut partners = Vec::new();
        for [a, b] in grid.active_on_cell(q) {
            match kinds[a * nb[1] + b] {
                IndexKind::Inner(i) => {
                    partners.push(i);
                    inner_partners[i].push(jn);
                }
                // every B-spline on an interior cell has that cell in its support
                _ => unreachable!("B-spline active on an interior cell is not inner"),
            }
        }
        outer_partners.push(partners);
    }
    let inner_center = inner_cell.iter().map(|&c| grid.cell_rect(c).center()).collect();
    Ok(IndexSets {
        n1: nb[1],
        kinds,
        inner,
        outer,
        outer_cell,
        outer_partners,
        inner_partners,
        inner_center,
        inner_cell,
    })
}
