use serde::{Deserialize, Serialize};

use super::KnotVector;
use crate::error::{Error, Result};

/// Multi-index of a tensor-product B-spline.
pub type MultiIndex = [usize; 2];

/// Ordinal of a grid cell along each axis.
pub type CellIndex = [usize; 2];

/// Axis-aligned box `[lo[0], hi[0]] x [lo[1], hi[1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn area(&self) -> f64 {
        self.width(0) * self.width(1)
    }

    pub fn diameter(&self) -> f64 {
        self.width(0).hypot(self.width(1))
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.lo[0], self.lo[1]],
            [self.hi[0], self.lo[1]],
            [self.lo[0], self.hi[1]],
            [self.hi[0], self.hi[1]],
        ]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..2).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance_to(&self, x: [f64; 2]) -> f64 {
        let dx = (self.lo[0] - x[0]).max(0.0).max(x[0] - self.hi[0]);
        let dy = (self.lo[1] - x[1]).max(0.0).max(x[1] - self.hi[1]);
        dx.hypot(dy)
    }

    /// Hausdorff distance between two closed boxes. The distance to a convex
    /// set is convex, so each one-sided maximum is attained at a corner.
    pub fn hausdorff(&self, other: &Rect) -> f64 {
        let one_sided = |a: &Rect, b: &Rect| {
            a.corners()
                .iter()
                .map(|&c| b.distance_to(c))
                .fold(0.0f64, f64::max)
        };
        one_sided(self, other).max(one_sided(other, self))
    }

    /// The four quadrants of the box.
    pub fn split(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect { lo: self.lo, hi: c },
            Rect { lo: [c[0], self.lo[1]], hi: [self.hi[0], c[1]] },
            Rect { lo: [self.lo[0], c[1]], hi: [c[0], self.hi[1]] },
            Rect { lo: c, hi: self.hi },
        ]
    }
}

/// Tensor-product grid built from one knot vector per axis.
///
/// Cells are the products of nondegenerate knot intervals. Only the cells
/// with `m <= mu < num_basis` on both axes carry a full set of `(m + 1)^2`
/// B-splines; see [`TensorGrid::complete_region`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: [KnotVector; 2],
    cell_spans: [Vec<usize>; 2],
    span_cell: [Vec<Option<usize>>; 2],
    meshsize: f64,
}

impl TensorGrid {
    pub fn new(x: KnotVector, y: KnotVector) -> Result<Self> {
        let axes = [x, y];
        let mut cell_spans: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut span_cell: [Vec<Option<usize>>; 2] = [Vec::new(), Vec::new()];
        for a in 0..2 {
            let kv = &axes[a];
            let m = kv.degree();
            let spans = kv.nonempty_spans();
            if !spans.iter().any(|&mu| mu >= m && mu < kv.num_basis()) {
                return Err(Error::Domain(format!("axis {a} has no complete grid cell")));
            }
            let mut lookup = vec![None; kv.knots().len()];
            for (c, &mu) in spans.iter().enumerate() {
                lookup[mu] = Some(c);
            }
            cell_spans[a] = spans;
            span_cell[a] = lookup;
        }
        let width = |a: usize| {
            let t = axes[a].knots();
            cell_spans[a]
                .iter()
                .map(|&mu| t[mu + 1] - t[mu])
                .fold(0.0f64, f64::max)
        };
        let meshsize = width(0).hypot(width(1));
        Ok(Self { axes, cell_spans, span_cell, meshsize })
    }

    /// Grid from strictly increasing breakpoints per axis, extended beyond
    /// the breakpoint range so that every B-spline touching it is complete.
    pub fn from_breaks(bx: &[f64], by: &[f64], degree: usize) -> Result<Self> {
        Self::new(KnotVector::extended(bx, degree)?, KnotVector::extended(by, degree)?)
    }

    /// Uniform grid with `cells` intervals per axis on the box `bounds`.
    pub fn uniform(bounds: Rect, cells: usize, degree: usize) -> Result<Self> {
        Self::new(
            KnotVector::uniform(bounds.lo[0], bounds.hi[0], cells, degree)?,
            KnotVector::uniform(bounds.lo[1], bounds.hi[1], cells, degree)?,
        )
    }

    pub fn axis(&self, a: usize) -> &KnotVector {
        &self.axes[a]
    }

    pub fn axes(&self) -> &[KnotVector; 2] {
        &self.axes
    }

    pub fn degree(&self, a: usize) -> usize {
        self.axes[a].degree()
    }

    /// Maximum cell diameter.
    pub fn meshsize(&self) -> f64 {
        self.meshsize
    }

    pub fn cells_per_axis(&self, a: usize) -> usize {
        self.cell_spans[a].len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis(0) * self.cells_per_axis(1)
    }

    pub fn num_basis(&self, a: usize) -> usize {
        self.axes[a].num_basis()
    }

    /// Row-major ordinal of a cell; increasing ordinals are lexicographic.
    pub fn cell_ordinal(&self, c: CellIndex) -> usize {
        c[0] * self.cells_per_axis(1) + c[1]
    }

    pub fn cell_from_ordinal(&self, o: usize) -> CellIndex {
        let n1 = self.cells_per_axis(1);
        [o / n1, o % n1]
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let (n0, n1) = (self.cells_per_axis(0), self.cells_per_axis(1));
        (0..n0).flat_map(move |a| (0..n1).map(move |b| [a, b]))
    }

    pub fn span_of_cell(&self, a: usize, c: usize) -> usize {
        self.cell_spans[a][c]
    }

    pub fn cell_of_span(&self, a: usize, mu: usize) -> Option<usize> {
        self.span_cell[a].get(mu).copied().flatten()
    }

    pub fn cell_rect(&self, c: CellIndex) -> Rect {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..2 {
            let mu = self.cell_spans[a][c[a]];
            let t = self.axes[a].knots();
            lo[a] = t[mu];
            hi[a] = t[mu + 1];
        }
        Rect { lo, hi }
    }

    /// Box covered by the cells.
    pub fn bounds(&self) -> Rect {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..2 {
            let t = self.axes[a].knots();
            lo[a] = t[self.cell_spans[a][0]];
            hi[a] = t[*self.cell_spans[a].last().unwrap() + 1];
        }
        Rect { lo, hi }
    }

    /// Box on which the B-splines form a partition of unity.
    pub fn complete_region(&self) -> Rect {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..2 {
            let kv = &self.axes[a];
            lo[a] = kv.knots()[kv.degree()];
            hi[a] = kv.knots()[kv.num_basis()];
        }
        Rect { lo, hi }
    }

    /// Cell containing `x`, right-continuous at interior knots.
    pub fn locate(&self, x: [f64; 2]) -> Option<CellIndex> {
        let mut c = [0; 2];
        for a in 0..2 {
            let mu = self.axes[a].span(x[a])?;
            c[a] = match self.cell_of_span(a, mu) {
                Some(ci) => ci,
                // the last knot of the cell range belongs to the last cell
                None if x[a] == self.bounds().hi[a] => self.cells_per_axis(a) - 1,
                None => return None,
            };
        }
        Some(c)
    }

    /// Closed support box of the tensor B-spline `k`.
    pub fn support_rect(&self, k: MultiIndex) -> Rect {
        let (x0, x1) = self.axes[0].support(k[0]);
        let (y0, y1) = self.axes[1].support(k[1]);
        Rect { lo: [x0, y0], hi: [x1, y1] }
    }

    /// Cell ordinals along axis `a` lying in the support of univariate basis `k`.
    pub fn support_cells(&self, a: usize, k: usize) -> Vec<usize> {
        let m = self.degree(a);
        (k..=k + m).filter_map(|mu| self.cell_of_span(a, mu)).collect()
    }

    /// Multi-indices of the B-splines that do not vanish on cell `c`.
    pub fn active_on_cell(&self, c: CellIndex) -> impl Iterator<Item = MultiIndex> {
        let r0 = self.active_range(0, c[0]);
        let r1 = self.active_range(1, c[1]);
        r0.flat_map(move |a| r1.clone().map(move |b| [a, b]))
    }

    /// Univariate indices along axis `a` that do not vanish on cell `c`.
    pub fn active_range(&self, a: usize, c: usize) -> std::ops::Range<usize> {
        let mu = self.cell_spans[a][c];
        let m = self.degree(a);
        mu.saturating_sub(m)..(mu + 1).min(self.num_basis(a))
    }

    fn check_multi(&self, k: MultiIndex) -> Result<()> {
        for a in 0..2 {
            if k[a] >= self.num_basis(a) {
                return Err(Error::Domain(format!(
                    "basis index {k:?} out of range on axis {a}"
                )));
            }
        }
        Ok(())
    }

    /// Tensor B-spline `b_k` (or a partial derivative of it) at `x`.
    pub fn eval_tensor(&self, k: MultiIndex, x: [f64; 2], deriv: [usize; 2]) -> Result<f64> {
        self.check_multi(k)?;
        let f0 = self.axes[0].eval_deriv(k[0], x[0], deriv[0])?;
        if f0 == 0.0 {
            return Ok(0.0);
        }
        Ok(f0 * self.axes[1].eval_deriv(k[1], x[1], deriv[1])?)
    }

    /// Global dyadic refinement: a midpoint is inserted into every cell on
    /// both axes, and the knots outside the grid region are rebuilt from the
    /// new end-cell widths so the region itself is unchanged.
    pub fn refine(&self) -> Result<Self> {
        let mut axes = Vec::with_capacity(2);
        for kv in &self.axes {
            let t = kv.knots();
            let m = kv.degree();
            let region = &t[m..t.len() - m];
            let mut breaks = Vec::with_capacity(2 * region.len());
            for w in region.windows(2) {
                if w[0] < w[1] {
                    breaks.push(w[0]);
                    breaks.push(0.5 * (w[0] + w[1]));
                }
            }
            breaks.push(region[region.len() - 1]);
            axes.push(KnotVector::extended(&breaks, m)?);
        }
        let y = axes.pop().unwrap();
        let x = axes.pop().unwrap();
        Self::new(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Rect {
        Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }
    }

    #[test]
    fn uniform_grid_layout() {
        let g = TensorGrid::uniform(unit_box(), 4, 2).unwrap();
        // four cells in the box plus two padding cells per side
        assert_eq!(g.cells_per_axis(0), 8);
        assert_eq!(g.num_basis(0), 6);
        assert!((g.meshsize() - 0.5f64.hypot(0.5)).abs() < 1e-15);
        assert_eq!(g.complete_region(), unit_box());
        assert_eq!(g.bounds(), Rect { lo: [-2.0, -2.0], hi: [2.0, 2.0] });
        assert_eq!(g.locate([-1.0, -1.0]), Some([2, 2]));
        assert_eq!(g.locate([2.0, 2.0]), Some([7, 7]));
        assert_eq!(g.locate([0.0, 0.2]), Some([4, 4]));
        assert_eq!(g.locate([2.5, 0.0]), None);
        assert_eq!(g.active_on_cell([2, 2]).count(), 9);
        assert_eq!(g.active_on_cell([0, 0]).count(), 1);
        assert_eq!(g.active_on_cell([0, 1]).count(), 2);
    }

    #[test]
    fn hat_peak_tensor() {
        let g = TensorGrid::uniform(unit_box(), 4, 1).unwrap();
        // basis 2 on each axis has its peak at the knot 0
        assert_eq!(g.eval_tensor([2, 2], [0.0, 0.0], [0, 0]).unwrap(), 1.0);
        assert!(g.eval_tensor([9, 0], [0.0, 0.0], [0, 0]).is_err());
    }

    #[test]
    fn refinement_halves_meshsize() {
        let g = TensorGrid::uniform(unit_box(), 4, 3).unwrap();
        let r = g.refine().unwrap();
        assert_eq!(r.cells_per_axis(0), 8 + 2 * 3);
        assert!((r.meshsize() - 0.5 * g.meshsize()).abs() < 1e-15);
        assert_eq!(r.complete_region(), g.complete_region());
    }

    #[test]
    fn hausdorff_boxes() {
        let a = Rect { lo: [0.0, 0.0], hi: [2.0, 1.0] };
        let b = Rect { lo: [2.0, 0.0], hi: [3.0, 1.0] };
        assert_eq!(a.hausdorff(&b), 2.0);
        assert_eq!(a.hausdorff(&a), 0.0);
    }
}
