//! Extension coefficients, web-spline evaluation and the quasi-interpolant.

mod projector;

pub use projector::{jackson_error, project};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    classify_cells, classify_indices, CellClassification, CellKind, ImplicitDomain, IndexKind, IndexSets,
};
use crate::splines::{deboor_fix, local_polynomial, CellIndex, Rect, TensorGrid};

/// Extension coefficients `e_ij` stored from both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionTable {
    by_outer: Vec<Vec<(usize, f64)>>,
    by_inner: Vec<Vec<(usize, f64)>>,
}

impl ExtensionTable {
    /// `(inner ordinal, e_ij)` for outer ordinal `j`.
    pub fn for_outer(&self, j: usize) -> &[(usize, f64)] {
        &self.by_outer[j]
    }

    /// `(outer ordinal, e_ij)` for inner ordinal `i`.
    pub fn for_inner(&self, i: usize) -> &[(usize, f64)] {
        &self.by_inner[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.by_outer.get(j)?.iter().find(|e| e.0 == i).map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.by_outer.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_abs(&self) -> f64 {
        self.by_outer.iter().flatten().map(|e| e.1.abs()).fold(0.0, f64::max)
    }
}

/// `e_ij = lambda_j p_ij` where `p_ij` is the polynomial piece of `b_i` on
/// the interior cell assigned to `j`.
pub fn build_extension(grid: &TensorGrid, idx: &IndexSets) -> Result<ExtensionTable> {
    let by_outer: Vec<Vec<(usize, f64)>> = (0..idx.outer.len())
        .into_par_iter()
        .map(|j| {
            idx.outer_partners[j]
                .iter()
                .map(|&i| {
                    let p = local_polynomial(grid, idx.inner[i], idx.outer_cell[j])?;
                    Ok((i, deboor_fix(grid.axes(), idx.outer[j], &p)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut by_inner = vec![Vec::new(); idx.inner.len()];
    for (j, row) in by_outer.iter().enumerate() {
        for &(i, e) in row {
            by_inner[i].push((j, e));
        }
    }
    Ok(ExtensionTable { by_outer, by_inner })
}

/// Statistics of a web basis for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub relevant: usize,
    pub inner: usize,
    pub outer: usize,
    pub cells_interior: usize,
    pub cells_boundary: usize,
    pub max_extension: f64,
    /// Smallest ratio of the width of an outer spline's extension cell to the
    /// width of that spline's support, over both axes.
    pub min_alpha: f64,
}

/// Web-splines `B_i = w / w(x_i) (b_i + sum_j e_ij b_j)` over one grid and domain.
#[derive(Debug, Clone)]
pub struct WebBasis {
    grid: TensorGrid,
    domain: ImplicitDomain,
    cls: CellClassification,
    idx: IndexSets,
    ext: ExtensionTable,
    wx: Vec<f64>,
}

/// The web-splines that do not vanish on one grid cell, written as a dense
/// combination of the B-splines active there.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub cell: CellIndex,
    spans: [usize; 2],
    count: [usize; 2],
    /// Web-spline ordinals, ascending.
    pub indices: Vec<usize>,
    /// `coeff[l * n_active + a]`, already divided by `w(x_i)`.
    coeff: Vec<f64>,
}

impl CellBasis {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl WebBasis {
    /// Classifies the grid against the domain and builds the extension table.
    pub fn new(grid: TensorGrid, domain: ImplicitDomain, samples: usize) -> Result<Self> {
        domain.validate()?;
        let cls = classify_cells(&domain, &grid, samples)?;
        Self::from_classification(grid, domain, cls)
    }

    pub fn from_classification(grid: TensorGrid, domain: ImplicitDomain, cls: CellClassification) -> Result<Self> {
        let idx = classify_indices(&grid, &cls)?;
        let ext = build_extension(&grid, &idx)?;
        let wx: Vec<f64> = idx.inner_center.iter().map(|&x| domain.weight(x)).collect();
        if let Some(i) = wx.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::Resolution(format!(
                "weight vanishes at the center of the interior cell of inner index {:?}",
                idx.inner[i]
            )));
        }
        let incomplete = grid.cells().any(|c| {
            cls.kind(c) != CellKind::Exterior
                && (0..2).any(|a| grid.active_range(a, c[a]).len() < grid.degree(a) + 1)
        });
        if incomplete {
            log::warn!("the domain reaches cells without a full set of B-splines; reproduction degrades there");
        }
        Ok(Self { grid, domain, cls, idx, ext, wx })
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }

    pub fn classification(&self) -> &CellClassification {
        &self.cls
    }

    pub fn index_sets(&self) -> &IndexSets {
        &self.idx
    }

    pub fn extension(&self) -> &ExtensionTable {
        &self.ext
    }

    /// Number of web-splines, `|I|`.
    pub fn len(&self) -> usize {
        self.idx.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `w(x_i)` for every inner index.
    pub fn center_weights(&self) -> &[f64] {
        &self.wx
    }

    pub fn summary(&self) -> BasisSummary {
        let mut min_alpha = f64::INFINITY;
        for (jn, &j) in self.idx.outer.iter().enumerate() {
            let q = self.grid.cell_rect(self.idx.outer_cell[jn]);
            let s = self.grid.support_rect(j);
            for a in 0..2 {
                min_alpha = min_alpha.min(q.width(a) / s.width(a));
            }
        }
        BasisSummary {
            relevant: self.idx.num_relevant(),
            inner: self.idx.inner.len(),
            outer: self.idx.outer.len(),
            cells_interior: self.cls.count(CellKind::Interior),
            cells_boundary: self.cls.count(CellKind::Boundary),
            max_extension: self.ext.max_abs(),
            min_alpha: if min_alpha.is_finite() { min_alpha } else { 1.0 },
        }
    }

    /// Boxes whose union contains the support of `B_i`.
    pub fn support_union(&self, i: usize) -> Vec<Rect> {
        let mut v = vec![self.grid.support_rect(self.idx.inner[i])];
        v.extend(self.ext.for_inner(i).iter().map(|&(j, _)| self.grid.support_rect(self.idx.outer[j])));
        v
    }

    /// Web-splines living on cell `c`. Empty on exterior cells.
    pub fn cell_basis(&self, c: CellIndex) -> CellBasis {
        let spans = [self.grid.span_of_cell(0, c[0]), self.grid.span_of_cell(1, c[1])];
        let r0 = self.grid.active_range(0, c[0]);
        let r1 = self.grid.active_range(1, c[1]);
        let count = [r0.len(), r1.len()];
        let n_active = count[0] * count[1];
        let mut contrib: Vec<(usize, usize, f64)> = Vec::new();
        if self.cls.kind(c) != CellKind::Exterior {
            for (a, k0) in r0.clone().enumerate() {
                for (b, k1) in r1.clone().enumerate() {
                    let slot = a * count[1] + b;
                    match self.idx.kind([k0, k1]) {
                        IndexKind::Inner(i) => contrib.push((i, slot, 1.0)),
                        IndexKind::Outer(j) => {
                            contrib.extend(self.ext.for_outer(j).iter().map(|&(i, e)| (i, slot, e)))
                        }
                        IndexKind::Irrelevant => {}
                    }
                }
            }
        }
        contrib.sort_by_key(|t| (t.0, t.1));
        let mut indices: Vec<usize> = contrib.iter().map(|t| t.0).collect();
        indices.dedup();
        let mut coeff = vec![0.0; indices.len() * n_active];
        let mut l = 0;
        for &(i, slot, e) in &contrib {
            while indices[l] != i {
                l += 1;
            }
            coeff[l * n_active + slot] += e / self.wx[i];
        }
        CellBasis { cell: c, spans, count, indices, coeff }
    }

    /// Values and gradients of the web-splines of `cb` at `x`. Outside the
    /// domain every web-spline vanishes together with its gradient.
    pub fn eval_cell(&self, cb: &CellBasis, x: [f64; 2], values: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        let n = cb.indices.len();
        values.clear();
        grads.clear();
        values.resize(n, 0.0);
        grads.resize(n, [0.0; 2]);
        let (w, gw) = match self.domain.weight_with_gradient(x) {
            Ok(v) if v.0 > 0.0 => v,
            _ => return,
        };
        let mut v0 = [0.0; 16];
        let mut d0 = [0.0; 16];
        let mut v1 = [0.0; 16];
        let mut d1 = [0.0; 16];
        self.grid.axis(0).eval_active(cb.spans[0], x[0], &mut v0, &mut d0);
        self.grid.axis(1).eval_active(cb.spans[1], x[1], &mut v1, &mut d1);
        let n_active = cb.count[0] * cb.count[1];
        let mut b = [0.0; 256];
        let mut bx = [0.0; 256];
        let mut by = [0.0; 256];
        for a in 0..cb.count[0] {
            for c in 0..cb.count[1] {
                let s = a * cb.count[1] + c;
                b[s] = v0[a] * v1[c];
                bx[s] = d0[a] * v1[c];
                by[s] = v0[a] * d1[c];
            }
        }
        for l in 0..n {
            let row = &cb.coeff[l * n_active..(l + 1) * n_active];
            let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for (q, &e) in row.iter().enumerate() {
                if e != 0.0 {
                    s += e * b[q];
                    sx += e * bx[q];
                    sy += e * by[q];
                }
            }
            values[l] = w * s;
            grads[l] = [gw[0] * s + w * sx, gw[1] * s + w * sy];
        }
    }

    /// Cell whose polynomial pieces are used at `x`.
    pub fn locate(&self, x: [f64; 2]) -> Option<CellIndex> {
        self.grid.locate(x)
    }

    /// `B_i(x)` or one of its first partial derivatives.
    pub fn eval_web(&self, i: usize, x: [f64; 2], deriv: [usize; 2]) -> Result<f64> {
        if i >= self.len() {
            return Err(Error::Domain(format!("web-spline {i} out of range")));
        }
        if deriv[0] + deriv[1] > 1 {
            return Err(Error::Domain("only first derivatives of web-splines are supported".into()));
        }
        let Some(c) = self.locate(x) else {
            return Ok(0.0);
        };
        let cb = self.cell_basis(c);
        let Ok(l) = cb.indices.binary_search(&i) else {
            return Ok(0.0);
        };
        let (mut v, mut g) = (Vec::new(), Vec::new());
        self.eval_cell(&cb, x, &mut v, &mut g);
        Ok(match deriv {
            [0, 0] => v[l],
            [1, 0] => g[l][0],
            _ => g[l][1],
        })
    }

    /// Value and gradient of `sum_i coeffs[i] B_i` at `x`.
    pub fn eval_field(&self, coeffs: &[f64], x: [f64; 2]) -> (f64, [f64; 2]) {
        let Some(c) = self.locate(x) else {
            return (0.0, [0.0; 2]);
        };
        let cb = self.cell_basis(c);
        let (mut v, mut g) = (Vec::new(), Vec::new());
        self.eval_cell(&cb, x, &mut v, &mut g);
        combine(&cb.indices, coeffs, &v, &g)
    }
}

/// `sum_l coeffs[indices[l]] (values[l], grads[l])`.
pub fn combine(indices: &[usize], coeffs: &[f64], values: &[f64], grads: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let mut u = 0.0;
    let mut du = [0.0; 2];
    for (l, &i) in indices.iter().enumerate() {
        let c = coeffs[i];
        u += c * values[l];
        du[0] += c * grads[l][0];
        du[1] += c * grads[l][1];
    }
    (u, du)
}
