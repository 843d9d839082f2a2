use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::geometry::CellKind;
use crate::quadrature::Quadrature;
use crate::splines::{CellIndex, Rect};
use crate::webbasis::WebBasis;

/// Viscosity law `a(s)` as a function of `s = |D(u)|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Viscosity {
    Constant { value: f64 },
    /// `a_inf + (a0 - a_inf) (1 + s)^{(r - 2) / 2}`.
    Carreau { a0: f64, a_inf: f64, r: f64 },
}

impl Default for Viscosity {
    fn default() -> Self {
        Viscosity::Carreau { a0: 2.0, a_inf: 1.0, r: 1.5 }
    }
}

impl Viscosity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Viscosity::Constant { value } if value > 0.0 && value.is_finite() => Ok(()),
            Viscosity::Carreau { a0, a_inf, r } if a0 > 0.0 && a_inf > 0.0 && r > 1.0 && r.is_finite() => Ok(()),
            _ => Err(Error::Config(format!("viscosity {self:?} is not positive and bounded"))),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Viscosity::Constant { value } => value,
            Viscosity::Carreau { a0, a_inf, r } => a_inf + (a0 - a_inf) * (1.0 + s).powf(0.5 * (r - 2.0)),
        }
    }

    /// `da/ds`.
    pub fn deriv(&self, s: f64) -> f64 {
        match *self {
            Viscosity::Constant { .. } => 0.0,
            Viscosity::Carreau { a0, a_inf, r } => (a0 - a_inf) * 0.5 * (r - 2.0) * (1.0 + s).powf(0.5 * (r - 4.0)),
        }
    }
}

/// Discontinuous pressures: tensor Legendre polynomials of a fixed per-axis
/// degree on macro-elements of `macro_size x macro_size` grid cells.
///
/// A macro-element is active when it contains an interior cell. Cut cells
/// in inactive macro-elements join the active element with the nearest
/// center, so every element has a substantial part inside the domain.
#[derive(Debug, Clone)]
pub struct PressureSpace {
    degree: usize,
    macro_size: usize,
    elements: Vec<Rect>,
    cell_element: Vec<Option<usize>>,
    n1: usize,
}

fn legendre(n: usize, s: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = s;
    }
    for k in 2..=n {
        out[k] = ((2 * k - 1) as f64 * s * out[k - 1] - (k - 1) as f64 * out[k - 2]) / k as f64;
    }
}

impl PressureSpace {
    pub fn new(basis: &WebBasis, macro_size: usize, degree: usize) -> Result<Self> {
        if macro_size == 0 {
            return Err(Error::Config("pressure macro size must be positive".into()));
        }
        if degree > 8 {
            return Err(Error::Config(format!("pressure degree {degree} exceeds 8")));
        }
        let grid = basis.grid();
        let cls = basis.classification();
        let n = [grid.cells_per_axis(0), grid.cells_per_axis(1)];
        let nm = [n[0].div_ceil(macro_size), n[1].div_ceil(macro_size)];
        let macro_of = |c: CellIndex| [c[0] / macro_size, c[1] / macro_size];
        let mut active = vec![false; nm[0] * nm[1]];
        for c in grid.cells() {
            if cls.kind(c) == CellKind::Interior {
                let m = macro_of(c);
                active[m[0] * nm[1] + m[1]] = true;
            }
        }
        let mut element_of_macro = vec![None; active.len()];
        let mut centers = Vec::new();
        for (o, &a) in active.iter().enumerate() {
            if a {
                element_of_macro[o] = Some(centers.len());
                let m = [o / nm[1], o % nm[1]];
                let lo = grid.cell_rect([m[0] * macro_size, m[1] * macro_size]).lo;
                let hi = grid
                    .cell_rect([((m[0] + 1) * macro_size).min(n[0]) - 1, ((m[1] + 1) * macro_size).min(n[1]) - 1])
                    .hi;
                centers.push(Rect { lo, hi }.center());
            }
        }
        if centers.is_empty() {
            return Err(Error::Config("pressure space is empty: no interior cell".into()));
        }
        let mut cell_element = vec![None; grid.num_cells()];
        let mut bbox: Vec<Option<Rect>> = vec![None; centers.len()];
        for c in grid.cells() {
            if cls.kind(c) == CellKind::Exterior {
                continue;
            }
            let m = macro_of(c);
            let r = grid.cell_rect(c);
            let e = element_of_macro[m[0] * nm[1] + m[1]].unwrap_or_else(|| {
                let x = r.center();
                let mut best = (f64::INFINITY, 0);
                for (e, y) in centers.iter().enumerate() {
                    let d = (x[0] - y[0]).hypot(x[1] - y[1]);
                    if d < best.0 * (1.0 - 1e-12) {
                        best = (d, e);
                    }
                }
                best.1
            });
            cell_element[grid.cell_ordinal(c)] = Some(e);
            let b = bbox[e].get_or_insert(r);
            for a in 0..2 {
                b.lo[a] = b.lo[a].min(r.lo[a]);
                b.hi[a] = b.hi[a].max(r.hi[a]);
            }
        }
        let elements = bbox.into_iter().map(|b| b.expect("active element owns its cells")).collect();
        Ok(Self { degree, macro_size, elements, cell_element, n1: n[1] })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn macro_size(&self) -> usize {
        self.macro_size
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Local functions per element.
    pub fn local_len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn len(&self) -> usize {
        self.elements.len() * self.local_len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element_of(&self, c: CellIndex) -> Option<usize> {
        self.cell_element[c[0] * self.n1 + c[1]]
    }

    /// Local basis values of element `e` at `x`.
    pub fn eval(&self, e: usize, x: [f64; 2], out: &mut [f64]) {
        let r = &self.elements[e];
        let d = self.degree;
        let mut px = [0.0; 9];
        let mut py = [0.0; 9];
        legendre(d, 2.0 * (x[0] - r.lo[0]) / r.width(0) - 1.0, &mut px);
        legendre(d, 2.0 * (x[1] - r.lo[1]) / r.width(1) - 1.0, &mut py);
        for a in 0..=d {
            for b in 0..=d {
                out[a * (d + 1) + b] = px[a] * py[b];
            }
        }
    }

    /// Coefficients of the constant function 1.
    pub fn constant_coefficients(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.len()];
        for e in 0..self.elements.len() {
            c[e * self.local_len()] = 1.0;
        }
        c
    }

    /// Value of the pressure field with coefficients `c` at `x` in cell `cell`.
    pub fn eval_field(&self, c: &[f64], cell: CellIndex, x: [f64; 2]) -> f64 {
        let Some(e) = self.element_of(cell) else { return 0.0 };
        let nq = self.local_len();
        let mut q = [0.0; 81];
        self.eval(e, x, &mut q);
        (0..nq).map(|k| c[e * nq + k] * q[k]).sum()
    }

    /// Block-diagonal L2 Gram matrix and the integrals of the basis functions.
    pub fn mass_and_means(&self, quad: &Quadrature) -> (SparseMatrix, Vec<f64>) {
        let nq = self.local_len();
        let mut blocks = vec![vec![0.0; nq * nq]; self.elements.len()];
        let mut means = vec![0.0; self.len()];
        let mut q = [0.0; 81];
        for r in quad.rules() {
            let Some(e) = self.element_of(r.cell) else { continue };
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                self.eval(e, x, &mut q);
                for a in 0..nq {
                    means[e * nq + a] += w * q[a];
                    for b in 0..nq {
                        blocks[e][a * nq + b] += w * q[a] * q[b];
                    }
                }
            }
        }
        let mut t = Vec::new();
        for (e, blk) in blocks.iter().enumerate() {
            for a in 0..nq {
                for b in 0..nq {
                    t.push((e * nq + a, e * nq + b, blk[a * nq + b]));
                }
            }
        }
        (SparseMatrix::from_triplets(self.len(), self.len(), t), means)
    }

    /// Element-wise L2 projection of `f`.
    pub fn l2_projection<F>(&self, quad: &Quadrature, f: F) -> Result<Vec<f64>>
    where
        F: Fn([f64; 2]) -> f64,
    {
        let nq = self.local_len();
        let (mass, _) = self.mass_and_means(quad);
        let mut rhs = vec![0.0; self.len()];
        let mut q = [0.0; 81];
        for r in quad.rules() {
            let Some(e) = self.element_of(r.cell) else { continue };
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                self.eval(e, x, &mut q);
                let fv = f(x);
                if !fv.is_finite() {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                for a in 0..nq {
                    rhs[e * nq + a] += w * fv * q[a];
                }
            }
        }
        let mut c = vec![0.0; self.len()];
        for e in 0..self.elements.len() {
            let m = DMatrix::from_fn(nq, nq, |a, b| mass.get(e * nq + a, e * nq + b));
            let b = DVector::from_fn(nq, |a, _| rhs[e * nq + a]);
            let x = m
                .cholesky()
                .ok_or_else(|| Error::Config(format!("pressure element {e} has a singular Gram block")))?
                .solve(&b);
            c[e * nq..(e + 1) * nq].copy_from_slice(x.as_slice());
        }
        Ok(c)
    }
}

/// Blocks of the linearized quasi-Newtonian saddle-point problem.
///
/// Velocity unknowns are ordered component-wise: `[u_1 coefficients, u_2
/// coefficients]`.
#[derive(Debug, Clone)]
pub struct MixedSystem {
    pub a: SparseMatrix,
    /// `B[q, (i, alpha)] = -int q d_alpha B_i`.
    pub b: SparseMatrix,
    pub rhs: Vec<f64>,
    /// `int q_k`, the row of the mean-zero constraint.
    pub means: Vec<f64>,
}

impl MixedSystem {
    pub fn velocity_len(&self) -> usize {
        self.a.nrows()
    }

    pub fn pressure_len(&self) -> usize {
        self.b.nrows()
    }

    /// `[A B^T 0; B 0 m; 0 m^T 0]` with the right-hand side `[F; 0; 0]`.
    pub fn saddle_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let nv = self.velocity_len();
        let np = self.pressure_len();
        let n = nv + np + 1;
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.a.triplets() {
            m[(r, c)] = v;
        }
        for (r, c, v) in self.b.triplets() {
            m[(nv + r, c)] = v;
            m[(c, nv + r)] = v;
        }
        for (k, &v) in self.means.iter().enumerate() {
            m[(nv + k, n - 1)] = v;
            m[(n - 1, nv + k)] = v;
        }
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, nv).copy_from_slice(&self.rhs);
        (m, rhs)
    }
}

/// `D(phi e_alpha) : D(psi e_beta) = (delta_ab grad phi . grad psi + d_b phi d_a psi) / 2`,
/// written out as the full contraction of the two symmetric gradients.
fn deformation_product(gphi: [f64; 2], alpha: usize, gpsi: [f64; 2], beta: usize) -> f64 {
    let d = |g: [f64; 2], c: usize, i: usize, j: usize| {
        0.5 * (if i == c { g[j] } else { 0.0 } + if j == c { g[i] } else { 0.0 })
    };
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += d(gphi, alpha, i, j) * d(gpsi, beta, i, j);
        }
    }
    s
}

type MixedCell = (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>, Vec<(usize, f64)>, Vec<(usize, f64)>);

/// Picard-linearized quasi-Newtonian system with the viscosity frozen at the
/// velocity `coeffs`.
pub fn assemble_mixed<P>(
    basis: &WebBasis,
    quad: &Quadrature,
    pressure: &PressureSpace,
    viscosity: &Viscosity,
    coeffs: &[f64],
    phi: P,
) -> Result<MixedSystem>
where
    P: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    viscosity.validate()?;
    if pressure.is_empty() {
        return Err(Error::Config("pressure space is empty".into()));
    }
    let n = basis.len();
    if coeffs.len() != 2 * n {
        return Err(Error::Domain(format!("velocity iterate has {} entries, expected {}", coeffs.len(), 2 * n)));
    }
    let nq = pressure.local_len();
    let per_cell: Vec<MixedCell> = quad
        .rules()
        .par_iter()
        .map(|r| {
            let cb = basis.cell_basis(r.cell);
            let nl = cb.len();
            let e = pressure.element_of(r.cell);
            let mut a_loc = vec![0.0; 4 * nl * nl];
            let mut b_loc = vec![0.0; nq * 2 * nl];
            let mut f_loc = vec![0.0; 2 * nl];
            let mut m_loc = vec![0.0; nq];
            let (mut v, mut g) = (Vec::new(), Vec::new());
            let mut q = [0.0; 81];
            for (&x, &w) in r.points.iter().zip(&r.weights) {
                basis.eval_cell(&cb, x, &mut v, &mut g);
                let mut du = [[0.0; 2]; 2];
                for (l, &i) in cb.indices.iter().enumerate() {
                    for c in 0..2 {
                        du[c][0] += coeffs[c * n + i] * g[l][0];
                        du[c][1] += coeffs[c * n + i] * g[l][1];
                    }
                }
                let off = 0.5 * (du[0][1] + du[1][0]);
                let s = du[0][0] * du[0][0] + 2.0 * off * off + du[1][1] * du[1][1];
                let a = viscosity.eval(s);
                let f = phi(x);
                if !(a.is_finite() && f[0].is_finite() && f[1].is_finite()) {
                    return Err(Error::Evaluation { x: x[0], y: x[1] });
                }
                for l in 0..nl {
                    for al in 0..2 {
                        let row = (al * nl + l) * 2 * nl;
                        for k in 0..nl {
                            for be in 0..2 {
                                a_loc[row + be * nl + k] += w * a * deformation_product(g[l], al, g[k], be);
                            }
                        }
                        f_loc[al * nl + l] += w * f[al] * v[l];
                    }
                }
                if let Some(e) = e {
                    pressure.eval(e, x, &mut q);
                    for t in 0..nq {
                        m_loc[t] += w * q[t];
                        for l in 0..nl {
                            for al in 0..2 {
                                b_loc[t * 2 * nl + al * nl + l] -= w * q[t] * g[l][al];
                            }
                        }
                    }
                }
            }
            let glob = |al: usize, l: usize| al * n + cb.indices[l];
            let mut at = Vec::with_capacity(a_loc.len());
            for al in 0..2 {
                for l in 0..nl {
                    for be in 0..2 {
                        for k in 0..nl {
                            at.push((glob(al, l), glob(be, k), a_loc[(al * nl + l) * 2 * nl + be * nl + k]));
                        }
                    }
                }
            }
            let mut bt = Vec::new();
            let mut mt = Vec::new();
            if let Some(e) = e {
                for t in 0..nq {
                    for al in 0..2 {
                        for l in 0..nl {
                            bt.push((e * nq + t, glob(al, l), b_loc[t * 2 * nl + al * nl + l]));
                        }
                    }
                    mt.push((e * nq + t, m_loc[t]));
                }
            }
            let ft = (0..2).flat_map(|al| (0..nl).map(move |l| (al, l))).map(|(al, l)| (glob(al, l), f_loc[al * nl + l])).collect();
            Ok((at, bt, ft, mt))
        })
        .collect::<Result<_>>()?;
    let mut at = Vec::new();
    let mut bt = Vec::new();
    let mut rhs = vec![0.0; 2 * n];
    let mut means = vec![0.0; pressure.len()];
    for (a, b, f, m) in per_cell {
        at.extend(a);
        bt.extend(b);
        for (i, v) in f {
            rhs[i] += v;
        }
        for (k, v) in m {
            means[k] += v;
        }
    }
    Ok(MixedSystem {
        a: SparseMatrix::from_triplets(2 * n, 2 * n, at),
        b: SparseMatrix::from_triplets(pressure.len(), 2 * n, bt),
        rhs,
        means,
    })
}
