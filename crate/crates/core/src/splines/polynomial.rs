use nalgebra::DMatrix;

use super::grid::{CellIndex, MultiIndex, Rect, TensorGrid};
use super::KnotVector;
use crate::error::{Error, Result};

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// De Casteljau evaluation of Bernstein coefficients at local parameter `s`.
/// Works for any real `s`, which gives the polynomial extension beyond the
/// reference interval.
fn de_casteljau(coeffs: &[f64], s: f64) -> f64 {
    let mut b = [0.0f64; 16];
    let n = coeffs.len();
    b[..n].copy_from_slice(coeffs);
    for r in 1..n {
        for i in 0..n - r {
            b[i] = (1.0 - s) * b[i] + s * b[i + 1];
        }
    }
    b[0]
}

/// Bernstein coefficients of the `order`-th derivative with respect to `s`.
fn bernstein_derivative(coeffs: &[f64], order: usize) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for _ in 0..order {
        let n = c.len() - 1;
        if n == 0 {
            return vec![0.0];
        }
        c = (0..n).map(|i| n as f64 * (c[i + 1] - c[i])).collect();
    }
    c
}

/// Power coefficients in `s` (lowest first) to Bernstein coefficients of the
/// same degree: `s^r = sum_{k >= r} C(k, r) / C(n, r) B_k^n(s)`.
fn power_to_bernstein(power: &[f64]) -> Vec<f64> {
    let n = power.len() - 1;
    (0..=n)
        .map(|k| {
            (0..=k)
                .map(|r| binomial(k, r) / binomial(n, r) * power[r])
                .sum()
        })
        .collect()
}

/// Bivariate tensor polynomial stored in the Bernstein basis of a reference
/// cell. Evaluation outside the cell is polynomial extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPiece {
    cell: Rect,
    degree: [usize; 2],
    /// `coeffs[a * (degree[1] + 1) + b]` multiplies `B_a(s) B_b(t)`.
    coeffs: Vec<f64>,
}

impl PolynomialPiece {
    pub fn new(cell: Rect, degree: [usize; 2], coeffs: Vec<f64>) -> Result<Self> {
        if !(cell.width(0) > 0.0 && cell.width(1) > 0.0) {
            return Err(Error::Domain("reference cell must have positive volume".into()));
        }
        if coeffs.len() != (degree[0] + 1) * (degree[1] + 1) {
            return Err(Error::Domain("coefficient count does not match degree".into()));
        }
        Ok(Self { cell, degree, coeffs })
    }

    /// Tensor product of two univariate Bernstein coefficient vectors.
    pub fn from_factors(cell: Rect, cx: &[f64], cy: &[f64]) -> Result<Self> {
        let coeffs = cx.iter().flat_map(|&a| cy.iter().map(move |&b| a * b)).collect();
        Self::new(cell, [cx.len() - 1, cy.len() - 1], coeffs)
    }

    /// Constant polynomial of the given per-axis degree.
    pub fn constant(cell: Rect, degree: [usize; 2], value: f64) -> Result<Self> {
        Self::new(cell, degree, vec![value; (degree[0] + 1) * (degree[1] + 1)])
    }

    /// Tensor interpolation of `f` at Chebyshev points of the reference cell.
    pub fn interpolate<F>(cell: Rect, degree: [usize; 2], mut f: F) -> Result<Self>
    where
        F: FnMut([f64; 2]) -> f64,
    {
        let nodes: Vec<Vec<f64>> = (0..2).map(|a| chebyshev_nodes(degree[a])).collect();
        let (n0, n1) = (degree[0] + 1, degree[1] + 1);
        let mut g = DMatrix::zeros(n0, n1);
        for (i, &s) in nodes[0].iter().enumerate() {
            for (j, &t) in nodes[1].iter().enumerate() {
                let x = [
                    cell.lo[0] + s * cell.width(0),
                    cell.lo[1] + t * cell.width(1),
                ];
                g[(i, j)] = f(x);
            }
        }
        let vander = |a: usize| {
            let n = degree[a];
            DMatrix::from_fn(n + 1, n + 1, |i, k| {
                let s = nodes[a][i];
                binomial(n, k) * s.powi(k as i32) * (1.0 - s).powi((n - k) as i32)
            })
        };
        let v0 = vander(0)
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Domain("singular interpolation matrix".into()))?;
        let v1 = vander(1)
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Domain("singular interpolation matrix".into()))?;
        let c = &v0 * g * v1.transpose();
        let coeffs = (0..n0).flat_map(|a| (0..n1).map(move |b| (a, b))).map(|(a, b)| c[(a, b)]).collect();
        Self::new(cell, degree, coeffs)
    }

    pub fn cell(&self) -> Rect {
        self.cell
    }

    pub fn degree(&self) -> [usize; 2] {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn local(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.cell.lo[0]) / self.cell.width(0),
            (x[1] - self.cell.lo[1]) / self.cell.width(1),
        ]
    }

    /// Value of a partial derivative `d^{r0+r1} / dx^r0 dy^r1` at `x`.
    pub fn eval(&self, x: [f64; 2], deriv: [usize; 2]) -> f64 {
        let s = self.local(x);
        let n1 = self.degree[1] + 1;
        // contract along y first, then x
        let mut col = Vec::with_capacity(self.degree[0] + 1);
        for a in 0..=self.degree[0] {
            let row = &self.coeffs[a * n1..(a + 1) * n1];
            let dy = bernstein_derivative(row, deriv[1]);
            col.push(de_casteljau(&dy, s[1]));
        }
        let dx = bernstein_derivative(&col, deriv[0]);
        let scale = self.cell.width(0).powi(deriv[0] as i32) * self.cell.width(1).powi(deriv[1] as i32);
        de_casteljau(&dx, s[0]) / scale
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.eval(x, [0, 0])
    }

    /// Linear combination `self + alpha * other` on the same cell and degree.
    pub fn axpy(&self, alpha: f64, other: &PolynomialPiece) -> Result<Self> {
        if self.cell != other.cell || self.degree != other.degree {
            return Err(Error::Domain("pieces live on different cells or degrees".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + alpha * b).collect();
        Self::new(self.cell, self.degree, coeffs)
    }
}

/// Chebyshev points of the first kind on [0, 1]; the midpoint for degree 0.
fn chebyshev_nodes(degree: usize) -> Vec<f64> {
    let n = degree + 1;
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * (n - 1 - k) + 1) as f64 / (2 * n) as f64;
            0.5 * (1.0 + theta.cos())
        })
        .collect()
}

/// Bernstein coefficients on `[a, b]` of the polynomial piece of univariate
/// basis `k` on knot span `mu`. Built from exact derivatives at the interval
/// midpoint (Taylor expansion), then converted from the power basis.
pub(crate) fn univariate_piece(kv: &KnotVector, k: usize, mu: usize) -> Result<Vec<f64>> {
    let t = kv.knots();
    let (a, b) = (t[mu], t[mu + 1]);
    if !(b > a) {
        return Err(Error::Domain("degenerate knot interval".into()));
    }
    let m = kv.degree();
    let mid = 0.5 * (a + b);
    let len = b - a;
    // p(x) = sum_r d_r / r! (x - mid)^r and x - mid = len (s - 1/2)
    let mut power = vec![0.0; m + 1];
    let mut fact = 1.0;
    for r in 0..=m {
        if r > 0 {
            fact *= r as f64;
        }
        let d = kv.eval_deriv(k, mid, r)? / fact * len.powi(r as i32);
        for q in 0..=r {
            power[q] += d * binomial(r, q) * (-0.5f64).powi((r - q) as i32);
        }
    }
    Ok(power_to_bernstein(&power))
}

/// The tensor polynomial coinciding with `b_k` on `cell`.
pub fn local_polynomial(grid: &TensorGrid, k: MultiIndex, cell: CellIndex) -> Result<PolynomialPiece> {
    for a in 0..2 {
        if k[a] >= grid.num_basis(a) {
            return Err(Error::Domain(format!("basis index {k:?} out of range")));
        }
        if cell[a] >= grid.cells_per_axis(a) {
            return Err(Error::Domain(format!("cell {cell:?} out of range")));
        }
    }
    let rect = grid.cell_rect(cell);
    let cx = univariate_piece(grid.axis(0), k[0], grid.span_of_cell(0, cell[0]))?;
    let cy = univariate_piece(grid.axis(1), k[1], grid.span_of_cell(1, cell[1]))?;
    PolynomialPiece::from_factors(rect, &cx, &cy)
}
