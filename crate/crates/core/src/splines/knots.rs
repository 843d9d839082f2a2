use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

/// Nondecreasing knot sequence together with the spline degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Domain(format!("degree {degree} exceeds {MAX_DEGREE}")));
        }
        if knots.len() < degree + 2 {
            return Err(Error::Domain(format!(
                "need at least {} knots for degree {degree}, got {}",
                degree + 2,
                knots.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("knots must be nondecreasing".into()));
        }
        let mut run = 1;
        for w in knots.windows(2) {
            if w[0] == w[1] {
                run += 1;
                if run > degree + 1 {
                    return Err(Error::Domain(format!(
                        "knot {} has multiplicity above degree + 1",
                        w[0]
                    )));
                }
            } else {
                run = 1;
            }
        }
        if knots[0] == knots[knots.len() - 1] {
            return Err(Error::Domain("knot vector spans an empty interval".into()));
        }
        Ok(Self { knots, degree })
    }

    /// Uniformly spaced breakpoints on `[lo, hi]` extended by `degree` knots
    /// on either side, so every B-spline touching `[lo, hi]` is complete.
    pub fn uniform(lo: f64, hi: f64, cells: usize, degree: usize) -> Result<Self> {
        if cells == 0 || !(hi > lo) {
            return Err(Error::Domain("uniform knots need hi > lo and cells > 0".into()));
        }
        let breaks: Vec<f64> = (0..=cells)
            .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
            .collect();
        Self::extended(&breaks, degree)
    }

    /// Extends strictly increasing breakpoints by `degree` knots on each side,
    /// repeating the width of the outermost interval.
    pub fn extended(breaks: &[f64], degree: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Domain("need at least two breakpoints".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        let n = breaks.len();
        let left = breaks[1] - breaks[0];
        let right = breaks[n - 1] - breaks[n - 2];
        let mut knots = Vec::with_capacity(n + 2 * degree);
        for s in (1..=degree).rev() {
            knots.push(breaks[0] - s as f64 * left);
        }
        knots.extend_from_slice(breaks);
        for s in 1..=degree {
            knots.push(breaks[n - 1] + s as f64 * right);
        }
        Self::new(knots, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Closed support `[t_k, t_{k+m+1}]` of basis `k`.
    pub fn support(&self, k: usize) -> (f64, f64) {
        (self.knots[k], self.knots[k + self.degree + 1])
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Index `mu` of the nondegenerate knot interval `[t_mu, t_{mu+1})`
    /// containing `x`. Interior knots belong to the interval on their right;
    /// the last knot belongs to the last nondegenerate interval.
    pub fn span(&self, x: f64) -> Option<usize> {
        let t = &self.knots;
        let n = t.len();
        if !(x >= t[0] && x <= t[n - 1]) {
            return None;
        }
        if x == t[n - 1] {
            return (0..n - 1).rev().find(|&mu| t[mu] < t[mu + 1]);
        }
        // last index with t[mu] <= x
        let mu = t.partition_point(|&k| k <= x) - 1;
        Some(mu)
    }

    /// Indices of the nondegenerate knot intervals, in increasing order.
    pub fn nonempty_spans(&self) -> Vec<usize> {
        (0..self.knots.len() - 1)
            .filter(|&mu| self.knots[mu] < self.knots[mu + 1])
            .collect()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.num_basis() {
            return Err(Error::Domain(format!(
                "basis index {k} out of range (have {})",
                self.num_basis()
            )));
        }
        Ok(())
    }

    /// Value of `b_k` at `x` by the Cox–de Boor recursion.
    pub fn eval(&self, k: usize, x: f64) -> Result<f64> {
        self.check_index(k)?;
        if !x.is_finite() {
            return Err(Error::Domain("evaluation point must be finite".into()));
        }
        Ok(self.cox_de_boor(k, self.degree, x, self.span(x)))
    }

    /// `order`-th derivative of `b_k` at `x`. Orders above the degree vanish
    /// identically on every polynomial piece.
    pub fn eval_deriv(&self, k: usize, x: f64, order: usize) -> Result<f64> {
        self.check_index(k)?;
        if !x.is_finite() {
            return Err(Error::Domain("evaluation point must be finite".into()));
        }
        if order > self.degree {
            return Ok(0.0);
        }
        Ok(self.deriv_rec(k, self.degree, x, order, self.span(x)))
    }

    fn cox_de_boor(&self, i: usize, p: usize, x: f64, span: Option<usize>) -> f64 {
        let t = &self.knots;
        if p == 0 {
            return if span == Some(i) { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * self.cox_de_boor(i, p - 1, x, span);
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + p + 1] - x) / d2 * self.cox_de_boor(i + 1, p - 1, x, span);
        }
        v
    }

    fn deriv_rec(&self, i: usize, p: usize, x: f64, r: usize, span: Option<usize>) -> f64 {
        if r == 0 {
            return self.cox_de_boor(i, p, x, span);
        }
        let t = &self.knots;
        let mut v = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            v += self.deriv_rec(i, p - 1, x, r - 1, span) / d1;
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            v -= self.deriv_rec(i + 1, p - 1, x, r - 1, span) / d2;
        }
        p as f64 * v
    }

    /// Values and first derivatives of the basis functions that do not vanish
    /// on the nondegenerate span `mu`. Returns the first index; entry `a`
    /// belongs to basis `first + a` and there are `active_count(mu)` entries.
    pub fn eval_active(&self, mu: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) -> usize {
        let m = self.degree;
        if mu >= m && mu < self.num_basis() {
            self.eval_span(mu, x, values, derivs);
            return mu - m;
        }
        // spans near the ends of the knot vector have fewer B-splines
        let first = mu.saturating_sub(m);
        let span = Some(mu);
        for k in first..(mu + 1).min(self.num_basis()) {
            values[k - first] = self.cox_de_boor(k, m, x, span);
            derivs[k - first] = if m == 0 { 0.0 } else { self.deriv_rec(k, m, x, 1, span) };
        }
        first
    }

    pub fn active_count(&self, mu: usize) -> usize {
        (mu + 1).min(self.num_basis()) - mu.saturating_sub(self.degree)
    }

    /// All `m + 1` basis functions that are nonzero on span `mu`, evaluated at
    /// `x` together with their first derivatives. Entry `a` belongs to basis
    /// `mu - m + a`.
    pub fn eval_span(&self, mu: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let m = self.degree;
        let t = &self.knots;
        debug_assert!(values.len() > m && derivs.len() > m);
        // triangular table of nonzero values, raised one degree per pass;
        // the degree m-1 row is kept for the derivative formula
        let mut left = [0.0f64; 16];
        let mut right = [0.0f64; 16];
        let mut n = [0.0f64; 16];
        n[0] = 1.0;
        let mut lower = [0.0f64; 16];
        for j in 1..=m {
            left[j] = x - t[mu + 1 - j];
            right[j] = t[mu + j] - x;
            if j == m {
                lower[..m].copy_from_slice(&n[..m]);
            }
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        values[..=m].copy_from_slice(&n[..=m]);
        if m == 0 {
            derivs[0] = 0.0;
            return;
        }
        // b'_{k,m} = m (N_{k,m-1}/(t_{k+m}-t_k) - N_{k+1,m-1}/(t_{k+m+1}-t_{k+1}))
        for a in 0..=m {
            let k = mu + a - m;
            let mut d = 0.0;
            if a > 0 {
                let den = t[k + m] - t[k];
                if den > 0.0 {
                    d += lower[a - 1] / den;
                }
            }
            if a < m {
                let den = t[k + m + 1] - t[k + 1];
                if den > 0.0 {
                    d -= lower[a] / den;
                }
            }
            derivs[a] = m as f64 * d;
        }
    }
}
