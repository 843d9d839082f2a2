use super::grid::MultiIndex;
use super::polynomial::PolynomialPiece;
use super::KnotVector;
use crate::error::{Error, Result};

/// Weights `c_r` such that `lambda_k f = sum_r c_r f^{(r)}(tau)` for the
/// univariate de Boor–Fix functional, with
/// `c_r = (-1)^{m-r} psi^{(m-r)}(tau) / m!` and
/// `psi(t) = prod_{l=1..m} (t_{k+l} - t)`.
pub(crate) fn deboor_fix_weights(kv: &KnotVector, k: usize) -> (f64, Vec<f64>) {
    let m = kv.degree();
    let t = kv.knots();
    let tau = anchor(kv, k);
    // psi as a polynomial in (t - tau): product of (t_{k+l} - tau) - (t - tau)
    let mut psi = vec![1.0];
    for l in 1..=m {
        let c = t[k + l] - tau;
        let mut next = vec![0.0; psi.len() + 1];
        for (q, &p) in psi.iter().enumerate() {
            next[q] += c * p;
            next[q + 1] -= p;
        }
        psi = next;
    }
    // psi^{(j)}(tau) = j! * psi[j]
    let mut fact = vec![1.0; m + 1];
    for j in 1..=m {
        fact[j] = fact[j - 1] * j as f64;
    }
    let weights = (0..=m)
        .map(|r| {
            let j = m - r;
            let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * fact[j] * psi[j] / fact[m]
        })
        .collect();
    (tau, weights)
}

/// Midpoint of the most central nondegenerate knot interval inside
/// `[t_k, t_{k+m+1}]`.
fn anchor(kv: &KnotVector, k: usize) -> f64 {
    let m = kv.degree();
    let t = kv.knots();
    let spans: Vec<usize> = (k..=k + m).filter(|&mu| t[mu] < t[mu + 1]).collect();
    let mu = spans[spans.len() / 2];
    0.5 * (t[mu] + t[mu + 1])
}

/// Tensor de Boor–Fix functional `lambda_k` applied to a polynomial piece.
///
/// For polynomials of per-axis degree at most `m` the value does not depend
/// on the anchor point, and `lambda_k b_{k'} = delta_{k k'}`.
pub fn deboor_fix(axes: &[KnotVector; 2], k: MultiIndex, piece: &PolynomialPiece) -> Result<f64> {
    for a in 0..2 {
        if k[a] >= axes[a].num_basis() {
            return Err(Error::Domain(format!("basis index {k:?} out of range")));
        }
        if piece.degree()[a] > axes[a].degree() {
            return Err(Error::Domain(format!(
                "piece degree {:?} exceeds spline degree on axis {a}",
                piece.degree()
            )));
        }
    }
    let (tx, wx) = deboor_fix_weights(&axes[0], k[0]);
    let (ty, wy) = deboor_fix_weights(&axes[1], k[1]);
    let mut sum = 0.0;
    for (r0, &c0) in wx.iter().enumerate() {
        if r0 > piece.degree()[0] {
            break;
        }
        for (r1, &c1) in wy.iter().enumerate() {
            if r1 > piece.degree()[1] {
                break;
            }
            sum += c0 * c1 * piece.eval([tx, ty], [r0, r1]);
        }
    }
    Ok(sum)
}
