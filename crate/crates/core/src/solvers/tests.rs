use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::spectra::iterative_extremes;
use super::*;
use crate::assembly::{assemble_plap, assemble_vcpe, PressureSpace, SparseMatrix, Viscosity};
use crate::geometry::ImplicitDomain;
use crate::quadrature::QuadratureParams;
use crate::splines::{Rect, TensorGrid};

fn disk(cells: usize, degree: usize) -> (WebBasis, Quadrature) {
    let g = TensorGrid::uniform(Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }, cells, degree).unwrap();
    let b = WebBasis::new(g, ImplicitDomain::unit_disk(), 5).unwrap();
    let q = Quadrature::for_basis(&b, QuadratureParams::for_degree(degree)).unwrap();
    (b, q)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_solve_basics() {
    let (b, q) = disk(8, 2);
    let opts = SolveOptions::default();
    let zero = solve_vcpe(&b, &q, |_| 1.0, 0.0, |_| 0.0, &opts).unwrap();
    assert!(zero.field.coeffs.iter().all(|&v| v == 0.0));
    let f = |x: [f64; 2]| 1.0 + x[0] * x[1];
    let one = solve_vcpe(&b, &q, |_| 1.0, 0.0, |x| 0.5 * f(x), &opts).unwrap();
    let two = solve_vcpe(&b, &q, |_| 2.0, 0.0, f, &opts).unwrap();
    assert!(max_diff(&one.field.coeffs, &two.field.coeffs) <= 1e-10);
    // Galerkin orthogonality up to the solver tolerance
    let sys = assemble_vcpe(&b, &q, |_| 2.0, 0.0, f).unwrap();
    let ac = sys.matrix.mul_vec(&two.field.coeffs);
    let fnorm = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(max_diff(&ac, &sys.rhs) <= opts.linear_tol * fnorm);
    assert!(two.relative_residual <= opts.linear_tol);
}

#[test]
fn schedules() {
    let o = SolveOptions::default();
    assert_eq!(plap_schedule(3.0, &o), vec![(3.0, 1e-8)]);
    let s = plap_schedule(1.5, &o);
    assert_eq!(s.len(), 8);
    assert_eq!(s[0], (1.5, 1e-1));
    assert!(s.windows(2).all(|w| w[1].1 < w[0].1));
    assert_eq!(s.last().unwrap().1, 1e-8);
    let ps: Vec<f64> = plap_schedule(4.5, &o).iter().map(|s| s.0).collect();
    assert_eq!(ps, vec![3.0, 4.0, 4.5]);
    let low = plap_schedule(1.2, &o);
    assert!((low[0].0 - 1.5).abs() < 1e-12 && (low[2].0 - 1.3).abs() < 1e-12);
    assert_eq!(low.last().unwrap().0, 1.2);
}

#[test]
fn p_two_reproduces_the_linear_solver() {
    let (b, q) = disk(8, 2);
    let opts = SolveOptions::default();
    let f = |x: [f64; 2]| (x[0] + 0.3).exp() * (1.0 - x[1]);
    let lin = solve_vcpe(&b, &q, |_| 1.0, 1.0, f, &opts).unwrap();
    let nl = solve_plap(&b, &q, 2.0, f, &opts).unwrap();
    assert!(max_diff(&lin.field.coeffs, &nl.field.coeffs) <= 1e-9);
}

#[test]
fn newton_energies_decrease_and_residual_converges() {
    let (b, q) = disk(8, 2);
    let opts = SolveOptions::default();
    let f = |x: [f64; 2]| 4.0 + x[0];
    for p in [1.5, 3.0] {
        let sol = solve_plap(&b, &q, p, f, &opts).unwrap();
        for st in &sol.stages {
            assert!(st.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12), "p = {p}: {:?}", st.energies);
        }
        let last = sol.final_stage();
        assert!(*last.residuals.last().unwrap() <= opts.nonlinear_tol * sol.load_norm.max(1.0));
        assert_eq!(last.eps, opts.eps_final);
    }
}

#[test]
fn newton_tail_is_superlinear_for_p_three() {
    let (b, q) = disk(8, 2);
    let sol = solve_plap(&b, &q, 3.0, |x| 4.0 + x[0], &SolveOptions::default()).unwrap();
    let r = &sol.final_stage().residuals;
    assert!(r.len() >= 3, "{r:?}");
    let tail = &r[r.len() - 3..];
    for w in tail.windows(2) {
        assert!(w[1] <= 10.0 * w[0].powf(1.5), "{r:?}");
    }
}

#[test]
fn iteration_cap_is_reported() {
    let (b, q) = disk(8, 2);
    let opts = SolveOptions { max_newton_iter: 1, ..SolveOptions::default() };
    let e = solve_plap(&b, &q, 3.0, |_| 10.0, &opts).unwrap_err();
    assert!(matches!(e, Error::NoConvergence { method: "Newton", .. }), "{e}");
    assert!(solve_plap(&b, &q, 1.0, |_| 1.0, &SolveOptions::default()).is_err());
    let bad = SolveOptions { eps_final: 1.0, ..SolveOptions::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

#[test]
fn plap_operator_is_monotone() {
    let (b, q) = disk(8, 2);
    let mut rng = StdRng::seed_from_u64(17);
    let n = b.len();
    for (p, eps) in [(1.5, 1e-3), (3.0, 0.0), (2.0, 0.0)] {
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, rv) = assemble_plap(&b, &q, &v, p, eps, |x| x[0], false).unwrap();
            let (_, rw) = assemble_plap(&b, &q, &w, p, eps, |x| x[0], false).unwrap();
            let s: f64 = (0..n).map(|i| (rv[i] - rw[i]) * (v[i] - w[i])).sum();
            assert!(s >= -1e-10, "p = {p}: {s}");
        }
    }
}

fn stokes(cells: usize) -> (WebBasis, Quadrature, PressureSpace) {
    let (b, q) = disk(cells, 2);
    let ps = PressureSpace::new(&b, 2, 0).unwrap();
    (b, q, ps)
}

#[test]
fn zero_force_gives_zero_flow() {
    let (b, q, ps) = stokes(8);
    let sol = solve_quasi_newtonian(&b, &q, &ps, &Viscosity::Constant { value: 1.0 }, |_| [0.0, 0.0], &SolveOptions::default())
        .unwrap();
    assert!(sol.velocity.coeffs.iter().all(|v| v.abs() < 1e-14));
    assert!(sol.pressure.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn schur_complement_matches_dense_lu() {
    let (b, q, ps) = stokes(8);
    let n = b.len();
    let mut rng = StdRng::seed_from_u64(4);
    let c: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let phi = |x: [f64; 2]| [x[1].sin() + 1.0, x[0] * x[0]];
    let sys = crate::assembly::assemble_mixed(&b, &q, &ps, &Viscosity::default(), &c, phi).unwrap();
    let d = solve_saddle_dense(&sys).unwrap();
    let s = solve_saddle(&sys, &SolveOptions::default()).unwrap();
    let scale = d.velocity.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    assert!(max_diff(&d.velocity, &s.velocity) <= 1e-8 * scale);
    assert!(max_diff(&d.pressure, &s.pressure) <= 1e-7 * scale);
    assert!(incompressibility_defect(&sys, &ps, &s.velocity) <= 1e-8);
}

#[test]
fn carreau_picard_converges_with_mean_zero_pressure() {
    let (b, q, ps) = stokes(8);
    let opts = SolveOptions::default();
    let phi = |x: [f64; 2]| [8.0 * x[1], -8.0 * x[0] + 1.0];
    let sol = solve_quasi_newtonian(&b, &q, &ps, &Viscosity::default(), phi, &opts).unwrap();
    assert!(sol.iterations > 1);
    assert!(*sol.updates.last().unwrap() <= opts.picard_tol);
    assert!(sol.pressure_mean.abs() <= 1e-8);
    assert!(sol.incompressibility <= 1e-8);
}

#[test]
fn infsup_estimates() {
    let (b, q, ps) = stokes(8);
    let est = estimate_infsup(&b, &q, &ps).unwrap();
    assert!(est.value > 0.05 && est.value <= est.upper, "{est:?}");
    // a discontinuous pressure as rich as the velocity locks
    let rich = PressureSpace::new(&b, 1, 2).unwrap();
    let bad = estimate_infsup(&b, &q, &rich).unwrap();
    assert!(bad.value < 1e-6, "{bad:?}");
}

#[test]
fn condition_numbers() {
    let d = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 2.0), (1, 1, 8.0), (2, 2, 0.5)]);
    assert!((condition_number(&d).unwrap() - 16.0).abs() < 1e-12);
    let s = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]);
    assert_eq!(condition_number(&s).unwrap(), f64::INFINITY);
    let n = 60;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0 + 0.01 * i as f64));
        if i > 0 {
            t.push((i, i - 1, -1.0));
            t.push((i - 1, i, -1.0));
        }
    }
    let m = SparseMatrix::from_triplets(n, n, t);
    let (lmin, lmax) = iterative_extremes(&m).unwrap();
    let e = nalgebra::SymmetricEigen::new(m.to_dense()).eigenvalues;
    assert!((lmin - e.min()).abs() <= 1e-6 * e.min());
    assert!((lmax - e.max()).abs() <= 1e-6 * e.max());
}
