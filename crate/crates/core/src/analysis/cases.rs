use serde::{Deserialize, Serialize};

use super::jet::Jet2;
use crate::assembly::Viscosity;
use crate::geometry::{ImplicitDomain, Shape};

/// Problem families covered by the study driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClass {
    /// `-div(a grad u) + c0 u = f`.
    Vcpe,
    /// `-div(|grad u|^{p-2} grad u) + u = f`.
    PLaplace,
    /// `-div(a(|D u|^2) D u) + grad p = phi`, `div u = 0`.
    QuasiNewtonian,
}

/// Manufactured solutions with closed-form sources. Every exact solution
/// vanishes on the boundary of its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// `u = 1 - r^2` on the unit disk, `a = 1`: a weighted constant, so the
    /// discrete solution is exact up to quadrature.
    PoissonQuadratic,
    /// `u = (1 - r^2) e^x cos y` on the unit disk, `a = 1`.
    PoissonDisk,
    /// Same `u`, `a = 1 + x^2`.
    VcpeDisk,
    /// `u = (1 - r^2)(r^2 - 0.16) cos x` on the annulus `0.4 < r < 1`, `a = 1`.
    PoissonAnnulus,
    /// `u = (1 - r^2) cos(r^2)` on the unit disk. Smooth, with its only
    /// critical point at the origin, which grids symmetric about it keep on
    /// a knot line.
    PlapSmooth,
    /// `u = 1 - r^{3/2}` on the unit disk: in `W^{2,q}` for `q < 4`, not `C^2`.
    /// Its gradient vanishes only at the origin.
    PlapRough,
    /// Velocity `(-4y(1 - r^2), 4x(1 - r^2))`, pressure `xy` on the unit disk.
    CarreauDisk,
    /// `u = (1 - r^2)^2` on the unit disk, used for approximation tests.
    JacksonDisk,
}

fn r2(x: [Jet2; 2]) -> Jet2 {
    x[0].square() + x[1].square()
}

impl Case {
    pub const ALL: [Case; 8] = [
        Case::PoissonQuadratic,
        Case::PoissonDisk,
        Case::VcpeDisk,
        Case::PoissonAnnulus,
        Case::PlapSmooth,
        Case::PlapRough,
        Case::CarreauDisk,
        Case::JacksonDisk,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Case::PoissonQuadratic => "poisson_quadratic",
            Case::PoissonDisk => "poisson_disk",
            Case::VcpeDisk => "vcpe_disk",
            Case::PoissonAnnulus => "poisson_annulus",
            Case::PlapSmooth => "plap_smooth",
            Case::PlapRough => "plap_rough",
            Case::CarreauDisk => "carreau_disk",
            Case::JacksonDisk => "jackson_disk",
        }
    }

    /// Problem classes the case provides a source for.
    pub fn supports(&self, class: ProblemClass) -> bool {
        match self {
            Case::CarreauDisk => class == ProblemClass::QuasiNewtonian,
            _ => class != ProblemClass::QuasiNewtonian,
        }
    }

    pub fn domain(&self) -> ImplicitDomain {
        match self {
            Case::PoissonAnnulus => ImplicitDomain { shape: Shape::annulus(0.4), exponent: 1.0 },
            _ => ImplicitDomain::unit_disk(),
        }
    }

    /// Diffusion coefficient of the linear problem.
    pub fn coefficient(&self, x: [Jet2; 2]) -> Jet2 {
        match self {
            Case::VcpeDisk => 1.0 + x[0].square(),
            _ => Jet2::constant(1.0),
        }
    }

    /// Exact scalar solution.
    pub fn scalar(&self, x: [Jet2; 2]) -> Jet2 {
        let s = 1.0 - r2(x);
        match self {
            Case::PoissonQuadratic => s,
            Case::PoissonDisk | Case::VcpeDisk => s * x[0].exp() * x[1].cos(),
            Case::PoissonAnnulus => s * (r2(x) - 0.16) * x[0].cos(),
            Case::PlapSmooth => s * r2(x).cos(),
            Case::PlapRough => 1.0 - r2(x).powf(0.75),
            // for the flow case: the stream function of the velocity
            Case::JacksonDisk | Case::CarreauDisk => s * s,
        }
    }

    pub fn scalar_value(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let j = self.scalar(Jet2::vars(x));
        (j.v, j.g)
    }

    /// Exact velocity of the flow case.
    pub fn velocity(&self, x: [Jet2; 2]) -> [Jet2; 2] {
        let s = 1.0 - r2(x);
        [x[1] * s * -4.0, x[0] * s * 4.0]
    }

    pub fn velocity_value(&self, x: [f64; 2]) -> [(f64, [f64; 2]); 2] {
        let v = self.velocity(Jet2::vars(x));
        [(v[0].v, v[0].g), (v[1].v, v[1].g)]
    }

    /// Exact pressure of the flow case; mean zero on the disk.
    pub fn pressure(&self, x: [Jet2; 2]) -> Jet2 {
        x[0] * x[1]
    }

    pub fn pressure_value(&self, x: [f64; 2]) -> f64 {
        x[0] * x[1]
    }

    /// `-div(a grad u) + reaction u`.
    pub fn vcpe_source(&self, reaction: f64, x: [f64; 2]) -> f64 {
        let j = Jet2::vars(x);
        let u = self.scalar(j);
        let a = self.coefficient(j);
        -(a.v * u.laplacian() + a.g[0] * u.g[0] + a.g[1] * u.g[1]) + reaction * u.v
    }

    /// `-div(|grad u|^{p-2} grad u) + u`, expanded as
    /// `-(|g|^{p-2} lap u + (p-2)|g|^{p-4} g^T H g) + u`.
    pub fn plap_source(&self, p: f64, x: [f64; 2]) -> f64 {
        let u = self.scalar(Jet2::vars(x));
        let s2 = u.grad_norm2();
        if s2 == 0.0 {
            // the flux is not differentiable here unless p >= 2
            return if p >= 2.0 { -(if p == 2.0 { u.laplacian() } else { 0.0 }) + u.v } else { f64::NAN };
        }
        let g = u.g;
        let hgg: f64 = (0..2).map(|i| (0..2).map(|j| g[i] * u.h[i][j] * g[j]).sum::<f64>()).sum();
        -(s2.powf(0.5 * (p - 2.0)) * u.laplacian() + (p - 2.0) * s2.powf(0.5 * (p - 4.0)) * hgg) + u.v
    }

    /// `-div(a(|D u|^2) D u) + grad p`.
    pub fn stokes_source(&self, viscosity: &Viscosity, x: [f64; 2]) -> [f64; 2] {
        let j = Jet2::vars(x);
        let u = self.velocity(j);
        let p = self.pressure(j);
        let d = |i: usize, k: usize| 0.5 * (u[i].g[k] + u[k].g[i]);
        // derivative of D_ik along l
        let dd = |i: usize, k: usize, l: usize| 0.5 * (u[i].h[k][l] + u[k].h[i][l]);
        let s: f64 = (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| d(i, k).powi(2)).sum();
        let ds = |l: usize| -> f64 {
            2.0 * (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| d(i, k) * dd(i, k, l)).sum::<f64>()
        };
        let a = viscosity.eval(s);
        let da = viscosity.deriv(s);
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let div_d: f64 = (0..2).map(|k| dd(i, k, k)).sum();
            let grad_a: f64 = (0..2).map(|k| da * ds(k) * d(i, k)).sum();
            *o = -(a * div_d + grad_a) + p.g[i];
        }
        out
    }
}

impl std::str::FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Case::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown manufactured case '{s}'"))
    }
}
