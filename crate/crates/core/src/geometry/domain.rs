use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expression tree of primitives combined with R-functions.
///
/// Every primitive is normalized to first order, so its implicit function
/// has unit gradient on its own zero set:
/// - disk: `(r^2 - |x - c|^2) / (2 r)`
/// - box: R-conjunction of the slabs `(x - lo)(hi - x) / (hi - lo)`
/// - half-plane `{n . x <= offset}`: `(offset - n . x) / |n|`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Box { lo: [f64; 2], hi: [f64; 2] },
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// R-conjunction (intersection) of all operands.
    And(Vec<Shape>),
    /// R-disjunction (union) of all operands.
    Or(Vec<Shape>),
    /// Complement.
    Not(Box<Shape>),
}

fn r_and(a: (f64, [f64; 2]), b: (f64, [f64; 2])) -> (f64, [f64; 2]) {
    r_join(a, b, -1.0)
}

fn r_or(a: (f64, [f64; 2]), b: (f64, [f64; 2])) -> (f64, [f64; 2]) {
    r_join(a, b, 1.0)
}

/// `f1 + f2 + sign * sqrt(f1^2 + f2^2)` with its gradient.
fn r_join((f1, g1): (f64, [f64; 2]), (f2, g2): (f64, [f64; 2]), sign: f64) -> (f64, [f64; 2]) {
    let root = f1.hypot(f2);
    let value = f1 + f2 + sign * root;
    let grad = if root > 0.0 {
        [
            g1[0] + g2[0] + sign * (f1 * g1[0] + f2 * g2[0]) / root,
            g1[1] + g2[1] + sign * (f1 * g1[1] + f2 * g2[1]) / root,
        ]
    } else {
        // joint zero: the R-function is not differentiable here
        [0.0, 0.0]
    };
    (value, grad)
}

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Shape::Box { lo, hi }
    }

    pub fn half_plane(normal: [f64; 2], offset: f64) -> Self {
        Shape::HalfPlane { normal, offset }
    }

    /// Unit disk minus the concentric disk of radius `inner`.
    pub fn annulus(inner: f64) -> Self {
        Shape::And(vec![
            Shape::disk([0.0, 0.0], 1.0),
            Shape::Not(Box::new(Shape::disk([0.0, 0.0], inner))),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config(format!("invalid disk radius {radius}")));
                }
            }
            Shape::Box { lo, hi } => {
                if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                    return Err(Error::Config(format!("invalid box {lo:?} {hi:?}")));
                }
            }
            Shape::HalfPlane { normal, offset } => {
                if !(normal[0].hypot(normal[1]) > 0.0) || !offset.is_finite() {
                    return Err(Error::Config("half-plane normal must be nonzero".into()));
                }
            }
            Shape::And(v) | Shape::Or(v) => {
                if v.is_empty() {
                    return Err(Error::Config("boolean node without operands".into()));
                }
                for s in v {
                    s.validate()?;
                }
            }
            Shape::Not(s) => s.validate()?,
        }
        Ok(())
    }

    /// Implicit function and its gradient at `x`.
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            Shape::Disk { center, radius } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let v = (radius * radius - d[0] * d[0] - d[1] * d[1]) / (2.0 * radius);
                (v, [-d[0] / radius, -d[1] / radius])
            }
            Shape::Box { lo, hi } => {
                let slab = |a: usize| {
                    let w = hi[a] - lo[a];
                    let v = (x[a] - lo[a]) * (hi[a] - x[a]) / w;
                    let mut g = [0.0; 2];
                    g[a] = (hi[a] + lo[a] - 2.0 * x[a]) / w;
                    (v, g)
                };
                r_and(slab(0), slab(1))
            }
            Shape::HalfPlane { normal, offset } => {
                let n = normal[0].hypot(normal[1]);
                let v = (offset - normal[0] * x[0] - normal[1] * x[1]) / n;
                (v, [-normal[0] / n, -normal[1] / n])
            }
            Shape::And(v) => {
                let mut acc = v[0].eval(x);
                for s in &v[1..] {
                    acc = r_and(acc, s.eval(x));
                }
                acc
            }
            Shape::Or(v) => {
                let mut acc = v[0].eval(x);
                for s in &v[1..] {
                    acc = r_or(acc, s.eval(x));
                }
                acc
            }
            Shape::Not(s) => {
                let (v, g) = s.eval(x);
                (-v, [-g[0], -g[1]])
            }
        }
    }
}

fn default_exponent() -> f64 {
    1.0
}

/// Implicitly described domain `{phi > 0}` with weight `w = phi^r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicitDomain {
    pub shape: Shape,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

impl ImplicitDomain {
    pub fn new(shape: Shape, exponent: f64) -> Result<Self> {
        let d = Self { shape, exponent };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_disk() -> Self {
        Self { shape: Shape::disk([0.0, 0.0], 1.0), exponent: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) || !self.exponent.is_finite() {
            return Err(Error::Config(format!(
                "weight exponent must be positive, got {}",
                self.exponent
            )));
        }
        self.shape.validate()
    }

    /// Level-set function: positive inside, zero on the boundary.
    pub fn phi(&self, x: [f64; 2]) -> f64 {
        self.shape.eval(x).0
    }

    pub fn inside(&self, x: [f64; 2]) -> bool {
        self.phi(x) > 0.0
    }

    /// `phi^r` inside, zero elsewhere.
    pub fn weight(&self, x: [f64; 2]) -> f64 {
        let v = self.phi(x);
        if v > 0.0 {
            self.pow(v)
        } else {
            0.0
        }
    }

    fn pow(&self, v: f64) -> f64 {
        if self.exponent == 1.0 {
            v
        } else {
            v.powf(self.exponent)
        }
    }

    /// Weight and gradient together. Outside the domain both vanish; on or
    /// outside the boundary the gradient is singular when `r < 1`.
    pub fn weight_with_gradient(&self, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let (v, g) = self.shape.eval(x);
        if v > 0.0 {
            if self.exponent == 1.0 {
                return Ok((v, g));
            }
            let w = v.powf(self.exponent);
            let s = self.exponent * w / v;
            Ok((w, [s * g[0], s * g[1]]))
        } else if self.exponent < 1.0 {
            Err(Error::SingularGradient { x: x[0], y: x[1] })
        } else {
            Ok((0.0, [0.0, 0.0]))
        }
    }

    pub fn weight_gradient(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.weight_with_gradient(x)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_weight() {
        let d = ImplicitDomain::unit_disk();
        assert_eq!(d.weight([0.0, 0.0]), 0.5);
        assert_eq!(d.weight([1.0, 0.0]), 0.0);
        assert_eq!(d.weight([0.0, -1.0]), 0.0);
        assert_eq!(d.weight([2.0, 0.0]), 0.0);
        assert_eq!(d.weight_gradient([0.5, 0.0]).unwrap(), [-0.5, 0.0]);
        assert_eq!(d.weight_gradient([0.0, 0.0]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn singular_gradient_for_small_exponent() {
        let d = ImplicitDomain::new(Shape::disk([0.0, 0.0], 1.0), 0.5).unwrap();
        assert!(matches!(
            d.weight_gradient([1.0, 0.0]),
            Err(Error::SingularGradient { .. })
        ));
        assert!(d.weight_gradient([0.3, 0.0]).is_ok());
    }

    #[test]
    fn boundary_points_vanish() {
        let shapes = [
            Shape::disk([0.2, -0.1], 0.7),
            Shape::rect([-1.0, -0.5], [1.0, 0.5]),
            Shape::half_plane([1.0, 1.0], 0.3),
            Shape::annulus(0.4),
        ];
        for s in shapes {
            let d = ImplicitDomain::new(s.clone(), 1.0).unwrap();
            let pts: Vec<[f64; 2]> = match &s {
                Shape::Disk { center, radius } => (0..32)
                    .map(|k| {
                        let t = k as f64 * 0.2;
                        [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect(),
                Shape::Box { lo, hi } => vec![[lo[0], 0.1], [hi[0], -0.2], [0.3, lo[1]], [hi[0], hi[1]]],
                Shape::HalfPlane { .. } => vec![[0.15, 0.15], [1.3, -1.0]],
                _ => (0..32)
                    .flat_map(|k| {
                        let t = k as f64 * 0.2;
                        [[t.cos(), t.sin()], [0.4 * t.cos(), 0.4 * t.sin()]]
                    })
                    .collect(),
            };
            for p in pts {
                assert!(d.phi(p).abs() < 1e-14, "{s:?} {p:?} {}", d.phi(p));
                assert_eq!(d.weight(p), 0.0f64.max(d.phi(p)));
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let d = ImplicitDomain::new(Shape::annulus(0.3), 1.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: ImplicitDomain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"shape": {"disk": {"center": [0,0], "radius": 1, "extra": 2}}}"#;
        assert!(serde_json::from_str::<ImplicitDomain>(bad).is_err());
    }
}
