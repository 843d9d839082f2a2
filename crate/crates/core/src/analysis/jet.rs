use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order forward-mode jet in two variables: value, gradient and
/// Hessian propagated through arithmetic and elementary functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The coordinate functions `(x, y)` at a point.
    pub fn vars(x: [f64; 2]) -> [Self; 2] {
        [
            Self { v: x[0], g: [1.0, 0.0], h: [[0.0; 2]; 2] },
            Self { v: x[1], g: [0.0, 1.0], h: [[0.0; 2]; 2] },
        ]
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.v`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        Self { v: f0, g: [f1 * self.g[0], f1 * self.g[1]], h }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn powf(self, a: f64) -> Self {
        let x = self.v;
        self.chain(x.powf(a), a * x.powf(a - 1.0), a * (a - 1.0) * x.powf(a - 2.0))
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1]
    }

    pub fn grad_norm2(&self) -> f64 {
        self.g[0] * self.g[0] + self.g[1] * self.g[1]
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut h = self.h;
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] += o.h[i][j];
            }
        }
        Self { v: self.v + o.v, g: [self.g[0] + o.g[0], self.g[1] + o.g[1]], h }
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.h[i][j] * o.v + self.g[i] * o.g[j] + self.g[j] * o.g[i] + self.v * o.h[i][j];
            }
        }
        Self { v: self.v * o.v, g: [self.g[0] * o.v + self.v * o.g[0], self.g[1] * o.v + self.v * o.g[1]], h }
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let x = o.v;
        self * o.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        self + -c
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        let mut h = self.h;
        for row in h.iter_mut() {
            for e in row.iter_mut() {
                *e *= c;
            }
        }
        Self { v: self.v * c, g: [self.g[0] * c, self.g[1] * c], h }
    }
}

impl Add<Jet2> for f64 {
    type Output = Jet2;
    fn add(self, j: Jet2) -> Jet2 {
        j + self
    }
}

impl Sub<Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, j: Jet2) -> Jet2 {
        -j + self
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}
