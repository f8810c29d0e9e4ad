//! Shared geometry: points, 3x3 matrices, multi-indices, physical parameters,
//! the wake weight s(x) and the axial rotation matrix exp(t*Omega).

use crate::error::{KernelError, Result};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Reynolds-like translation speed `tau` and Taylor-like angular speed `rho`,
/// fixed per session. Construction rejects `tau <= 0` and `rho == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    tau: f64,
    rho: f64,
}

impl PhysParams {
    pub fn new(tau: f64, rho: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(KernelError::InvalidParameter(format!(
                "tau must be positive and finite, got {tau}"
            )));
        }
        if rho == 0.0 || !rho.is_finite() {
            return Err(KernelError::InvalidParameter(format!(
                "rho must be nonzero and finite, got {rho}"
            )));
        }
        Ok(Self { tau, rho })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Full rotation period 2*pi/|rho|.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.rho.abs()
    }
}

/// A point (or vector) in R^3. Coordinates are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3(pub [f64; 3]);

impl Point3 {
    pub const ZERO: Point3 = Point3([0.0; 3]);

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Point3([x1, x2, x3])
    }

    pub fn x1(&self) -> f64 {
        self.0[0]
    }

    pub fn x2(&self) -> f64 {
        self.0[1]
    }

    pub fn x3(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Point3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        self.scale(s)
    }
}

/// Plain 3x3 matrix, row-major. Copied freely; no sparse representation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Mat3 {
        let mut out = Mat3::ZERO;
        for j in 0..3 {
            for k in 0..3 {
                out.0[j][k] = self.0[k][j];
            }
        }
        out
    }

    pub fn mat_mul(&self, rhs: &Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for j in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for n in 0..3 {
                    s += self.0[j][n] * rhs.0[n][k];
                }
                out.0[j][k] = s;
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &Point3) -> Point3 {
        let mut out = Point3::ZERO;
        for j in 0..3 {
            out.0[j] = self.0[j][0] * v.0[0] + self.0[j][1] * v.0[1] + self.0[j][2] * v.0[2];
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn column(&self, k: usize) -> Point3 {
        Point3([self.0[0][k], self.0[1][k], self.0[2][k]])
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (j, k): (usize, usize)) -> &f64 {
        &self.0[j][k]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for j in 0..3 {
            for k in 0..3 {
                out.0[j][k] += rhs.0[j][k];
            }
        }
        out
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for j in 0..3 {
            for k in 0..3 {
                out.0[j][k] -= rhs.0[j][k];
            }
        }
        out
    }
}

/// Spatial multi-index of order <= 2. Derivative requests beyond second
/// order are rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiIndex {
    orders: [u8; 3],
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { orders: [0; 3] };

    pub fn new(a1: u8, a2: u8, a3: u8) -> Result<Self> {
        let order = a1 as u32 + a2 as u32 + a3 as u32;
        if order > 2 {
            return Err(KernelError::InvalidParameter(format!(
                "multi-index order {order} exceeds the supported maximum 2"
            )));
        }
        Ok(Self { orders: [a1, a2, a3] })
    }

    /// Unit multi-index e_j (0-based axis).
    pub fn unit(axis: usize) -> Self {
        let mut orders = [0u8; 3];
        orders[axis] = 1;
        Self { orders }
    }

    pub fn orders(&self) -> [u8; 3] {
        self.orders
    }

    pub fn order(&self) -> u8 {
        self.orders[0] + self.orders[1] + self.orders[2]
    }

    /// The one or two active axes of a first/second order index.
    pub fn axes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (axis, &n) in self.orders.iter().enumerate() {
            for _ in 0..n {
                out.push(axis);
            }
        }
        out
    }
}

/// Wake weight s(x) = 1 + |x| - x_1. Always >= 1 since |x| >= x_1.
pub fn wake_weight(x: &Point3) -> f64 {
    1.0 + x.norm() - x.x1()
}

/// The rotation matrix exp(t*Omega) about the x1-axis: block
/// rows (1,0,0), (0, cos(t*rho), -sin(t*rho)), (0, sin(t*rho), cos(t*rho)).
pub fn rotation_matrix(t: f64, p: &PhysParams) -> Mat3 {
    let (s, c) = (t * p.rho()).sin_cos();
    Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
}

/// omega x x = Omega . x = rho * (0, -x3, x2).
pub fn omega_cross(x: &Point3, p: &PhysParams) -> Point3 {
    Point3([0.0, -p.rho() * x.x3(), p.rho() * x.x2()])
}
