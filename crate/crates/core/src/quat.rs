//! Quaternion arithmetic and the `H × H = R⁸` layout used by the Hopf map.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;

/// `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Quaternion::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn re(self) -> f64 {
        self.w
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(s * self.w, s * self.x, s * self.y, s * self.z)
    }

    /// Four-dimensional Euclidean inner product, `Re(ā b)`.
    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w + b.w, self.x + b.x, self.y + b.y, self.z + b.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w - b.w, self.x - b.x, self.y - b.y, self.z - b.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

pub fn qconj(a: Quaternion) -> Quaternion {
    a.conj()
}

/// `Re(ā u + b̄ v)`: the Euclidean inner product of `(a, b)` and `(u, v)` in `R⁸`.
pub fn pair_dot(a: Quaternion, b: Quaternion, u: Quaternion, v: Quaternion) -> f64 {
    (a.conj() * u + b.conj() * v).re()
}

/// Flatten `(u, v)` to `(u.w, u.x, u.y, u.z, v.w, v.x, v.y, v.z)`.
pub fn pair_to_vec(u: Quaternion, v: Quaternion) -> DVector<f64> {
    DVector::from_vec(vec![u.w, u.x, u.y, u.z, v.w, v.x, v.y, v.z])
}

/// Inverse of [`pair_to_vec`].
pub fn vec_to_pair(x: &[f64]) -> (Quaternion, Quaternion) {
    (Quaternion::from_slice(&x[0..4]), Quaternion::from_slice(&x[4..8]))
}
