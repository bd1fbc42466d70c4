//! Unit quaternions in (i, j, k, r) component order and the Xi matrix that
//! rewrites `u^T (q . v)` as the quadratic form `q^T Xi(u, v) q`.

use super::linalg::{Mat3, SymMat4, Vec3};
use serde::{Deserialize, Serialize};

/// Unit quaternion stored as (i, j, k, r). The "north" reference of the
/// rotation hemisphere is (0, 0, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub i: f64,
    pub j: f64,
    pub k: f64,
    pub r: f64,
}

pub const NORTH: UnitQuaternion = UnitQuaternion { i: 0.0, j: 0.0, k: 0.0, r: 1.0 };

impl UnitQuaternion {
    /// Identity rotation.
    pub fn identity() -> Self {
        NORTH
    }

    /// Construct from components, normalizing to unit length.
    pub fn new(i: f64, j: f64, k: f64, r: f64) -> Self {
        let n = (i * i + j * j + k * k + r * r).sqrt();
        debug_assert!(n > 0.0, "zero quaternion");
        UnitQuaternion { i: i / n, j: j / n, k: k / n, r: r / n }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        UnitQuaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.i, self.j, self.k, self.r]
    }

    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let a = axis.normalized();
        let (s, c) = (0.5 * angle_rad).sin_cos();
        UnitQuaternion::new(a.x * s, a.y * s, a.z * s, c)
    }

    pub fn norm(&self) -> f64 {
        (self.i * self.i + self.j * self.j + self.k * self.k + self.r * self.r).sqrt()
    }

    pub fn dot(&self, o: &UnitQuaternion) -> f64 {
        self.i * o.i + self.j * o.j + self.k * o.k + self.r * o.r
    }

    pub fn conjugate(&self) -> Self {
        UnitQuaternion { i: -self.i, j: -self.j, k: -self.k, r: self.r }
    }

    pub fn negated(&self) -> Self {
        UnitQuaternion { i: -self.i, j: -self.j, k: -self.k, r: -self.r }
    }

    /// Hamilton product self * other.
    pub fn mul(&self, o: &UnitQuaternion) -> Self {
        UnitQuaternion::new(
            self.r * o.i + self.i * o.r + self.j * o.k - self.k * o.j,
            self.r * o.j - self.i * o.k + self.j * o.r + self.k * o.i,
            self.r * o.k + self.i * o.j - self.j * o.i + self.k * o.r,
            self.r * o.r - self.i * o.i - self.j * o.j - self.k * o.k,
        )
    }

    /// The rotation matrix of this quaternion.
    pub fn rotation_matrix(&self) -> Mat3 {
        let q = self.renormalized();
        let (qi, qj, qk, qr) = (q.i, q.j, q.k, q.r);
        Mat3([
            [
                1.0 - 2.0 * (qj * qj + qk * qk),
                2.0 * (qi * qj - qk * qr),
                2.0 * (qi * qk + qj * qr),
            ],
            [
                2.0 * (qi * qj + qk * qr),
                1.0 - 2.0 * (qi * qi + qk * qk),
                2.0 * (qj * qk - qi * qr),
            ],
            [
                2.0 * (qi * qk - qj * qr),
                2.0 * (qj * qk + qi * qr),
                1.0 - 2.0 * (qi * qi + qj * qj),
            ],
        ])
    }

    /// Rotate a 3-vector: the matrix action of q on v.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.rotation_matrix().mul_vec(v)
    }

    /// Rotation angle (radians) between self and other as rotations,
    /// i.e. 2 acos |<q1, q2>|.
    pub fn rotation_angle_to(&self, o: &UnitQuaternion) -> f64 {
        2.0 * self.dot(o).abs().clamp(0.0, 1.0).acos()
    }

    /// Canonical hemisphere representative: the sign with nonnegative dot
    /// against north (0,0,0,1).
    pub fn canonicalized(&self) -> Self {
        if self.r < 0.0 {
            self.negated()
        } else {
            *self
        }
    }

    fn renormalized(&self) -> Self {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-9 {
            UnitQuaternion { i: self.i / n, j: self.j / n, k: self.k / n, r: self.r / n }
        } else {
            *self
        }
    }
}

/// The symmetric 4x4 matrix Xi(u, v) with `q^T Xi q = u^T (q . v)` for every
/// unit quaternion q. Requires unit u, v; the (r, r) entry is `u^T v`.
pub fn xi_matrix(u: Vec3, v: Vec3) -> SymMat4 {
    let (ui, uj, uk) = (u.x, u.y, u.z);
    let (vi, vj, vk) = (v.x, v.y, v.z);
    SymMat4::from_upper([
        [
            ui * vi - uj * vj - uk * vk,
            uj * vi + ui * vj,
            ui * vk + uk * vi,
            uk * vj - uj * vk,
        ],
        [
            0.0,
            uj * vj - ui * vi - uk * vk,
            uj * vk + uk * vj,
            ui * vk - uk * vi,
        ],
        [0.0, 0.0, uk * vk - ui * vi - uj * vj, uj * vi - ui * vj],
        [0.0, 0.0, 0.0, ui * vi + uj * vj + uk * vk],
    ])
}
