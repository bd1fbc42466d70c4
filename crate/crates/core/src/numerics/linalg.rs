//! Fixed-size vectors and matrices, plus the small symmetric eigenproblem
//! machinery behind the rotational upper bound.
//!
//! Everything here is sized at most 4x4. The eigensolver is a cyclic Jacobi
//! iteration; generalized problems are reduced through a Cholesky factor.

use crate::error::{AlignError, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// 3-vector of f64.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn min_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        match i {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn diag(d: Vec3) -> Self {
        let mut m = Mat3::zeros();
        m.0[0][0] = d.x;
        m.0[1][1] = d.y;
        m.0[2][2] = d.z;
        m
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y + self.0[0][2] * v.z,
            self.0[1][0] * v.x + self.0[1][1] * v.y + self.0[1][2] * v.z,
            self.0[2][0] * v.x + self.0[2][1] * v.y + self.0[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    r.0[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        r
    }

    pub fn transpose(&self) -> Mat3 {
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = self.0[j][i];
            }
        }
        r
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; returns None when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        let mut r = Mat3::zeros();
        r.0[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
        r.0[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
        r.0[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
        r.0[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
        r.0[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
        r.0[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
        r.0[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
        r.0[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
        r.0[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        Some(r)
    }

    pub fn add_mat(&self, o: &Mat3) -> Mat3 {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] *= s;
            }
        }
        r
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Row-major 4x4 matrix. Columns are accessed when the matrix stacks
/// tetrahedron vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn mul_vec(&self, v: [f64; 4]) -> [f64; 4] {
        let mut r = [0.0; 4];
        for i in 0..4 {
            for k in 0..4 {
                r[i] += self.0[i][k] * v[k];
            }
        }
        r
    }

    pub fn mul_mat(&self, o: &Mat4) -> Mat4 {
        let mut r = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    r.0[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        r
    }

    pub fn transpose(&self) -> Mat4 {
        let mut r = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                r.0[i][j] = self.0[j][i];
            }
        }
        r
    }

    pub fn column(&self, j: usize) -> [f64; 4] {
        [self.0[0][j], self.0[1][j], self.0[2][j], self.0[3][j]]
    }
}

/// Symmetric 4x4 matrix; construction mirrors the upper triangle so the
/// stored value is symmetric exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat4 {
    m: [[f64; 4]; 4],
}

impl SymMat4 {
    pub fn zeros() -> Self {
        SymMat4 { m: [[0.0; 4]; 4] }
    }

    /// Build from the upper triangle of `m`, mirroring into the lower.
    pub fn from_upper(m: [[f64; 4]; 4]) -> Self {
        let mut s = m;
        for i in 0..4 {
            for j in 0..i {
                s[i][j] = s[j][i];
            }
        }
        SymMat4 { m: s }
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        SymMat4 { m }
    }

    pub fn identity() -> Self {
        SymMat4::diag([1.0; 4])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    pub fn add_scaled(&mut self, o: &SymMat4, s: f64) {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += s * o.m[i][j];
            }
        }
    }

    pub fn quadratic_form(&self, q: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += q[i] * self.m[i][j] * q[j];
            }
        }
        acc
    }

    pub fn trace(&self, dim: usize) -> f64 {
        (0..dim).map(|i| self.m[i][i]).sum()
    }

    pub fn frobenius(&self, dim: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 50;

/// Eigendecomposition of the leading `dim x dim` block of a symmetric matrix
/// by cyclic Jacobi rotations. Returns eigenvalues in descending order and
/// the matching orthonormal eigenvectors as columns of a `Mat4` (entries
/// outside the active block are zero).
pub fn sym_eig(a: &SymMat4, dim: usize) -> ([f64; 4], Mat4) {
    debug_assert!((1..=4).contains(&dim));
    let mut m = *a.as_array();
    let mut v = Mat4::identity().0;
    let scale = a.frobenius(dim).max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += m[p][q] * m[p][q];
            }
        }
        if off.sqrt() <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                if m[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..dim {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..4 {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut eig = [0.0; 4];
    for i in 0..dim {
        eig[i] = m[i][i];
    }
    // sort eigenpairs descending by eigenvalue within the active block
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig[j].total_cmp(&eig[i]));
    let mut eig_sorted = [0.0; 4];
    let mut v_sorted = Mat4::zeros().0;
    for (dst, &src) in order.iter().enumerate() {
        eig_sorted[dst] = eig[src];
        for k in 0..4 {
            v_sorted[k][dst] = v[k][src];
        }
    }
    // zero out the inactive block of the eigenvector matrix
    for j in dim..4 {
        for k in 0..4 {
            v_sorted[k][j] = 0.0;
        }
    }
    (eig_sorted, Mat4(v_sorted))
}

/// Lower Cholesky factor of the leading `dim x dim` block of `b`.
/// Fails with `SingularB` when a pivot drops below `1e-12 * trace(b)`.
pub fn cholesky(b: &SymMat4, dim: usize) -> Result<[[f64; 4]; 4]> {
    let tol = 1e-12 * b.trace(dim).abs().max(f64::MIN_POSITIVE);
    let mut l = [[0.0; 4]; 4];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = b.get(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s < tol {
                    return Err(AlignError::SingularB { pivot: s });
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Generalized symmetric eigenproblem `A v = lambda B v` on the leading
/// `dim x dim` block, with `B` positive definite. Reduces through the
/// Cholesky factor `B = L L^T` and runs `sym_eig` on `L^-1 A L^-T`.
/// Eigenvalues are descending; eigenvectors are columns (B-orthonormal).
pub fn gen_eig_pair(a: &SymMat4, b: &SymMat4, dim: usize) -> Result<([f64; 4], Mat4)> {
    let l = cholesky(b, dim)?;

    // C = L^-1 A L^-T via two triangular solves
    let mut c = [[0.0; 4]; 4];
    // X = L^-1 A  (forward substitution per column)
    let mut x = [[0.0; 4]; 4];
    for j in 0..dim {
        for i in 0..dim {
            let mut s = a.get(i, j);
            for k in 0..i {
                s -= l[i][k] * x[k][j];
            }
            x[i][j] = s / l[i][i];
        }
    }
    // C = X L^-T, i.e. solve C L^T = X row by row (forward in columns)
    for i in 0..dim {
        for j in 0..dim {
            let mut s = x[i][j];
            for k in 0..j {
                s -= c[i][k] * l[j][k];
            }
            c[i][j] = s / l[j][j];
        }
    }
    let (eig, y) = sym_eig(&SymMat4::from_upper(c), dim);

    // back-substitute v = L^-T y per column
    let mut v = Mat4::zeros().0;
    for j in 0..dim {
        for i in (0..dim).rev() {
            let mut s = y.0[i][j];
            for k in (i + 1)..dim {
                s -= l[k][i] * v[k][j];
            }
            v[i][j] = s / l[i][i];
        }
    }
    Ok((eig, Mat4(v)))
}

/// Solve the leading `dim x dim` system `A x = rhs` by Gaussian elimination
/// with partial pivoting. Returns None when a pivot falls below
/// `tol_rel * max|A|`.
pub fn solve_linear(a: &Mat4, rhs: [f64; 4], dim: usize, tol_rel: f64) -> Option<[f64; 4]> {
    let mut m = a.0;
    let mut b = rhs;
    let scale = m
        .iter()
        .take(dim)
        .flat_map(|r| r.iter().take(dim))
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = tol_rel * scale;

    for col in 0..dim {
        let mut piv = col;
        for r in (col + 1)..dim {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < tol {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..dim {
            let f = m[r][col] / m[col][col];
            for c in col..dim {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..dim).rev() {
        let mut s = b[r];
        for c in (r + 1)..dim {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut impl Rng) -> SymMat4 {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                m[i][j] = rng.gen_range(-1.0..1.0);
            }
        }
        SymMat4::from_upper(m)
    }

    fn random_spd(rng: &mut impl Rng) -> SymMat4 {
        // G^T G + I is comfortably positive definite
        let mut g = [[0.0; 4]; 4];
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    m[i][j] += g[k][i] * g[k][j];
                }
            }
            m[i][i] += 1.0;
        }
        SymMat4::from_upper(m)
    }

    #[test]
    fn sym_eig_diagonal() {
        let a = SymMat4::diag([3.0, 1.0, 0.0, 0.0]);
        let (eig, v) = sym_eig(&a, 2);
        assert!((eig[0] - 3.0).abs() < 1e-12);
        assert!((eig[1] - 1.0).abs() < 1e-12);
        assert!((v.0[0][0].abs() - 1.0).abs() < 1e-12);
        assert!((v.0[1][1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_sym(&mut rng);
            let (eig, v) = sym_eig(&a, 4);
            // A = V diag(eig) V^T
            for i in 0..4 {
                for j in 0..4 {
                    let mut r = 0.0;
                    for k in 0..4 {
                        r += v.0[i][k] * eig[k] * v.0[j][k];
                    }
                    assert!((r - a.get(i, j)).abs() < 1e-10, "reconstruction failed");
                }
            }
        }
    }

    #[test]
    fn sym_eig_hilbert3_lambda_max() {
        // leading 3x3 Hilbert block; lambda_max cross-checked by bisection on
        // the characteristic polynomial below
        let mut m = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = 1.0 / ((i + j + 1) as f64);
            }
        }
        let a = SymMat4::from_upper(m);
        let (eig, _) = sym_eig(&a, 3);

        // char poly of 3x3 Hilbert: det(A - xI); root isolated in [1.4, 1.5]
        let charpoly = |x: f64| -> f64 {
            let b = [
                [1.0 - x, 0.5, 1.0 / 3.0],
                [0.5, 1.0 / 3.0 - x, 0.25],
                [1.0 / 3.0, 0.25, 0.2 - x],
            ];
            b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
        };
        let (mut lo, mut hi) = (1.4, 1.5);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if charpoly(lo) * charpoly(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - 1.40832).abs() < 1e-4);
        assert!((eig[0] - oracle).abs() < 1e-10);
    }

    #[test]
    fn gen_eig_trivial_cases() {
        let a = SymMat4::diag([2.0, 1.0, 0.0, 0.0]);
        let b = SymMat4::identity();
        let (eig, v) = gen_eig_pair(&a, &b, 2).unwrap();
        assert!((eig[0] - 2.0).abs() < 1e-12);
        assert!(v.0[0][0].abs() > 0.99 && v.0[1][0].abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spd = random_spd(&mut rng);
        let (eig, _) = gen_eig_pair(&spd, &spd, 4).unwrap();
        for e in eig {
            assert!((e - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gen_eig_residual_and_rayleigh() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a = random_sym(&mut rng);
            let b = random_spd(&mut rng);
            let (eig, v) = gen_eig_pair(&a, &b, 4).unwrap();
            let norm = a.frobenius(4) + b.frobenius(4);
            for idx in 0..4 {
                let col = v.column(idx);
                for i in 0..4 {
                    let mut av = 0.0;
                    let mut bv = 0.0;
                    for k in 0..4 {
                        av += a.get(i, k) * col[k];
                        bv += b.get(i, k) * col[k];
                    }
                    assert!((av - eig[idx] * bv).abs() <= 1e-9 * norm);
                }
            }
            // Rayleigh quotient sampling: no sampled direction beats lambda_max
            for _ in 0..2000 {
                let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let ray = a.quadratic_form(x) / b.quadratic_form(x);
                assert!(ray <= eig[0] + 1e-9 * norm.max(1.0));
            }
        }
    }

    #[test]
    fn gen_eig_rayleigh_sampling_tightness() {
        // max lambda matches max over many random unit x of x'Ax/x'Bx
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = random_sym(&mut rng);
        let b = random_spd(&mut rng);
        let (eig, _) = gen_eig_pair(&a, &b, 4).unwrap();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            best = best.max(a.quadratic_form(x) / b.quadratic_form(x));
        }
        assert!((best - eig[0]).abs() < 1e-3 * eig[0].abs().max(1.0));
    }

    #[test]
    fn cholesky_rejects_singular() {
        let b = SymMat4::diag([1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            cholesky(&b, 3),
            Err(AlignError::SingularB { .. })
        ));
    }

    #[test]
    fn solve_linear_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut a = Mat4::zeros();
            for row in a.0.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
            let x_true: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let rhs = a.mul_vec(x_true);
            if let Some(x) = solve_linear(&a, rhs, 4, 1e-12) {
                for i in 0..4 {
                    assert!((x[i] - x_true[i]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn mat3_inverse() {
        let m = Mat3([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]]);
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.0[i][j] - want).abs() < 1e-12);
            }
        }
    }
}
