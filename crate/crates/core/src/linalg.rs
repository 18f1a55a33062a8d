//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices and a symmetric
//! eigensolver.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Matrix3<T> {
    pub rows: [[T; 3]; 3],
}

/// Cartesian 3-vector.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vector3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

pub(crate) const ELEMENT_NAMES: [&str; 9] = ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"];

impl<T: Real> Vector3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn outer(self, o: Self) -> Matrix3<T> {
        let a = self.to_array();
        let b = o.to_array();
        Matrix3::from_fn(|i, j| a[i] * b[j])
    }
}

impl<T: Real> Add for Vector3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vector3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vector3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Matrix3<T> {
    pub fn new(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut rows = [[T::zero(); 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        Self { rows }
    }

    /// Builds from nine values in `xx, xy, xz, yx, ..., zz` order.
    pub fn from_row_major(v: [T; 9]) -> Self {
        Self::from_fn(|i, j| v[3 * i + j])
    }

    pub fn to_row_major(&self) -> [T; 9] {
        let mut out = [T::zero(); 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.rows[i][j];
            }
        }
        out
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| T::zero())
    }

    pub fn identity() -> Self {
        Self::diag([T::one(); 3])
    }

    pub fn diag(d: [T; 3]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { T::zero() })
    }

    pub fn from_columns(c: [Vector3<T>; 3]) -> Self {
        let c = c.map(Vector3::to_array);
        Self::from_fn(|i, j| c[j][i])
    }

    pub fn column(&self, j: usize) -> Vector3<T> {
        Vector3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn row(&self, i: usize) -> Vector3<T> {
        Vector3::from_array(self.rows[i])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.rows[j][i])
    }

    pub fn trace(&self) -> T {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn determinant(&self) -> T {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(|i, j| self.rows[i][j] * s)
    }

    pub fn mul_vec(&self, v: Vector3<T>) -> Vector3<T> {
        Vector3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// `(m + mᵀ)/2`
    pub fn symmetric_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(|i, j| (self.rows[i][j] + self.rows[j][i]) * half)
    }

    /// `(m − mᵀ)/2`
    pub fn antisymmetric_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(|i, j| (self.rows[i][j] - self.rows[j][i]) * half)
    }

    /// `R · self · Rᵀ`
    pub fn similarity(&self, r: &Self) -> Self {
        *r * *self * r.transpose()
    }

    pub fn frobenius_norm(&self) -> T {
        self.rows
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.rows
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    /// Orthogonal with determinant +1 within `tol`.
    pub fn is_proper_rotation(&self, tol: T) -> bool {
        let gram = self.transpose() * *self;
        gram.max_abs_diff(&Self::identity()) <= tol && (self.determinant() - T::one()).abs() <= tol
    }
}

impl<T: Real> Mul for Matrix3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::from_fn(|i, j| {
            self.rows[i][0] * o.rows[0][j]
                + self.rows[i][1] * o.rows[1][j]
                + self.rows[i][2] * o.rows[2][j]
        })
    }
}

impl<T: Real> Add for Matrix3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.rows[i][j] + o.rows[i][j])
    }
}

impl<T: Real> Sub for Matrix3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.rows[i][j] - o.rows[i][j])
    }
}

impl<T> Index<(usize, usize)> for Matrix3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.rows[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.rows[i][j]
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns unsorted eigenvalues and the matrix whose columns are the matching
/// orthonormal eigenvectors. Acts on the symmetric part of `m`. A matrix that
/// is already diagonal comes back untouched with identity eigenvectors.
pub fn symmetric_eigen<T: Real>(m: &Matrix3<T>) -> ([T; 3], Matrix3<T>) {
    let mut a = m.symmetric_part();
    let mut v = Matrix3::<T>::identity();
    let scale = a.max_abs();
    if scale == T::zero() {
        return ([T::zero(); 3], v);
    }
    let eps = T::epsilon();

    for _sweep in 0..64 {
        let off = (a[(0, 1)] * a[(0, 1)] + a[(0, 2)] * a[(0, 2)] + a[(1, 2)] * a[(1, 2)]).sqrt();
        if off <= eps * eps * scale || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == T::zero() {
                continue;
            }
            let app = a[(p, p)];
            let aqq = a[(q, q)];
            // Skip rotations that would not change the diagonal in this precision.
            if apq.abs() <= eps * T::lit(0.01) * (app.abs() + aqq.abs()).max(scale) {
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                continue;
            }
            let theta = (aqq - app) / (T::lit(2.0) * apq);
            let t = {
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                sign / (theta.abs() + (theta * theta + T::one()).sqrt())
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            let r = 3 - p - q;
            a[(p, p)] = app - t * apq;
            a[(q, q)] = aqq + t * apq;
            a[(p, q)] = T::zero();
            a[(q, p)] = T::zero();
            let arp = a[(r, p)];
            let arq = a[(r, q)];
            a[(r, p)] = c * arp - s * arq;
            a[(p, r)] = a[(r, p)];
            a[(r, q)] = s * arp + c * arq;
            a[(q, r)] = a[(r, q)];
            for k in 0..3 {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
    ([a[(0, 0)], a[(1, 1)], a[(2, 2)]], v)
}

// Serialized as an object keyed `xx..zz`, mirroring the SpinXML attribute names.
impl<T: Real + Serialize> Serialize for Matrix3<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Matrix3", 9)?;
        for (name, v) in ELEMENT_NAMES.iter().zip(self.to_row_major()) {
            st.serialize_field(name, &v)?;
        }
        st.end()
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Matrix3<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MatrixVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Real + Deserialize<'de>> Visitor<'de> for MatrixVisitor<T> {
            type Value = Matrix3<T>;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object with keys xx, xy, xz, yx, yy, yz, zx, zy, zz")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut vals: [Option<T>; 9] = [None; 9];
                while let Some(key) = map.next_key::<String>()? {
                    let idx = ELEMENT_NAMES
                        .iter()
                        .position(|n| *n == key)
                        .ok_or_else(|| de::Error::unknown_field(&key, &ELEMENT_NAMES))?;
                    if vals[idx].is_some() {
                        return Err(de::Error::duplicate_field(ELEMENT_NAMES[idx]));
                    }
                    vals[idx] = Some(map.next_value()?);
                }
                let mut out = [T::zero(); 9];
                for (i, v) in vals.into_iter().enumerate() {
                    out[i] = v.ok_or_else(|| de::Error::missing_field(ELEMENT_NAMES[i]))?;
                }
                Ok(Matrix3::from_row_major(out))
            }
        }

        deserializer.deserialize_map(MatrixVisitor(std::marker::PhantomData))
    }
}

impl<T: Real + Serialize> Serialize for Vector3<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Vector3", 3)?;
        st.serialize_field("x", &self.x)?;
        st.serialize_field("y", &self.y)?;
        st.serialize_field("z", &self.z)?;
        st.end()
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Vector3<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Xyz<T> {
            x: T,
            y: T,
            z: T,
        }
        let v = Xyz::<T>::deserialize(deserializer)?;
        Ok(Vector3::new(v.x, v.y, v.z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_transpose() {
        let m = Matrix3::from_row_major([2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0]);
        assert_eq!(m.determinant(), 25.0);
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn jacobi_diagonal_is_untouched() {
        let (vals, vecs) = symmetric_eigen(&Matrix3::diag([3.0, 1.0, 2.0]));
        assert_eq!(vals, [3.0, 1.0, 2.0]);
        assert_eq!(vecs, Matrix3::identity());
    }

    #[test]
    fn jacobi_reconstructs_dense_matrix() {
        let m = Matrix3::from_row_major([4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, -3.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        let back = Matrix3::diag(vals).similarity(&vecs);
        assert!(back.max_abs_diff(&m) < 1e-13);
        assert!((vecs.transpose() * vecs).max_abs_diff(&Matrix3::identity()) < 1e-14);
    }

    #[test]
    fn jacobi_in_single_precision() {
        let m = Matrix3::<f32>::from_row_major([4.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        let back = Matrix3::diag(vals).similarity(&vecs);
        assert!(back.max_abs_diff(&m) < 1e-5);
    }

    #[test]
    fn matrix_json_uses_element_names() {
        let m = Matrix3::from_row_major([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"xx":1.0,"xy":2.0,"xz":3.0,"yx":4.0,"yy":5.0,"yz":6.0,"zx":7.0,"zy":8.0,"zz":9.0}"#
        );
        let back: Matrix3<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
