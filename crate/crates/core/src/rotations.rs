//! Orientation conventions and conversions between them.
//!
//! All four conventions describe an *active*, right-handed rotation. Euler
//! angles are ZYZ in degrees: `R = Rz(alpha) · Ry(beta) · Rz(gamma)`.
//! Quaternions are stored `(w, x, y, z)`, scalar first. For interaction
//! tensors the rotation carries the principal axis frame into the reference
//! frame, so a tensor with principal values `λ` is `R · diag(λ) · Rᵀ`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix3, Vector3};
use crate::scalar::Real;

/// One orientation in any of the four supported conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum Rotation<T> {
    /// ZYZ Euler angles in degrees.
    EulerAngles { alpha: T, beta: T, gamma: T },
    /// Rotation angle in degrees about a unit axis.
    AngleAxis { angle: T, axis: Vector3<T> },
    /// Unit quaternion, scalar part first.
    Quaternion { w: T, x: T, y: T, z: T },
    /// Direction cosine matrix.
    Dcm(Matrix3<T>),
}

/// Convention selector for [`from_dcm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    EulerAngles,
    AngleAxis,
    Quaternion,
    Dcm,
}

impl Convention {
    pub const ALL: [Convention; 4] = [
        Convention::EulerAngles,
        Convention::AngleAxis,
        Convention::Quaternion,
        Convention::Dcm,
    ];
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error("{what} is not normalized (norm {norm})")]
    NotNormalized { what: &'static str, norm: f64 },
    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),
    #[error("non-finite rotation parameter")]
    NonFinite,
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Rotation::Dcm(Matrix3::identity())
    }

    pub fn euler(alpha: T, beta: T, gamma: T) -> Self {
        Rotation::EulerAngles { alpha, beta, gamma }
    }

    pub fn convention(&self) -> Convention {
        match self {
            Rotation::EulerAngles { .. } => Convention::EulerAngles,
            Rotation::AngleAxis { .. } => Convention::AngleAxis,
            Rotation::Quaternion { .. } => Convention::Quaternion,
            Rotation::Dcm(_) => Convention::Dcm,
        }
    }

    /// Checks the invariants of the stored variant.
    pub fn validate(&self) -> Result<(), RotationError> {
        to_dcm(self).map(|_| ())
    }

    /// Re-expresses this rotation in another convention (canonical form).
    pub fn convert(&self, target: Convention) -> Result<Self, RotationError> {
        from_dcm(&to_dcm(self)?, target)
    }
}

/// Active rotation about z by `deg` degrees.
pub fn rz<T: Real>(deg: T) -> Matrix3<T> {
    let (s, c) = deg.to_radians().sin_cos();
    let (o, l) = (T::zero(), T::one());
    Matrix3::new([[c, -s, o], [s, c, o], [o, o, l]])
}

/// Active rotation about y by `deg` degrees.
pub fn ry<T: Real>(deg: T) -> Matrix3<T> {
    let (s, c) = deg.to_radians().sin_cos();
    let (o, l) = (T::zero(), T::one());
    Matrix3::new([[c, o, s], [o, l, o], [-s, o, c]])
}

fn check_finite<T: Real>(vals: &[T]) -> Result<(), RotationError> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RotationError::NonFinite)
    }
}

fn quaternion_to_dcm<T: Real>(w: T, x: T, y: T, z: T) -> Matrix3<T> {
    let two = T::lit(2.0);
    let one = T::one();
    Matrix3::new([
        [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
        [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
        [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
    ])
}

/// Converts any rotation to its direction cosine matrix.
pub fn to_dcm<T: Real>(r: &Rotation<T>) -> Result<Matrix3<T>, RotationError> {
    let tol = T::validation_tol();
    match *r {
        Rotation::EulerAngles { alpha, beta, gamma } => {
            check_finite(&[alpha, beta, gamma])?;
            Ok(rz(alpha) * ry(beta) * rz(gamma))
        }
        Rotation::AngleAxis { angle, axis } => {
            check_finite(&[angle, axis.x, axis.y, axis.z])?;
            let n = axis.norm();
            if (n - T::one()).abs() > tol {
                return Err(RotationError::NotNormalized {
                    what: "angle-axis axis",
                    norm: n.to_f64_lossy(),
                });
            }
            let k = axis.scale(T::one() / n);
            let (s, c) = angle.to_radians().sin_cos();
            let kx = Matrix3::new([
                [T::zero(), -k.z, k.y],
                [k.z, T::zero(), -k.x],
                [-k.y, k.x, T::zero()],
            ]);
            Ok(Matrix3::identity().scale(c) + kx.scale(s) + k.outer(k).scale(T::one() - c))
        }
        Rotation::Quaternion { w, x, y, z } => {
            check_finite(&[w, x, y, z])?;
            let n = (w * w + x * x + y * y + z * z).sqrt();
            if (n - T::one()).abs() > tol {
                return Err(RotationError::NotNormalized {
                    what: "quaternion",
                    norm: n.to_f64_lossy(),
                });
            }
            Ok(quaternion_to_dcm(w / n, x / n, y / n, z / n))
        }
        Rotation::Dcm(m) => {
            check_finite(&m.to_row_major())?;
            check_proper(&m)?;
            Ok(m)
        }
    }
}

fn check_proper<T: Real>(m: &Matrix3<T>) -> Result<(), RotationError> {
    let tol = T::validation_tol();
    let gram_err = (m.transpose() * *m).max_abs_diff(&Matrix3::identity());
    if gram_err > tol {
        return Err(RotationError::InvalidRotation(format!(
            "not orthogonal (|MᵀM − I| = {gram_err})"
        )));
    }
    let det = m.determinant();
    if (det - T::one()).abs() > tol {
        return Err(RotationError::InvalidRotation(format!("determinant {det}, expected +1")));
    }
    Ok(())
}

/// Canonical unit quaternion `(w, x, y, z)` with `w ≥ 0`; when `w = 0` the
/// first nonzero vector component is positive.
pub fn quaternion_from_dcm<T: Real>(m: &Matrix3<T>) -> [T; 4] {
    let one = T::one();
    let two = T::lit(2.0);
    let quarter = T::lit(0.25);
    let tr = m.trace();
    let (m00, m11, m22) = (m[(0, 0)], m[(1, 1)], m[(2, 2)]);
    let mut q = if tr >= m00 && tr >= m11 && tr >= m22 {
        let s = (one + tr).sqrt() * two;
        [
            quarter * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        ]
    } else if m00 >= m11 && m00 >= m22 {
        let s = (one + m00 - m11 - m22).sqrt() * two;
        [
            (m[(2, 1)] - m[(1, 2)]) / s,
            quarter * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        ]
    } else if m11 >= m22 {
        let s = (one + m11 - m00 - m22).sqrt() * two;
        [
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            quarter * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        ]
    } else {
        let s = (one + m22 - m00 - m11).sqrt() * two;
        [
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            quarter * s,
        ]
    };
    let n = q.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    for v in q.iter_mut() {
        *v = *v / n;
    }
    canonical_quaternion(q)
}

fn canonical_quaternion<T: Real>(q: [T; 4]) -> [T; 4] {
    let flip = if q[0] != T::zero() {
        q[0] < T::zero()
    } else {
        q[1..]
            .iter()
            .find(|v| **v != T::zero())
            .is_some_and(|v| *v < T::zero())
    };
    if flip {
        q.map(|v| -v)
    } else {
        q
    }
}

/// Wraps an angle in degrees into `(-180, 180]`.
fn wrap_degrees<T: Real>(a: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut w = a % full;
    if w > half {
        w = w - full;
    } else if w <= -half {
        w = w + full;
    }
    w
}

/// ZYZ Euler angles `(alpha, beta, gamma)` in degrees, `beta ∈ [0, 180]`.
///
/// Gimbal lock (`|sin beta| < 1e-10`) sets `gamma = 0` and folds the whole
/// z rotation into `alpha`.
pub fn euler_from_dcm<T: Real>(m: &Matrix3<T>) -> [T; 3] {
    // With q = qz(α)·qy(β)·qz(γ):
    //   w = cos(β/2)cos((α+γ)/2)   z = cos(β/2)sin((α+γ)/2)
    //   y = sin(β/2)cos((α−γ)/2)   x = −sin(β/2)sin((α−γ)/2)
    let [w, x, y, z] = quaternion_from_dcm(m);
    let two = T::lit(2.0);
    let c = (w * w + z * z).sqrt();
    let s = (x * x + y * y).sqrt();
    let beta = two * s.atan2(c);
    let sum = two * z.atan2(w);
    let diff = two * (-x).atan2(y);
    let sin_beta = two * s * c;
    let (alpha, gamma) = if sin_beta.abs() < T::gimbal_tol() {
        if beta < T::FRAC_PI_2() {
            (sum, T::zero())
        } else {
            (diff, T::zero())
        }
    } else {
        ((sum + diff) / two, (sum - diff) / two)
    };
    [
        wrap_degrees(alpha.to_degrees()),
        beta.to_degrees(),
        wrap_degrees(gamma.to_degrees()),
    ]
}

/// Canonical angle-axis form: angle in `[0, 180]` degrees; identity maps to
/// axis `(0, 0, 1)`, and at 180° the first nonzero axis component is positive.
pub fn angle_axis_from_dcm<T: Real>(m: &Matrix3<T>) -> (T, Vector3<T>) {
    let [w, x, y, z] = quaternion_from_dcm(m);
    let v = Vector3::new(x, y, z);
    let n = v.norm();
    if n <= T::epsilon() {
        return (T::zero(), Vector3::new(T::zero(), T::zero(), T::one()));
    }
    let angle = (T::lit(2.0) * n.atan2(w)).to_degrees();
    (angle, v.scale(T::one() / n))
}

/// Expresses a proper rotation matrix in the requested convention.
pub fn from_dcm<T: Real>(d: &Matrix3<T>, target: Convention) -> Result<Rotation<T>, RotationError> {
    check_finite(&d.to_row_major())?;
    check_proper(d)?;
    Ok(match target {
        Convention::EulerAngles => {
            let [alpha, beta, gamma] = euler_from_dcm(d);
            Rotation::EulerAngles { alpha, beta, gamma }
        }
        Convention::AngleAxis => {
            let (angle, axis) = angle_axis_from_dcm(d);
            Rotation::AngleAxis { angle, axis }
        }
        Convention::Quaternion => {
            let [w, x, y, z] = quaternion_from_dcm(d);
            Rotation::Quaternion { w, x, y, z }
        }
        Convention::Dcm => Rotation::Dcm(*d),
    })
}

/// `to_dcm(r1) · to_dcm(r2)`
pub fn compose<T: Real>(r1: &Rotation<T>, r2: &Rotation<T>) -> Result<Matrix3<T>, RotationError> {
    Ok(to_dcm(r1)? * to_dcm(r2)?)
}

/// The inverse rotation, as a DCM.
pub fn inverse<T: Real>(r: &Rotation<T>) -> Result<Rotation<T>, RotationError> {
    Ok(Rotation::Dcm(to_dcm(r)?.transpose()))
}

/// Second-rank Wigner rotation matrix, rows `m'` and columns `m` running
/// from −2 to +2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerD2<T> {
    pub entries: [[Complex<T>; 5]; 5],
}

fn factorial<T: Real>(n: i32) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

/// Reduced rank-2 Wigner matrix `d²_{m'm}(beta)`, `beta` in radians.
pub fn reduced_wigner_d2<T: Real>(beta: T) -> [[T; 5]; 5] {
    let j = 2i32;
    let (sh, ch) = (beta / T::lit(2.0)).sin_cos();
    let mut out = [[T::zero(); 5]; 5];
    for mp in -j..=j {
        for m in -j..=j {
            let pref = (factorial::<T>(j + mp)
                * factorial::<T>(j - mp)
                * factorial::<T>(j + m)
                * factorial::<T>(j - m))
            .sqrt();
            let mut sum = T::zero();
            for s in 0..=2 * j {
                let (a, b, c) = (j + m - s, mp - m + s, j - mp - s);
                if a < 0 || b < 0 || c < 0 {
                    continue;
                }
                let sign = if (mp - m + s) % 2 == 0 { T::one() } else { -T::one() };
                let denom = factorial::<T>(a) * factorial::<T>(s) * factorial::<T>(b) * factorial::<T>(c);
                sum = sum
                    + sign / denom
                        * ch.powi(2 * j + m - mp - 2 * s)
                        * sh.powi(mp - m + 2 * s);
            }
            out[(mp + j) as usize][(m + j) as usize] = pref * sum;
        }
    }
    out
}

impl<T: Real> WignerD2<T> {
    pub fn identity() -> Self {
        let mut entries = [[Complex::new(T::zero(), T::zero()); 5]; 5];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = Complex::new(T::one(), T::zero());
        }
        Self { entries }
    }

    /// `D²_{m'm}(alpha, beta, gamma) = e^{-i m' alpha} d²_{m'm}(beta) e^{-i m gamma}`,
    /// angles in degrees.
    pub fn from_euler(alpha: T, beta: T, gamma: T) -> Self {
        let d = reduced_wigner_d2(beta.to_radians());
        let (a, g) = (alpha.to_radians(), gamma.to_radians());
        let mut entries = [[Complex::new(T::zero(), T::zero()); 5]; 5];
        for (i, row) in entries.iter_mut().enumerate() {
            let mp = T::lit(i as f64 - 2.0);
            for (k, v) in row.iter_mut().enumerate() {
                let m = T::lit(k as f64 - 2.0);
                let phase = -(mp * a + m * g);
                *v = Complex::from_polar(d[i][k], phase);
            }
        }
        Self { entries }
    }

    /// Entry `D_{m'm}` with `m', m ∈ {−2, …, 2}`.
    pub fn get(&self, m_prime: i32, m: i32) -> Complex<T> {
        self.entries[(m_prime + 2) as usize][(m + 2) as usize]
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut entries = [[Complex::new(T::zero(), T::zero()); 5]; 5];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..5).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                    acc + self.entries[i][k] * o.entries[k][j]
                });
            }
        }
        Self { entries }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = self.entries;
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entries[j][i].conj();
            }
        }
        Self { entries }
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        self.entries
            .iter()
            .flatten()
            .zip(o.entries.iter().flatten())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    pub fn unitarity_error(&self) -> T {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity())
    }

    /// Rank-2 spherical components of `R · A · Rᵀ` from those of `A`.
    ///
    /// With the component phases used in [`crate::amplitudes`] the components
    /// transform with the complex conjugate matrix:
    /// `T'_{m'} = Σ_m conj(D_{m'm}) T_m`.
    pub fn rotate_rank2(&self, t: &[Complex<T>; 5]) -> [Complex<T>; 5] {
        let mut out = [Complex::new(T::zero(), T::zero()); 5];
        for (i, v) in out.iter_mut().enumerate() {
            *v = (0..5).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + self.entries[i][k].conj() * t[k]
            });
        }
        out
    }
}

/// Second-rank Wigner matrix of a rotation, via its ZYZ Euler angles.
pub fn wigner_d2<T: Real>(r: &Rotation<T>) -> Result<WignerD2<T>, RotationError> {
    let [alpha, beta, gamma] = euler_from_dcm(&to_dcm(r)?);
    Ok(WignerD2::from_euler(alpha, beta, gamma))
}
