//! Interaction amplitude conventions.
//!
//! Conventions implemented, with `iso = (λ₁ + λ₂ + λ₃)/3`:
//!
//! * Haeberlen: principal values labelled so that
//!   `|λzz − iso| ≥ |λxx − iso| ≥ |λyy − iso|`, `ζ = λzz − iso`,
//!   anisotropy `Δ = 3ζ/2 = λzz − (λxx + λyy)/2`, asymmetry `η = (λyy − λxx)/ζ`.
//! * Axiality/rhombicity, on the same labelling: `D = 3(λzz − iso)/2`,
//!   `E = (λxx − λyy)/2`.
//! * Span/skew (Maryland). Shielding: `σ11 ≤ σ22 ≤ σ33`, `Ω = σ33 − σ11`,
//!   `κ = 3(iso − σ22)/Ω`. Shift: `δ11 ≥ δ22 ≥ δ33`, `Ω = δ11 − δ33`,
//!   `κ = 3(δ22 − iso)/Ω`. The same principal values therefore give opposite
//!   skews for the two kinds.
//! * Irreducible spherical components:
//!   `T00 = Tr(m)/√3`,
//!   `T1,0 = (mxy − myx)/√2`, `T1,±1 = ∓((myz − mzy) ± i(mzx − mxz))/2`,
//!   `T2,0 = (2mzz − mxx − myy)/√6`, `T2,±1 = ∓((mxz + mzx) ± i(myz + mzy))/2`,
//!   `T2,±2 = ((mxx − myy) ± i(mxy + myx))/2`.
//!   With this scaling `Σ|T_lm|² = ‖m‖²_F`.

use num_complex::Complex;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{symmetric_eigen, Matrix3, Vector3};
use crate::rotations::{
    angle_axis_from_dcm, euler_from_dcm, quaternion_from_dcm, to_dcm, Rotation, RotationError,
    WignerD2,
};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplitudeError {
    #[error("{convention} is undefined for this tensor ({reason})")]
    Degenerate {
        convention: &'static str,
        reason: &'static str,
    },
    #[error("{parameter} = {value} is out of range {range}")]
    OutOfRange {
        parameter: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid spherical components: {0}")]
    InvalidComponents(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("field `{0}` is read-only")]
    ReadOnlyField(String),
    #[error("bad edit value for `{field}`: {message}")]
    BadEditValue { field: String, message: String },
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

/// How principal values are ordered by [`eigens_from_matrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenOrdering {
    /// `(λxx, λyy, λzz)` in Haeberlen labelling.
    Haeberlen,
    Ascending,
    Descending,
}

/// Which span/skew definition applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpanSkewKind {
    #[default]
    Shielding,
    Shift,
}

/// Principal values together with the principal axis frame.
///
/// `frame` is a proper rotation whose columns are the eigenvectors; it takes
/// the principal axis frame into the reference frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem<T> {
    pub eigenvalues: [T; 3],
    pub frame: Matrix3<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn rotation(&self) -> Rotation<T> {
        Rotation::Dcm(self.frame)
    }

    /// `R · diag(λ) · Rᵀ`
    pub fn to_matrix(&self) -> Matrix3<T> {
        Matrix3::diag(self.eigenvalues).similarity(&self.frame)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Haeberlen<T> {
    pub iso: T,
    pub aniso: T,
    pub asym: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxialityRhombicity<T> {
    pub iso: T,
    pub ax: T,
    pub rh: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanSkew<T> {
    pub iso: T,
    pub span: T,
    pub skew: T,
}

fn mean3<T: Real>(l: &[T; 3]) -> T {
    (l[0] + l[1] + l[2]) / T::lit(3.0)
}

fn max_abs3<T: Real>(l: &[T; 3]) -> T {
    l.iter().fold(T::zero(), |a, v| a.max(v.abs()))
}

fn check_finite<T: Real>(vals: &[T], what: &'static str) -> Result<(), AmplitudeError> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(AmplitudeError::NonFinite(what))
    }
}

/// Indices of `λ` in Haeberlen labelling `(xx, yy, zz)`. Stable on ties.
fn haeberlen_indices<T: Real>(l: &[T; 3]) -> [usize; 3] {
    let iso = mean3(l);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| {
        (l[b] - iso)
            .abs()
            .partial_cmp(&(l[a] - iso).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // idx = [zz, xx, yy]
    [idx[1], idx[2], idx[0]]
}

/// Reorders principal values into Haeberlen labelling `(λxx, λyy, λzz)`.
pub fn haeberlen_order<T: Real>(l: [T; 3]) -> [T; 3] {
    haeberlen_indices(&l).map(|i| l[i])
}

fn canonical_sign<T: Real>(v: Vector3<T>) -> Vector3<T> {
    let a = v.to_array();
    let mut best = 0;
    for i in 1..3 {
        if a[i].abs() > a[best].abs() {
            best = i;
        }
    }
    if a[best] < T::zero() {
        -v
    } else {
        v
    }
}

/// Eigendecomposition of the symmetric part of `m`.
///
/// Eigenvector signs are fixed so the largest component of the first two
/// columns is positive; the third column completes a right-handed frame.
/// Isotropic tensors always return the identity frame.
pub fn eigens_from_matrix<T: Real>(m: &Matrix3<T>, ordering: EigenOrdering) -> EigenSystem<T> {
    let (vals, vecs) = symmetric_eigen(m);
    let scale = max_abs3(&vals);
    let lo = vals.iter().copied().fold(T::infinity(), T::min);
    let hi = vals.iter().copied().fold(T::neg_infinity(), T::max);
    if hi - lo <= T::degeneracy_tol() * scale {
        let iso = mean3(&vals);
        return EigenSystem {
            eigenvalues: [iso; 3],
            frame: Matrix3::identity(),
        };
    }

    let idx = match ordering {
        EigenOrdering::Haeberlen => haeberlen_indices(&vals),
        EigenOrdering::Ascending | EigenOrdering::Descending => {
            let mut idx = [0usize, 1, 2];
            idx.sort_by(|&a, &b| {
                let o = vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal);
                if ordering == EigenOrdering::Descending {
                    o.reverse()
                } else {
                    o
                }
            });
            idx
        }
    };
    let c0 = canonical_sign(vecs.column(idx[0]));
    let c1 = canonical_sign(vecs.column(idx[1]));
    let c2 = c0.cross(c1);
    EigenSystem {
        eigenvalues: idx.map(|i| vals[i]),
        frame: Matrix3::from_columns([c0, c1, c2]),
    }
}

/// Isotropic part, anisotropy and asymmetry.
pub fn haeberlen_from_eigens<T: Real>(l: [T; 3]) -> Result<Haeberlen<T>, AmplitudeError> {
    check_finite(&l, "eigenvalues")?;
    let iso = mean3(&l);
    let [xx, yy, zz] = haeberlen_order(l);
    let zeta = zz - iso;
    if zeta.abs() <= T::degeneracy_tol() * max_abs3(&l) {
        return Err(AmplitudeError::Degenerate {
            convention: "anisotropy/asymmetry",
            reason: "isotropic tensor, asymmetry undefined",
        });
    }
    let asym = ((yy - xx) / zeta).max(T::zero()).min(T::one());
    Ok(Haeberlen {
        iso,
        aniso: T::lit(1.5) * zeta,
        asym,
    })
}

/// Principal values `(λxx, λyy, λzz)` from isotropic part, anisotropy and asymmetry.
pub fn eigens_from_haeberlen<T: Real>(iso: T, aniso: T, asym: T) -> Result<[T; 3], AmplitudeError> {
    check_finite(&[iso, aniso, asym], "anisotropy/asymmetry")?;
    if asym < T::zero() || asym > T::one() {
        return Err(AmplitudeError::OutOfRange {
            parameter: "asym",
            value: asym.to_f64_lossy(),
            range: "[0, 1]",
        });
    }
    let zeta = aniso * T::lit(2.0) / T::lit(3.0);
    let half = T::lit(0.5);
    Ok([
        iso - zeta * (T::one() + asym) * half,
        iso - zeta * (T::one() - asym) * half,
        iso + zeta,
    ])
}

/// Isotropic part, axiality and rhombicity. Defined for every input.
pub fn axrh_from_eigens<T: Real>(l: [T; 3]) -> AxialityRhombicity<T> {
    let iso = mean3(&l);
    let [xx, yy, zz] = haeberlen_order(l);
    AxialityRhombicity {
        iso,
        ax: T::lit(1.5) * (zz - iso),
        rh: (xx - yy) * T::lit(0.5),
    }
}

/// Principal values `(λxx, λyy, λzz)` from isotropic part, axiality and rhombicity.
pub fn eigens_from_axrh<T: Real>(iso: T, ax: T, rh: T) -> Result<[T; 3], AmplitudeError> {
    check_finite(&[iso, ax, rh], "axiality/rhombicity")?;
    let third = ax / T::lit(3.0);
    Ok([iso - third + rh, iso - third - rh, iso + T::lit(2.0) * third])
}

/// Isotropic part, span and skew in the convention of `kind`.
pub fn spanskew_from_eigens<T: Real>(
    l: [T; 3],
    kind: SpanSkewKind,
) -> Result<SpanSkew<T>, AmplitudeError> {
    check_finite(&l, "eigenvalues")?;
    let iso = mean3(&l);
    let mut s = l;
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let span = s[2] - s[0];
    if span <= T::degeneracy_tol() * max_abs3(&l) {
        return Err(AmplitudeError::Degenerate {
            convention: "span/skew",
            reason: "zero span, skew undefined",
        });
    }
    let three = T::lit(3.0);
    let skew = match kind {
        SpanSkewKind::Shielding => three * (iso - s[1]) / span,
        SpanSkewKind::Shift => three * (s[1] - iso) / span,
    };
    Ok(SpanSkew {
        iso,
        span,
        skew: skew.max(-T::one()).min(T::one()),
    })
}

/// Principal values from span and skew: `(σ11, σ22, σ33)` ascending for
/// shielding, `(δ11, δ22, δ33)` descending for shift.
pub fn eigens_from_spanskew<T: Real>(
    iso: T,
    span: T,
    skew: T,
    kind: SpanSkewKind,
) -> Result<[T; 3], AmplitudeError> {
    check_finite(&[iso, span, skew], "span/skew")?;
    if span < T::zero() {
        return Err(AmplitudeError::OutOfRange {
            parameter: "span",
            value: span.to_f64_lossy(),
            range: "[0, inf)",
        });
    }
    if skew < -T::one() || skew > T::one() {
        return Err(AmplitudeError::OutOfRange {
            parameter: "skew",
            value: skew.to_f64_lossy(),
            range: "[-1, 1]",
        });
    }
    let three = T::lit(3.0);
    let middle = match kind {
        SpanSkewKind::Shielding => iso - skew * span / three,
        SpanSkewKind::Shift => iso + skew * span / three,
    };
    let base = three * iso - middle;
    let lo = (base - span) * T::lit(0.5);
    let hi = (base + span) * T::lit(0.5);
    Ok(match kind {
        SpanSkewKind::Shielding => [lo, middle, hi],
        SpanSkewKind::Shift => [hi, middle, lo],
    })
}

/// Irreducible spherical components of a 3×3 tensor. Arrays are indexed by
/// `m + l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalComponents<T> {
    pub rank0: Complex<T>,
    pub rank1: [Complex<T>; 3],
    pub rank2: [Complex<T>; 5],
}

impl<T: Real> SphericalComponents<T> {
    /// `Σ |T_lm|²`
    pub fn norm_sqr(&self) -> T {
        std::iter::once(&self.rank0)
            .chain(self.rank1.iter())
            .chain(self.rank2.iter())
            .fold(T::zero(), |a, c| a + c.norm_sqr())
    }

    /// Largest deviation from `T_{l,−m} = (−1)^m conj(T_{l,m})`.
    pub fn conjugation_error(&self) -> T {
        let mut err = self.rank0.im.abs();
        err = err.max(self.rank1[1].im.abs());
        err = err.max((self.rank1[0] + self.rank1[2].conj()).norm());
        err = err.max(self.rank2[2].im.abs());
        err = err.max((self.rank2[1] + self.rank2[3].conj()).norm());
        err = err.max((self.rank2[0] - self.rank2[4].conj()).norm());
        err
    }

    fn max_abs(&self) -> T {
        std::iter::once(&self.rank0)
            .chain(self.rank1.iter())
            .chain(self.rank2.iter())
            .fold(T::zero(), |a, c| a.max(c.norm()))
    }
}

pub fn spherical_from_matrix<T: Real>(m: &Matrix3<T>) -> SphericalComponents<T> {
    let c = |re: T, im: T| Complex::new(re, im);
    let half = T::lit(0.5);
    let s2 = T::lit(2.0).sqrt();
    let s3 = T::lit(3.0).sqrt();
    let s6 = T::lit(6.0).sqrt();
    let (xx, xy, xz) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (yx, yy, yz) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let (zx, zy, zz) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);

    let (p, q) = (yz - zy, zx - xz);
    let rank1 = [c(p * half, -q * half), c((xy - yx) / s2, T::zero()), c(-p * half, -q * half)];

    let (a, b) = (xz + zx, yz + zy);
    let (d, e) = (xx - yy, xy + yx);
    let rank2 = [
        c(d * half, -e * half),
        c(a * half, -b * half),
        c((T::lit(2.0) * zz - xx - yy) / s6, T::zero()),
        c(-a * half, -b * half),
        c(d * half, e * half),
    ];
    SphericalComponents {
        rank0: c(m.trace() / s3, T::zero()),
        rank1,
        rank2,
    }
}

/// Inverse of [`spherical_from_matrix`]. Components must come from a real
/// tensor (conjugation symmetry within 1e-9 relative).
pub fn matrix_from_spherical<T: Real>(s: &SphericalComponents<T>) -> Result<Matrix3<T>, AmplitudeError> {
    let all = std::iter::once(&s.rank0)
        .chain(s.rank1.iter())
        .chain(s.rank2.iter());
    if !all.clone().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(AmplitudeError::NonFinite("spherical components"));
    }
    let err = s.conjugation_error();
    if err > T::validation_tol() * s.max_abs().max(T::one()) {
        return Err(AmplitudeError::InvalidComponents(format!(
            "conjugation symmetry violated by {err}"
        )));
    }
    let s2 = T::lit(2.0).sqrt();
    let s3 = T::lit(3.0).sqrt();
    let s6 = T::lit(6.0).sqrt();
    let iso = s.rank0.re / s3;

    let szz = s6 * s.rank2[2].re / T::lit(3.0);
    let d = T::lit(2.0) * s.rank2[4].re;
    let sxx = (d - szz) * T::lit(0.5);
    let syy = (-d - szz) * T::lit(0.5);
    let sxy = s.rank2[4].im;
    let sxz = -s.rank2[3].re;
    let syz = -s.rank2[3].im;

    let axy = s.rank1[1].re / s2;
    let ayz = -s.rank1[2].re;
    let azx = -s.rank1[2].im;

    Ok(Matrix3::new([
        [iso + sxx, sxy + axy, sxz - azx],
        [sxy - axy, iso + syy, syz + ayz],
        [sxz + azx, syz - ayz, iso + szz],
    ]))
}

/// `√(Σ m_ij²)`, the total interaction magnitude.
pub fn frobenius_norm<T: Real>(m: &Matrix3<T>) -> T {
    m.frobenius_norm()
}

/// A convention parameter that may be undefined for degenerate tensors.
/// Serialized as the value itself or the string `"undefined"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Derived<V> {
    Defined(V),
    Undefined,
}

impl<V> Derived<V> {
    pub fn as_option(&self) -> Option<&V> {
        match self {
            Derived::Defined(v) => Some(v),
            Derived::Undefined => None,
        }
    }
}

impl<V, E> From<Result<V, E>> for Derived<V> {
    fn from(r: Result<V, E>) -> Self {
        r.map_or(Derived::Undefined, Derived::Defined)
    }
}

impl<V: Serialize> Serialize for Derived<V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Derived::Defined(v) => v.serialize(serializer),
            Derived::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Derived<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<V> {
            Value(V),
            Marker(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Value(v) => Ok(Derived::Defined(v)),
            Repr::Marker(s) if s == "undefined" => Ok(Derived::Undefined),
            Repr::Marker(s) => Err(serde::de::Error::custom(format!("unexpected marker {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerView<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct AngleAxisView<T> {
    pub angle: T,
    pub axis: Vector3<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuaternionView<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Every view of one interaction tensor shown by the edit dialog.
///
/// `eigenvalues[i]` belongs to `eigenvectors[i]`, which is column `i` of `dcm`;
/// `matrix = dcm · diag(eigenvalues) · dcmᵀ` plus the antisymmetric part of
/// the tensor, if any.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RepresentationBundle<T> {
    pub matrix: Matrix3<T>,
    pub eigenvalues: [T; 3],
    pub eigenvectors: [Vector3<T>; 3],
    pub euler: EulerView<T>,
    pub angle_axis: AngleAxisView<T>,
    pub quaternion: QuaternionView<T>,
    pub dcm: Matrix3<T>,
    pub spherical: SphericalComponents<T>,
    pub haeberlen: Derived<Haeberlen<T>>,
    pub axrh: AxialityRhombicity<T>,
    pub spanskew: Derived<SpanSkew<T>>,
    pub wigner: WignerD2<T>,
    pub spanskew_kind: SpanSkewKind,
}

/// Names of all bundle fields, as used by the edit protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleField {
    Matrix,
    Eigenvalues,
    Eigenvectors,
    Euler,
    AngleAxis,
    AngleAxisAngle,
    Quaternion,
    Dcm,
    Spherical,
    Haeberlen,
    Axrh,
    Spanskew,
    Wigner,
}

impl BundleField {
    /// The five representations the dialog lets the user change directly.
    pub fn is_editable(self) -> bool {
        matches!(
            self,
            BundleField::Matrix
                | BundleField::Eigenvalues
                | BundleField::Spherical
                | BundleField::Euler
                | BundleField::AngleAxisAngle
        )
    }
}

/// A user edit of one editable representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Edit<T> {
    Matrix(Matrix3<T>),
    Eigenvalues([T; 3]),
    Spherical(SphericalComponents<T>),
    Euler { alpha: T, beta: T, gamma: T },
    AngleAxisAngle(T),
}

impl<T: Real> Edit<T> {
    pub fn field(&self) -> BundleField {
        match self {
            Edit::Matrix(_) => BundleField::Matrix,
            Edit::Eigenvalues(_) => BundleField::Eigenvalues,
            Edit::Spherical(_) => BundleField::Spherical,
            Edit::Euler { .. } => BundleField::Euler,
            Edit::AngleAxisAngle(_) => BundleField::AngleAxisAngle,
        }
    }
}

impl<T: Real + for<'de> Deserialize<'de>> Edit<T> {
    /// Builds an edit from a field name and its JSON value. Values use the same
    /// shapes as the bundle's JSON projection; `angle_axis_angle` is a number.
    pub fn from_json(field: &str, value: serde_json::Value) -> Result<Self, AmplitudeError> {
        let tag: BundleField = serde_json::from_value(serde_json::Value::String(field.to_owned()))
            .map_err(|_| AmplitudeError::BadEditValue {
                field: field.to_owned(),
                message: "unknown field".into(),
            })?;
        if !tag.is_editable() {
            return Err(AmplitudeError::ReadOnlyField(field.to_owned()));
        }
        let bad = |e: serde_json::Error| AmplitudeError::BadEditValue {
            field: field.to_owned(),
            message: e.to_string(),
        };
        Ok(match tag {
            BundleField::Matrix => Edit::Matrix(serde_json::from_value(value).map_err(bad)?),
            BundleField::Eigenvalues => Edit::Eigenvalues(serde_json::from_value(value).map_err(bad)?),
            BundleField::Spherical => Edit::Spherical(serde_json::from_value(value).map_err(bad)?),
            BundleField::Euler => {
                let e: EulerView<T> = serde_json::from_value(value).map_err(bad)?;
                Edit::Euler {
                    alpha: e.alpha,
                    beta: e.beta,
                    gamma: e.gamma,
                }
            }
            BundleField::AngleAxisAngle => {
                Edit::AngleAxisAngle(serde_json::from_value(value).map_err(bad)?)
            }
            _ => unreachable!("read-only fields rejected above"),
        })
    }
}

impl<T: Real> RepresentationBundle<T> {
    /// All views of a full interaction matrix. Principal values are ascending.
    pub fn from_matrix(m: &Matrix3<T>, kind: SpanSkewKind) -> Result<Self, AmplitudeError> {
        if !m.is_finite() {
            return Err(AmplitudeError::NonFinite("matrix"));
        }
        let eig = eigens_from_matrix(m, EigenOrdering::Ascending);
        Ok(Self::assemble(*m, eig.eigenvalues, eig.frame, kind, None))
    }

    /// All views of a tensor given as principal values plus orientation.
    pub fn from_eigens(
        eigenvalues: [T; 3],
        rotation: &Rotation<T>,
        kind: SpanSkewKind,
    ) -> Result<Self, AmplitudeError> {
        check_finite(&eigenvalues, "eigenvalues")?;
        let dcm = to_dcm(rotation)?;
        let matrix = Matrix3::diag(eigenvalues).similarity(&dcm);
        Ok(Self::assemble(matrix, eigenvalues, dcm, kind, None))
    }

    fn assemble(
        matrix: Matrix3<T>,
        eigenvalues: [T; 3],
        dcm: Matrix3<T>,
        kind: SpanSkewKind,
        keep_axis: Option<Vector3<T>>,
    ) -> Self {
        let [alpha, beta, gamma] = euler_from_dcm(&dcm);
        let (angle, mut axis) = angle_axis_from_dcm(&dcm);
        if angle == T::zero() {
            if let Some(a) = keep_axis {
                axis = a;
            }
        }
        let [w, x, y, z] = quaternion_from_dcm(&dcm);
        Self {
            matrix,
            eigenvalues,
            eigenvectors: [dcm.column(0), dcm.column(1), dcm.column(2)],
            euler: EulerView { alpha, beta, gamma },
            angle_axis: AngleAxisView { angle, axis },
            quaternion: QuaternionView { w, x, y, z },
            dcm,
            spherical: spherical_from_matrix(&matrix),
            haeberlen: haeberlen_from_eigens(eigenvalues).into(),
            axrh: axrh_from_eigens(eigenvalues),
            spanskew: spanskew_from_eigens(eigenvalues, kind).into(),
            wigner: WignerD2::from_euler(alpha, beta, gamma),
            spanskew_kind: kind,
        }
    }

    pub fn rotation(&self) -> Rotation<T> {
        Rotation::Dcm(self.dcm)
    }

    /// Antisymmetric part of the stored matrix.
    pub fn antisymmetric(&self) -> Matrix3<T> {
        self.matrix.antisymmetric_part()
    }
}

/// Applies one edit and recomputes every other view.
///
/// Editing principal values keeps the orientation, editing the orientation
/// keeps the principal values, and editing the matrix or the spherical
/// components re-derives both. Degenerate convention parameters come back as
/// [`Derived::Undefined`] instead of failing the whole bundle.
pub fn recompute_views<T: Real>(
    current: &RepresentationBundle<T>,
    edit: &Edit<T>,
) -> Result<RepresentationBundle<T>, AmplitudeError> {
    let kind = current.spanskew_kind;
    let antisym = current.antisymmetric();
    let rebuild = |values: [T; 3], dcm: Matrix3<T>, keep_axis: Option<Vector3<T>>| {
        let matrix = Matrix3::diag(values).similarity(&dcm) + antisym;
        RepresentationBundle::assemble(matrix, values, dcm, kind, keep_axis)
    };
    match *edit {
        Edit::Matrix(m) => RepresentationBundle::from_matrix(&m, kind),
        Edit::Spherical(s) => RepresentationBundle::from_matrix(&matrix_from_spherical(&s)?, kind),
        Edit::Eigenvalues(values) => {
            check_finite(&values, "eigenvalues")?;
            Ok(rebuild(values, current.dcm, None))
        }
        Edit::Euler { alpha, beta, gamma } => {
            let dcm = to_dcm(&Rotation::EulerAngles { alpha, beta, gamma })?;
            Ok(rebuild(current.eigenvalues, dcm, None))
        }
        Edit::AngleAxisAngle(angle) => {
            let axis = current.angle_axis.axis;
            let dcm = to_dcm(&Rotation::AngleAxis { angle, axis })?;
            Ok(rebuild(current.eigenvalues, dcm, Some(axis)))
        }
    }
}
