//! Spin system document model and semantic validation.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

use crate::amplitudes::{
    eigens_from_axrh, eigens_from_haeberlen, eigens_from_spanskew, AmplitudeError, SpanSkewKind,
};
use crate::isotopes;
use crate::linalg::{Matrix3, Vector3};
use crate::rotations::{to_dcm, Rotation, RotationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error("unknown interaction kind `{0}`")]
    UnknownKind(String),
    #[error("no interaction with id {0}")]
    NoSuchInteraction(i64),
    #[error("no spin with id {0}")]
    NoSuchSpin(i64),
    #[error("negative threshold {0}")]
    NegativeThreshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Shielding,
    Shift,
    Gtensor,
    Hfc,
    Quadrupolar,
    Exchange,
    Jcoupling,
    Dipolar,
    Spinrotation,
    Zfs,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 10] = [
        InteractionKind::Shielding,
        InteractionKind::Shift,
        InteractionKind::Gtensor,
        InteractionKind::Hfc,
        InteractionKind::Quadrupolar,
        InteractionKind::Exchange,
        InteractionKind::Jcoupling,
        InteractionKind::Dipolar,
        InteractionKind::Spinrotation,
        InteractionKind::Zfs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Shielding => "shielding",
            InteractionKind::Shift => "shift",
            InteractionKind::Gtensor => "gtensor",
            InteractionKind::Hfc => "hfc",
            InteractionKind::Quadrupolar => "quadrupolar",
            InteractionKind::Exchange => "exchange",
            InteractionKind::Jcoupling => "jcoupling",
            InteractionKind::Dipolar => "dipolar",
            InteractionKind::Spinrotation => "spinrotation",
            InteractionKind::Zfs => "zfs",
        }
    }

    /// Two-spin interaction (hfc included).
    pub fn is_binary(self) -> bool {
        matches!(
            self,
            InteractionKind::Jcoupling
                | InteractionKind::Dipolar
                | InteractionKind::Exchange
                | InteractionKind::Hfc
        )
    }

    pub fn default_units(self) -> &'static str {
        match self {
            InteractionKind::Shielding | InteractionKind::Shift => "ppm",
            InteractionKind::Hfc => "Gauss",
            InteractionKind::Quadrupolar | InteractionKind::Zfs | InteractionKind::Exchange => "MHz",
            InteractionKind::Jcoupling | InteractionKind::Dipolar => "Hz",
            InteractionKind::Gtensor => "dimensionless",
            InteractionKind::Spinrotation => "MHz",
        }
    }

    pub fn supported_units(self) -> &'static [&'static str] {
        match self {
            InteractionKind::Shielding | InteractionKind::Shift => &["ppm"],
            InteractionKind::Gtensor => &["dimensionless"],
            InteractionKind::Hfc => &["Gauss", "mT", "Hz", "kHz", "MHz"],
            InteractionKind::Jcoupling => &["Hz", "kHz"],
            InteractionKind::Quadrupolar
            | InteractionKind::Dipolar
            | InteractionKind::Spinrotation => &["Hz", "kHz", "MHz"],
            InteractionKind::Exchange | InteractionKind::Zfs => &["Hz", "kHz", "MHz", "GHz"],
        }
    }

    /// Span/skew definition used when resolving eigenvalues of this kind.
    pub fn spanskew_kind(self) -> SpanSkewKind {
        if self == InteractionKind::Shift {
            SpanSkewKind::Shift
        } else {
            SpanSkewKind::Shielding
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InteractionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_owned()))
    }
}

/// Multiplier taking a frequency unit to Hz.
pub fn hz_factor(units: &str) -> Option<f64> {
    match units {
        "Hz" => Some(1.0),
        "kHz" => Some(1e3),
        "MHz" => Some(1e6),
        "GHz" => Some(1e9),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spin {
    pub id: i64,
    pub isotope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vector3<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Spin {
    pub fn new(id: i64, isotope: impl Into<String>) -> Self {
        Spin {
            id,
            isotope: isotope.into(),
            coordinates: None,
            label: None,
        }
    }

    pub fn at(mut self, x: f64, y: f64, z: f64) -> Self {
        self.coordinates = Some(Vector3::new(x, y, z));
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn is_electron(&self) -> bool {
        isotopes::is_electron(&self.isotope)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenvalueSpec {
    #[serde(rename = "eigenvalues")]
    Explicit { xx: f64, yy: f64, zz: f64 },
    #[serde(rename = "aniso_asym")]
    IsoAnisoAsym { iso: f64, aniso: f64, asym: f64 },
    #[serde(rename = "ax_rh")]
    IsoAxRh { iso: f64, ax: f64, rh: f64 },
    #[serde(rename = "span_skew")]
    IsoSpanSkew { iso: f64, span: f64, skew: f64 },
}

impl EigenvalueSpec {
    /// Principal values in the principal axis frame, `(λxx, λyy, λzz)`.
    ///
    /// Span/skew values come back sorted per `kind`: ascending for shielding,
    /// descending for shift.
    pub fn resolve(&self, kind: SpanSkewKind) -> Result<[f64; 3], AmplitudeError> {
        match *self {
            EigenvalueSpec::Explicit { xx, yy, zz } => {
                if [xx, yy, zz].iter().all(|v| v.is_finite()) {
                    Ok([xx, yy, zz])
                } else {
                    Err(AmplitudeError::NonFinite("eigenvalues"))
                }
            }
            EigenvalueSpec::IsoAnisoAsym { iso, aniso, asym } => eigens_from_haeberlen(iso, aniso, asym),
            EigenvalueSpec::IsoAxRh { iso, ax, rh } => eigens_from_axrh(iso, ax, rh),
            EigenvalueSpec::IsoSpanSkew { iso, span, skew } => eigens_from_spanskew(iso, span, skew, kind),
        }
    }

    pub fn values(&self) -> [f64; 3] {
        match *self {
            EigenvalueSpec::Explicit { xx, yy, zz } => [xx, yy, zz],
            EigenvalueSpec::IsoAnisoAsym { iso, aniso, asym } => [iso, aniso, asym],
            EigenvalueSpec::IsoAxRh { iso, ax, rh } => [iso, ax, rh],
            EigenvalueSpec::IsoSpanSkew { iso, span, skew } => [iso, span, skew],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeSpec {
    Scalar(f64),
    #[serde(rename = "tensor")]
    Matrix(Matrix3<f64>),
    #[serde(rename = "eigen")]
    EigensPlusRotation {
        values: EigenvalueSpec,
        /// Absent means the principal axes coincide with the reference frame.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Rotation<f64>>,
    },
}

impl AmplitudeSpec {
    pub fn eigens(values: EigenvalueSpec, rotation: Rotation<f64>) -> Self {
        AmplitudeSpec::EigensPlusRotation {
            values,
            rotation: Some(rotation),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, AmplitudeSpec::Scalar(_))
    }

    /// Full 3×3 form; see [`promote_amplitude`].
    pub fn promote(&self, kind: InteractionKind) -> Result<Matrix3<f64>, ModelError> {
        match self {
            AmplitudeSpec::Scalar(s) => Ok(Matrix3::identity().scale(*s)),
            AmplitudeSpec::Matrix(m) => Ok(*m),
            AmplitudeSpec::EigensPlusRotation { values, rotation } => {
                let l = values.resolve(kind.spanskew_kind())?;
                let d = Matrix3::diag(l);
                match rotation {
                    Some(r) => Ok(d.similarity(&to_dcm(r)?)),
                    None => Ok(d),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub id: i64,
    pub kind: InteractionKind,
    pub units: String,
    pub spin_1: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_2: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub amplitude: AmplitudeSpec,
}

impl InteractionTerm {
    /// A term with the default units of its kind.
    pub fn new(id: i64, kind: InteractionKind, spin_1: i64, spin_2: Option<i64>, amplitude: AmplitudeSpec) -> Self {
        InteractionTerm {
            id,
            kind,
            units: kind.default_units().to_owned(),
            spin_1,
            spin_2,
            label: None,
            reference: None,
            amplitude,
        }
    }

    pub fn involves(&self, spin: i64) -> bool {
        self.spin_1 == spin || self.spin_2 == Some(spin)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub spins: Vec<Spin>,
    pub interactions: Vec<InteractionTerm>,
}

impl SpinSystem {
    pub fn spin(&self, id: i64) -> Option<&Spin> {
        self.spins.iter().find(|s| s.id == id)
    }

    pub fn interaction(&self, id: i64) -> Option<&InteractionTerm> {
        self.interactions.iter().find(|t| t.id == id)
    }

    pub fn interaction_mut(&mut self, id: i64) -> Option<&mut InteractionTerm> {
        self.interactions.iter_mut().find(|t| t.id == id)
    }

    /// Smallest id greater than every interaction id in use (1 for an empty list).
    pub fn next_interaction_id(&self) -> i64 {
        self.interactions.iter().map(|t| t.id).max().map_or(1, |m| m + 1)
    }

    pub fn next_spin_id(&self) -> i64 {
        self.spins.iter().map(|s| s.id).max().map_or(1, |m| m + 1)
    }

    pub fn has_electrons(&self) -> bool {
        self.spins.iter().any(Spin::is_electron)
    }
}

/// Element of the term a validation message refers to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Document,
    Spin(i64),
    Interaction(i64),
    /// Source position, 1-based.
    Line(u32),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Document => f.write_str("document"),
            Location::Spin(id) => write!(f, "spin {id}"),
            Location::Interaction(id) => write!(f, "interaction {id}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub location: Location,
    pub message: String,
}

impl Issue {
    pub fn new(location: Location, message: impl Into<String>) -> Self {
        Issue {
            location,
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, location: Location, message: impl Into<String>) {
        self.errors.push(Issue::new(location, message));
    }

    fn warn(&mut self, location: Location, message: impl Into<String>) {
        self.warnings.push(Issue::new(location, message));
    }
}

fn isotope_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new("^[0-9]*[A-Za-z]+$").expect("static regex"))
}

fn check_amplitude(report: &mut ValidationReport, term: &InteractionTerm) {
    let at = Location::Interaction(term.id);
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    match &term.amplitude {
        AmplitudeSpec::Scalar(s) => {
            if !s.is_finite() {
                report.error(at, "scalar amplitude is not finite");
            }
        }
        AmplitudeSpec::Matrix(m) => {
            if !m.is_finite() {
                report.error(at, "tensor has non-finite entries");
            }
        }
        AmplitudeSpec::EigensPlusRotation { values, rotation } => {
            if !finite(&values.values()) {
                report.error(at.clone(), "eigenvalue data is not finite");
            } else if let Err(e) = values.resolve(term.kind.spanskew_kind()) {
                report.error(at.clone(), e.to_string());
            }
            if let Some(r) = rotation {
                if let Err(e) = r.validate() {
                    report.error(at, e.to_string());
                }
            }
        }
    }
}

/// Checks every document invariant. Never fails; problems go in the report.
pub fn validate_system(sys: &SpinSystem) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut spin_ids = HashSet::new();
    for spin in &sys.spins {
        let at = Location::Spin(spin.id);
        if !spin_ids.insert(spin.id) {
            report.error(at.clone(), "duplicate spin id");
        }
        if !isotope_pattern().is_match(&spin.isotope) {
            report.error(at.clone(), format!("malformed isotope string `{}`", spin.isotope));
        } else if isotopes::lookup(&spin.isotope).is_none() {
            report.warn(at.clone(), format!("isotope `{}` not in the isotope table", spin.isotope));
        }
        if let Some(c) = spin.coordinates {
            if !c.is_finite() {
                report.error(at, "coordinates are not finite");
            }
        }
    }

    let mut term_ids = HashSet::new();
    for term in &sys.interactions {
        let at = Location::Interaction(term.id);
        if !term_ids.insert(term.id) {
            report.error(at.clone(), "duplicate interaction id");
        }
        if !sys.spins.iter().any(|s| s.id == term.spin_1) {
            report.error(at.clone(), format!("spin_1 references missing spin {}", term.spin_1));
        }
        if let Some(s2) = term.spin_2 {
            if !sys.spins.iter().any(|s| s.id == s2) {
                report.error(at.clone(), format!("spin_2 references missing spin {s2}"));
            }
        }
        match (term.kind.is_binary(), term.spin_2) {
            (true, None) => report.error(at.clone(), "binary kind requires spin_2"),
            (false, Some(_)) => report.error(at.clone(), "unary kind forbids spin_2"),
            (true, Some(s2)) if s2 == term.spin_1 => {
                report.error(at.clone(), "spin_1 and spin_2 must differ")
            }
            _ => {}
        }
        if term.kind == InteractionKind::Hfc {
            if let Some(s1) = sys.spin(term.spin_1) {
                if !s1.is_electron() {
                    report.error(at.clone(), "hfc spin_1 must be an electron");
                }
            }
            if let Some(s2) = term.spin_2.and_then(|id| sys.spin(id)) {
                if s2.is_electron() {
                    report.error(at.clone(), "hfc spin_2 must be a nucleus");
                }
            }
        }
        if !term.kind.supported_units().contains(&term.units.as_str()) {
            report.warn(
                at.clone(),
                format!("units `{}` are not a supported token for {}", term.units, term.kind),
            );
        }
        check_amplitude(&mut report, term);
    }
    report
}

/// Full 3×3 interaction matrix of a term.
///
/// Scalars become `s·I`, matrices pass through and eigenvalue data becomes
/// `R · diag(λ) · Rᵀ`.
pub fn promote_amplitude(term: &InteractionTerm) -> Result<Matrix3<f64>, ModelError> {
    term.amplitude.promote(term.kind)
}
