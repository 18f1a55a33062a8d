//! Physics and render geometry derived from a spin system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitudes::{eigens_from_matrix, EigenOrdering};
use crate::isotopes::{self, constants};
use crate::linalg::{Matrix3, Vector3};
use crate::model::{promote_amplitude, InteractionKind, InteractionTerm, ModelError, Spin, SpinSystem};
use crate::rotations::quaternion_from_dcm;

pub const DEFAULT_BOND_THRESHOLD: f64 = 1.8;

/// Electrons are drawn this many bounding-box heights below the molecule.
const ELECTRON_STRIP_OFFSET: f64 = 1.5;
const ELECTRON_SPACING: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("spin {0} has no coordinates")]
    NoCoordinates(i64),
    #[error("spins {0} and {1} are at the same position")]
    Coincident(i64, i64),
    #[error("isotope `{0}` is not magnetic")]
    NonMagnetic(String),
    #[error("isotope `{0}` is not in the isotope table")]
    UnknownIsotope(String),
    #[error("no spin with id {0}")]
    NoSuchSpin(i64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn gamma_of(spin: &Spin) -> Result<f64, GeometryError> {
    let rec = isotopes::lookup(&spin.isotope).ok_or_else(|| GeometryError::UnknownIsotope(spin.isotope.clone()))?;
    if !rec.is_magnetic() {
        return Err(GeometryError::NonMagnetic(spin.isotope.clone()));
    }
    Ok(rec.gamma)
}

/// Dipolar coupling constant in Hz for a distance in Ångström:
/// `b = −(μ₀/4π) γa γb ħ / (2π r³)`.
pub fn dipolar_coupling_constant(gamma_a: f64, gamma_b: f64, r_angstrom: f64) -> f64 {
    let r = r_angstrom * 1e-10;
    -(constants::MU0 / (4.0 * PI)) * gamma_a * gamma_b * constants::HBAR / (2.0 * PI * r * r * r)
}

/// Dipolar interaction tensor in Hz, `b (3nnᵀ − I)` with `n` the unit
/// inter-spin vector.
pub fn dipolar_tensor(a: &Spin, b: &Spin) -> Result<Matrix3<f64>, GeometryError> {
    let pa = a.coordinates.ok_or(GeometryError::NoCoordinates(a.id))?;
    let pb = b.coordinates.ok_or(GeometryError::NoCoordinates(b.id))?;
    let (ga, gb) = (gamma_of(a)?, gamma_of(b)?);
    let d = pb - pa;
    let r = d.norm();
    if r.is_nan() || r <= 0.0 {
        return Err(GeometryError::Coincident(a.id, b.id));
    }
    let n = d.scale(1.0 / r);
    let coupling = dipolar_coupling_constant(ga, gb, r);
    Ok((n.outer(n).scale(3.0) - Matrix3::identity()).scale(coupling))
}

/// Dipolar tensor between two spins of a system, looked up by id.
pub fn dipolar_between(sys: &SpinSystem, a: i64, b: i64) -> Result<Matrix3<f64>, GeometryError> {
    let sa = sys.spin(a).ok_or(GeometryError::NoSuchSpin(a))?;
    let sb = sys.spin(b).ok_or(GeometryError::NoSuchSpin(b))?;
    dipolar_tensor(sa, sb)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub a: i64,
    pub b: i64,
    pub length: f64,
}

/// Pairs of atoms with coordinates no further apart than `threshold` Å.
/// Electrons never bond.
pub fn detect_bonds(atoms: &[Spin], threshold: f64) -> Vec<Bond> {
    let placed: Vec<(i64, Vector3<f64>)> = atoms
        .iter()
        .filter(|s| !s.is_electron())
        .filter_map(|s| s.coordinates.map(|c| (s.id, c)))
        .collect();
    let mut out = Vec::new();
    for (i, (ia, pa)) in placed.iter().enumerate() {
        for (ib, pb) in &placed[i + 1..] {
            let length = (*pb - *pa).norm();
            if length <= threshold {
                out.push(Bond { a: *ia, b: *ib, length });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlyphRole {
    Shielding,
    Hfc,
    Quadrupolar,
    Gtensor,
    Zfs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub interaction: i64,
    pub role: GlyphRole,
    pub center: Vector3<f64>,
    /// `scale · |λᵢ|`, ascending eigenvalue order.
    pub semi_axes: [f64; 3],
    /// Principal axes in the reference frame, matching `semi_axes`.
    pub axes: [Vector3<f64>; 3],
    /// Unit quaternion `(w, x, y, z)` taking the unit sphere axes to `axes`.
    pub orientation: [f64; 4],
    /// `true` where the eigenvalue is positive (drawn blue), `false` for negative (red).
    pub positive: [bool; 3],
    /// All eigenvalues zero: drawn as a point.
    pub degenerate: bool,
}

fn role_of(kind: InteractionKind) -> Option<GlyphRole> {
    match kind {
        InteractionKind::Shielding | InteractionKind::Shift => Some(GlyphRole::Shielding),
        InteractionKind::Hfc => Some(GlyphRole::Hfc),
        InteractionKind::Quadrupolar => Some(GlyphRole::Quadrupolar),
        InteractionKind::Gtensor => Some(GlyphRole::Gtensor),
        InteractionKind::Zfs => Some(GlyphRole::Zfs),
        _ => None,
    }
}

/// Ellipsoid glyph for a tensor interaction: semi-axes are the scaled moduli
/// of the eigenvalues of the symmetric part, oriented along its eigenvectors.
pub fn make_ellipsoid(term: &InteractionTerm, center: Vector3<f64>, scale: f64) -> Result<Ellipsoid, ModelError> {
    let m = promote_amplitude(term)?;
    let eig = eigens_from_matrix(&m, EigenOrdering::Ascending);
    let l = eig.eigenvalues;
    Ok(Ellipsoid {
        interaction: term.id,
        role: role_of(term.kind).unwrap_or(GlyphRole::Shielding),
        center,
        semi_axes: l.map(|v| scale * v.abs()),
        axes: [eig.frame.column(0), eig.frame.column(1), eig.frame.column(2)],
        orientation: quaternion_from_dcm(&eig.frame),
        positive: l.map(|v| v > 0.0),
        degenerate: l.iter().all(|v| *v == 0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SceneMode {
    #[default]
    Nmr,
    Epr,
}

impl SceneMode {
    /// Kinds drawn in this mode.
    pub fn kinds(self) -> &'static [InteractionKind] {
        use InteractionKind::*;
        match self {
            SceneMode::Nmr => &[Shielding, Shift, Jcoupling, Quadrupolar],
            SceneMode::Epr => &[Gtensor, Hfc, Exchange, Zfs],
        }
    }
}

impl std::str::FromStr for SceneMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nmr" => Ok(SceneMode::Nmr),
            "epr" => Ok(SceneMode::Epr),
            other => Err(format!("unknown scene mode `{other}`")),
        }
    }
}

/// Per-class glyph scale factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub shielding: f64,
    pub hfc: f64,
    pub quadrupolar: f64,
    pub gtensor: f64,
    pub zfs: f64,
    pub jcoupling: f64,
    pub exchange: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            shielding: 1.0,
            hfc: 1.0,
            quadrupolar: 1.0,
            gtensor: 1.0,
            zfs: 1.0,
            jcoupling: 1.0,
            exchange: 1.0,
        }
    }
}

impl Scales {
    fn for_role(&self, role: GlyphRole) -> f64 {
        match role {
            GlyphRole::Shielding => self.shielding,
            GlyphRole::Hfc => self.hfc,
            GlyphRole::Quadrupolar => self.quadrupolar,
            GlyphRole::Gtensor => self.gtensor,
            GlyphRole::Zfs => self.zfs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneOptions {
    pub mode: SceneMode,
    pub bond_threshold: f64,
    pub scales: Scales,
    /// Lines and coils with a smaller Frobenius norm are not drawn.
    pub display_threshold: f64,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            mode: SceneMode::Nmr,
            bond_threshold: DEFAULT_BOND_THRESHOLD,
            scales: Scales::default(),
            display_threshold: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneAtom {
    pub id: i64,
    pub element: String,
    pub isotope: String,
    pub coordinates: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneElectron {
    pub id: i64,
    /// Presentation-only position on the electron strip.
    pub position: Vector3<f64>,
}

/// Line (J coupling) or coil (exchange) glyph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGlyph {
    pub interaction: i64,
    pub spin_1: i64,
    pub spin_2: i64,
    /// Isotropic part, in the term's units.
    pub value: f64,
    /// Frobenius norm, in the term's units.
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedGlyph {
    pub interaction: i64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub mode: SceneMode,
    pub atoms: Vec<SceneAtom>,
    pub electrons: Vec<SceneElectron>,
    pub bonds: Vec<Bond>,
    pub ellipsoids: Vec<Ellipsoid>,
    pub lines: Vec<PairGlyph>,
    pub coils: Vec<PairGlyph>,
    pub scales: Scales,
    /// Visualizable terms of this mode that could not be drawn.
    pub skipped: Vec<SkippedGlyph>,
}

impl SceneDocument {
    /// Ids of every interaction drawn in this scene.
    pub fn glyph_interactions(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self
            .ellipsoids
            .iter()
            .map(|e| e.interaction)
            .chain(self.lines.iter().map(|l| l.interaction))
            .chain(self.coils.iter().map(|c| c.interaction))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Electron positions on a horizontal strip below the nuclear bounding box.
pub fn electron_layout(sys: &SpinSystem) -> Vec<SceneElectron> {
    let placed: Vec<Vector3<f64>> = sys
        .spins
        .iter()
        .filter(|s| !s.is_electron())
        .filter_map(|s| s.coordinates)
        .collect();
    let (min, max) = if placed.is_empty() {
        (Vector3::zero(), Vector3::zero())
    } else {
        placed.iter().fold(
            (Vector3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), Vector3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), p| {
                (
                    Vector3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                    Vector3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
                )
            },
        )
    };
    let height = (max.y - min.y).max(1.0);
    let y = min.y - ELECTRON_STRIP_OFFSET * height;
    let cx = 0.5 * (min.x + max.x);
    let cz = 0.5 * (min.z + max.z);
    let electrons: Vec<&Spin> = sys.spins.iter().filter(|s| s.is_electron()).collect();
    let n = electrons.len() as f64;
    electrons
        .iter()
        .enumerate()
        .map(|(i, s)| SceneElectron {
            id: s.id,
            position: Vector3::new(cx + (i as f64 - (n - 1.0) / 2.0) * ELECTRON_SPACING, y, cz),
        })
        .collect()
}

/// Builds the render document for one mode.
pub fn build_scene(sys: &SpinSystem, opts: &SceneOptions) -> SceneDocument {
    let atoms: Vec<SceneAtom> = sys
        .spins
        .iter()
        .filter(|s| !s.is_electron())
        .filter_map(|s| {
            s.coordinates.map(|c| SceneAtom {
                id: s.id,
                element: isotopes::element_of(&s.isotope).to_owned(),
                isotope: s.isotope.clone(),
                coordinates: c,
            })
        })
        .collect();
    let electrons = electron_layout(sys);
    let position = |id: i64| -> Option<Vector3<f64>> {
        electrons
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.position)
            .or_else(|| atoms.iter().find(|a| a.id == id).map(|a| a.coordinates))
    };

    let mut scene = SceneDocument {
        mode: opts.mode,
        atoms: atoms.clone(),
        electrons: electrons.clone(),
        bonds: detect_bonds(&sys.spins, opts.bond_threshold),
        ellipsoids: Vec::new(),
        lines: Vec::new(),
        coils: Vec::new(),
        scales: opts.scales,
        skipped: Vec::new(),
    };
    for term in &sys.interactions {
        if !opts.mode.kinds().contains(&term.kind) {
            continue;
        }
        let skip = |scene: &mut SceneDocument, reason: String| {
            scene.skipped.push(SkippedGlyph {
                interaction: term.id,
                reason,
            })
        };
        let matrix = match promote_amplitude(term) {
            Ok(m) => m,
            Err(e) => {
                skip(&mut scene, e.to_string());
                continue;
            }
        };
        match term.kind {
            InteractionKind::Jcoupling | InteractionKind::Exchange => {
                let Some(spin_2) = term.spin_2 else {
                    skip(&mut scene, "missing spin_2".into());
                    continue;
                };
                if position(term.spin_1).is_none() || position(spin_2).is_none() {
                    skip(&mut scene, "spin without a position".into());
                    continue;
                }
                let glyph = PairGlyph {
                    interaction: term.id,
                    spin_1: term.spin_1,
                    spin_2,
                    value: matrix.trace() / 3.0,
                    magnitude: matrix.frobenius_norm(),
                };
                if glyph.magnitude < opts.display_threshold {
                    continue;
                }
                if term.kind == InteractionKind::Jcoupling {
                    scene.lines.push(glyph);
                } else {
                    scene.coils.push(glyph);
                }
            }
            kind => {
                let role = role_of(kind).expect("ellipsoid kinds only");
                // hfc sits on the nucleus, spin_2
                let anchor = if kind == InteractionKind::Hfc { term.spin_2 } else { Some(term.spin_1) };
                let Some(center) = anchor.and_then(position) else {
                    skip(&mut scene, "spin without a position".into());
                    continue;
                };
                match make_ellipsoid(term, center, opts.scales.for_role(role)) {
                    Ok(e) => scene.ellipsoids.push(e),
                    Err(e) => skip(&mut scene, e.to_string()),
                }
            }
        }
    }
    scene
}
