//! Text exporters for SIMPSON, EasySpin and Spinach.
//!
//! Output is deterministic: numbers carry at most 12 significant digits,
//! lines end in `\n` and the text ends with a newline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitudes::{eigens_from_matrix, EigenOrdering};
use crate::geometry::{dipolar_tensor, GeometryError};
use crate::isotopes;
use crate::linalg::Matrix3;
use crate::model::{hz_factor, AmplitudeSpec, InteractionKind, InteractionTerm, ModelError, Spin, SpinSystem};
use crate::rotations::{euler_from_dcm, to_dcm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("{target} cannot represent this system: {reason}")]
    Unsupported { target: ExportTarget, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportTarget {
    Simpson,
    Easyspin,
    Spinach,
}

impl std::fmt::Display for ExportTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExportTarget::Simpson => "SIMPSON",
            ExportTarget::Easyspin => "EasySpin",
            ExportTarget::Spinach => "Spinach",
        })
    }
}

impl FromStr for ExportTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simpson" => Ok(ExportTarget::Simpson),
            "easyspin" => Ok(ExportTarget::Easyspin),
            "spinach" => Ok(ExportTarget::Spinach),
            other => Err(format!("unknown export target `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EasySpinRegime {
    Liquid,
    SlowMotion,
    #[default]
    Solid,
}

impl FromStr for EasySpinRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "liquid" | "isotropic" => Ok(EasySpinRegime::Liquid),
            "slow-motion" | "slowmotion" | "slow_motion" => Ok(EasySpinRegime::SlowMotion),
            "solid" | "solid-state" => Ok(EasySpinRegime::Solid),
            other => Err(format!("unknown EasySpin regime `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    pub regime: EasySpinRegime,
    /// SIMPSON: derive dipole lines from coordinates when the system has no
    /// dipolar terms.
    pub dipolar_from_coordinates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportOutput {
    pub text: String,
    /// Also present as comments in `text`.
    pub warnings: Vec<String>,
}

pub fn export(sys: &SpinSystem, target: ExportTarget, opts: &ExportOptions) -> Result<ExportOutput, ExportError> {
    match target {
        ExportTarget::Simpson => export_simpson(sys, opts),
        ExportTarget::Easyspin => export_easyspin(sys, opts.regime),
        ExportTarget::Spinach => export_spinach(sys),
    }
}

/// At most 12 significant digits, shortest form.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let s = format!("{rounded:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

fn matlab_matrix(m: &Matrix3<f64>) -> String {
    let rows: Vec<String> = (0..3)
        .map(|i| (0..3).map(|j| format_number(m[(i, j)])).collect::<Vec<_>>().join(" "))
        .collect();
    format!("[{}]", rows.join("; "))
}

fn matlab_row(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(" "))
}

/// Collects comment lines and warnings in step.
struct Notes {
    prefix: &'static str,
    lines: Vec<String>,
    warnings: Vec<String>,
}

impl Notes {
    fn new(prefix: &'static str) -> Self {
        Notes {
            prefix,
            lines: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn warn(&mut self, msg: String) {
        self.lines.push(format!("{} warning: {msg}", self.prefix));
        self.warnings.push(msg);
    }

    fn write(&self, out: &mut String) {
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
    }
}

fn term_name(t: &InteractionTerm) -> String {
    format!("{} {}", t.kind, t.id)
}

/// Symmetric-part principal data in Haeberlen order.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Principal {
    iso: f64,
    zeta: f64,
    eta: f64,
    euler: [f64; 3],
}

fn principal(m: &Matrix3<f64>) -> Principal {
    let s = m.symmetric_part();
    let iso = s.trace() / 3.0;
    let e = eigens_from_matrix(&s, EigenOrdering::Haeberlen);
    let [xx, yy, zz] = e.eigenvalues;
    let zeta = zz - iso;
    let scale = e.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if zeta.abs() <= 1e-12 * scale || zeta == 0.0 {
        return Principal {
            iso,
            zeta: 0.0,
            eta: 0.0,
            euler: [0.0; 3],
        };
    }
    Principal {
        iso,
        zeta,
        eta: (yy - xx) / zeta,
        euler: euler_from_dcm(&e.frame),
    }
}

fn has_antisymmetric(m: &Matrix3<f64>) -> bool {
    m.antisymmetric_part().max_abs() > 1e-12 * m.max_abs()
}

fn in_hz(t: &InteractionTerm, m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    hz_factor(&t.units).map(|f| m.scale(f))
}

fn nuclear_magnetic(s: &Spin) -> bool {
    !s.is_electron() && isotopes::lookup(&s.isotope).is_none_or(|r| r.is_magnetic())
}

/// SIMPSON `spinsys` block.
pub fn export_simpson(sys: &SpinSystem, opts: &ExportOptions) -> Result<ExportOutput, ExportError> {
    if let Some(e) = sys.spins.iter().find(|s| s.is_electron()) {
        return Err(ExportError::Unsupported {
            target: ExportTarget::Simpson,
            reason: format!("spin {} is an electron", e.id),
        });
    }
    if let Some(t) = sys.interactions.iter().find(|t| {
        matches!(
            t.kind,
            InteractionKind::Gtensor | InteractionKind::Hfc | InteractionKind::Zfs | InteractionKind::Exchange
        )
    }) {
        return Err(ExportError::Unsupported {
            target: ExportTarget::Simpson,
            reason: format!("{} is an EPR interaction", term_name(t)),
        });
    }

    let nuclei: Vec<&Spin> = sys.spins.iter().filter(|s| nuclear_magnetic(s)).collect();
    let index: BTreeMap<i64, usize> = nuclei.iter().enumerate().map(|(i, s)| (s.id, i + 1)).collect();
    let mut notes = Notes::new("#");
    for s in sys.spins.iter().filter(|s| !nuclear_magnetic(s)) {
        notes.lines.push(format!("# spin {} ({}) is not magnetic and is left out", s.id, s.isotope));
    }

    let mut body = Vec::new();
    let angles = |p: &Principal| p.euler.map(format_number).join(" ");
    for t in &sys.interactions {
        let i = index.get(&t.spin_1).copied();
        let j = t.spin_2.and_then(|s| index.get(&s).copied());
        if i.is_none() || (t.kind.is_binary() && j.is_none()) {
            notes.warn(format!("{} involves a spin outside the nuclei list and is dropped", term_name(t)));
            continue;
        }
        let i = i.unwrap_or_default();
        let m = t.amplitude.promote(t.kind)?;
        if has_antisymmetric(&m) {
            notes.warn(format!("{}: antisymmetric part dropped", term_name(t)));
        }
        if let Some(r) = &t.reference {
            notes.lines.push(format!("# {} reference: {r}", term_name(t)));
        }
        match t.kind {
            InteractionKind::Shielding | InteractionKind::Shift => {
                if t.kind == InteractionKind::Shielding {
                    notes.warn(format!("{} is a shielding tensor written as a shift line", term_name(t)));
                }
                let p = principal(&m);
                body.push(format!(
                    "shift {i} {}p {}p {} {}",
                    format_number(p.iso),
                    format_number(p.zeta),
                    format_number(p.eta),
                    angles(&p)
                ));
            }
            InteractionKind::Jcoupling | InteractionKind::Dipolar | InteractionKind::Quadrupolar => {
                let Some(hz) = in_hz(t, &m) else {
                    notes.warn(format!("{}: units `{}` are not a frequency", term_name(t), t.units));
                    continue;
                };
                let p = principal(&hz);
                let j = j.unwrap_or_default();
                body.push(match t.kind {
                    InteractionKind::Jcoupling => format!(
                        "jcoupling {i} {j} {} {} {} {}",
                        format_number(p.iso),
                        format_number(p.zeta),
                        format_number(p.eta),
                        angles(&p)
                    ),
                    InteractionKind::Dipolar => {
                        if p.iso.abs() > 1e-9 * hz.max_abs() {
                            notes.warn(format!("{}: isotropic part dropped", term_name(t)));
                        }
                        format!("dipole {i} {j} {} {}", format_number(p.zeta / 2.0), angles(&p))
                    }
                    _ => format!("quadrupole {i} 2 {} {} {}", format_number(p.zeta), format_number(p.eta), angles(&p)),
                });
            }
            _ => notes.warn(format!("{} has no SIMPSON equivalent and is dropped", term_name(t))),
        }
    }

    let has_dipolar = sys.interactions.iter().any(|t| t.kind == InteractionKind::Dipolar);
    if opts.dipolar_from_coordinates && !has_dipolar {
        for (a, sa) in nuclei.iter().enumerate() {
            for (b, sb) in nuclei.iter().enumerate().skip(a + 1) {
                if sa.coordinates.is_none() || sb.coordinates.is_none() {
                    continue;
                }
                let p = principal(&dipolar_tensor(sa, sb)?);
                body.push(format!("dipole {} {} {} {}", a + 1, b + 1, format_number(p.zeta / 2.0), angles(&p)));
            }
        }
    }

    let mut out = String::new();
    out.push_str("# SIMPSON spin system\n");
    if !body.is_empty() {
        out.push_str("# shift and jcoupling: iso zeta eta alpha beta gamma, zeta = d_zz - iso, eta = (d_yy - d_xx)/zeta\n");
        out.push_str("# principal values ordered |d_zz - iso| >= |d_xx - iso| >= |d_yy - iso|\n");
        out.push_str("# Euler angles ZYZ in degrees, principal frame to molecular frame; couplings in Hz\n");
    }
    notes.write(&mut out);
    out.push_str("spinsys {\n");
    if !nuclei.is_empty() {
        let mut channels: Vec<&str> = Vec::new();
        for s in &nuclei {
            if !channels.contains(&s.isotope.as_str()) {
                channels.push(&s.isotope);
            }
        }
        let _ = writeln!(out, "  channels {}", channels.join(" "));
        let names: Vec<&str> = nuclei.iter().map(|s| s.isotope.as_str()).collect();
        let _ = writeln!(out, "  nuclei {}", names.join(" "));
    }
    for l in body {
        let _ = writeln!(out, "  {l}");
    }
    out.push_str("}\n");
    Ok(ExportOutput {
        text: out,
        warnings: notes.warnings,
    })
}

/// One EasySpin tensor field value.
#[derive(Clone, Copy)]
struct FieldTensor {
    matrix: Matrix3<f64>,
    /// Principal values and frame angles (radians) when stored that way.
    principal: Option<([f64; 3], [f64; 3])>,
}

fn field_tensor(t: &InteractionTerm, factor: f64) -> Result<FieldTensor, ExportError> {
    let matrix = t.amplitude.promote(t.kind)?.scale(factor);
    let principal = match &t.amplitude {
        AmplitudeSpec::EigensPlusRotation { values, rotation } => {
            let l = values.resolve(t.kind.spanskew_kind()).map_err(ModelError::from)?;
            let euler = match rotation {
                Some(r) => euler_from_dcm(&to_dcm(r).map_err(ModelError::from)?),
                None => [0.0; 3],
            };
            Some((l.map(|v| v * factor), euler.map(f64::to_radians)))
        }
        _ => None,
    };
    Ok(FieldTensor { matrix, principal })
}

/// Writes `Sys.<name>` (and `<name>Frame`) for a grid of optional tensors,
/// one row per `rows` entry and one 3-column block per column.
fn write_tensor_field(
    out: &mut String,
    name: &str,
    grid: &[Vec<Option<FieldTensor>>],
    liquid: bool,
) {
    if grid.iter().all(|r| r.iter().all(Option::is_none)) {
        return;
    }
    if liquid {
        let rows: Vec<String> = grid
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| format_number(c.map_or(0.0, |t| t.matrix.trace() / 3.0)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let _ = writeln!(out, "Sys.{name} = [{}];", rows.join("; "));
        return;
    }
    let all_principal = grid.iter().flatten().flatten().all(|t| t.principal.is_some())
        && grid.iter().flatten().flatten().all(|t| !has_antisymmetric(&t.matrix));
    if all_principal {
        let mut values = Vec::new();
        let mut frames = Vec::new();
        for r in grid {
            let mut v = Vec::new();
            let mut f = Vec::new();
            for c in r {
                let (l, e) = c.and_then(|t| t.principal).unwrap_or(([0.0; 3], [0.0; 3]));
                v.extend(l.map(format_number));
                f.extend(e.map(format_number));
            }
            values.push(v.join(" "));
            frames.push(f.join(" "));
        }
        let _ = writeln!(out, "Sys.{name} = [{}];", values.join("; "));
        let _ = writeln!(out, "Sys.{name}Frame = [{}];", frames.join("; "));
    } else {
        let mut rows = Vec::new();
        for r in grid {
            for i in 0..3 {
                let cells: Vec<String> = r
                    .iter()
                    .flat_map(|c| {
                        let m = c.map_or(Matrix3::zero(), |t| t.matrix);
                        (0..3).map(move |j| format_number(m[(i, j)]))
                    })
                    .collect();
                rows.push(cells.join(" "));
            }
        }
        let _ = writeln!(out, "Sys.{name} = [{}];", rows.join("; "));
    }
}

fn mhz_factor(t: &InteractionTerm) -> Option<f64> {
    hz_factor(&t.units).map(|f| f / 1e6)
}

/// EasySpin `Sys` structure for the chosen regime.
pub fn export_easyspin(sys: &SpinSystem, regime: EasySpinRegime) -> Result<ExportOutput, ExportError> {
    let liquid = regime == EasySpinRegime::Liquid;
    let electrons: Vec<&Spin> = sys.spins.iter().filter(|s| s.is_electron()).collect();
    let nuclei: Vec<&Spin> = sys.spins.iter().filter(|s| nuclear_magnetic(s)).collect();
    let e_index: BTreeMap<i64, usize> = electrons.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let n_index: BTreeMap<i64, usize> = nuclei.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let (ne, nn) = (electrons.len(), nuclei.len());

    let mut notes = Notes::new("%");
    let mut g = vec![vec![None]; ne];
    let mut d = vec![vec![None]; ne];
    let mut a = vec![vec![None; ne]; nn];
    let mut q = vec![vec![None]; nn];
    let mut exchange: BTreeMap<(usize, usize), FieldTensor> = BTreeMap::new();

    let place = |slot: &mut Option<FieldTensor>, value: FieldTensor, t: &InteractionTerm, notes: &mut Notes| {
        if slot.is_some() {
            notes.warn(format!("{} duplicates an earlier term and is dropped", term_name(t)));
        } else {
            *slot = Some(value);
        }
    };

    if ne == 0 && !sys.spins.is_empty() {
        notes.warn("no electron spins; only the nuclei are written".into());
    }
    for t in &sys.interactions {
        if let Some(r) = &t.reference {
            notes.lines.push(format!("% {} reference: {r}", term_name(t)));
        }
        let frequency = |notes: &mut Notes| -> Option<f64> {
            let f = mhz_factor(t);
            if f.is_none() {
                notes.warn(format!(
                    "{} in {} not exported: EasySpin expects MHz and the conversion needs a g value",
                    term_name(t),
                    t.units
                ));
            }
            f
        };
        match t.kind {
            InteractionKind::Gtensor | InteractionKind::Zfs => {
                let Some(&ei) = e_index.get(&t.spin_1) else {
                    notes.warn(format!("{} is not on an electron and is dropped", term_name(t)));
                    continue;
                };
                let (grid, factor) = if t.kind == InteractionKind::Gtensor {
                    (&mut g, Some(1.0))
                } else {
                    (&mut d, frequency(&mut notes))
                };
                let Some(factor) = factor else { continue };
                let ft = field_tensor(t, factor)?;
                place(&mut grid[ei][0], ft, t, &mut notes);
            }
            InteractionKind::Hfc | InteractionKind::Exchange => {
                let Some(factor) = frequency(&mut notes) else { continue };
                let ft = field_tensor(t, factor)?;
                let s2 = t.spin_2.unwrap_or_default();
                if t.kind == InteractionKind::Hfc {
                    match (e_index.get(&t.spin_1), n_index.get(&s2)) {
                        (Some(&ei), Some(&ni)) => place(&mut a[ni][ei], ft, t, &mut notes),
                        _ => notes.warn(format!("{} does not join an electron and a magnetic nucleus", term_name(t))),
                    }
                } else {
                    match (e_index.get(&t.spin_1), e_index.get(&s2)) {
                        (Some(&x), Some(&y)) if x != y => {
                            let key = (x.min(y), x.max(y));
                            match exchange.entry(key) {
                                std::collections::btree_map::Entry::Occupied(_) => {
                                    notes.warn(format!("{} duplicates an earlier term and is dropped", term_name(t)))
                                }
                                std::collections::btree_map::Entry::Vacant(v) => {
                                    v.insert(ft);
                                }
                            }
                        }
                        _ => notes.warn(format!("{} does not join two electrons", term_name(t))),
                    }
                }
            }
            InteractionKind::Quadrupolar => {
                let Some(&ni) = n_index.get(&t.spin_1) else {
                    notes.warn(format!("{} is not on a magnetic nucleus", term_name(t)));
                    continue;
                };
                if isotopes::lookup(&nuclei[ni].isotope).is_some_and(|r| r.spin_x2 < 2) {
                    notes.warn(format!("{} is on a spin-1/2 nucleus and is dropped", term_name(t)));
                    continue;
                }
                let Some(factor) = frequency(&mut notes) else { continue };
                let ft = field_tensor(t, factor)?;
                place(&mut q[ni][0], ft, t, &mut notes);
            }
            _ => notes.warn(format!("{} has no EasySpin field and is dropped", term_name(t))),
        }
    }

    if liquid {
        let aniso = |t: &FieldTensor| {
            let iso = t.matrix.trace() / 3.0;
            (t.matrix - Matrix3::identity().scale(iso)).max_abs() > 1e-12 * t.matrix.max_abs()
        };
        let discarded_anisotropy = g.iter().chain(&a).chain(&q).chain(&d).flatten().flatten().any(aniso)
            || exchange.values().any(aniso);
        if q.iter().flatten().any(Option::is_some) || d.iter().flatten().any(Option::is_some) {
            notes.warn("quadrupolar and zero-field terms average out in the liquid regime and are dropped".into());
        }
        if discarded_anisotropy {
            notes.warn("anisotropic parts discarded for the liquid regime".into());
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "% EasySpin spin system, {} regime",
        match regime {
            EasySpinRegime::Liquid => "liquid (isotropic)",
            EasySpinRegime::SlowMotion => "slow-motion",
            EasySpinRegime::Solid => "solid-state",
        }
    );
    if ne + nn > 0 {
        out.push_str("% frequencies in MHz; frames are ZYZ Euler angles in radians, tensor frame relative to molecular frame\n");
    }
    notes.write(&mut out);
    if ne > 0 {
        out.push_str("Sys = struct();\n");
        let _ = writeln!(out, "Sys.S = {};", matlab_row(&vec![0.5; ne]));
        if g.iter().any(|r| r[0].is_none()) {
            let missing: Vec<String> = electrons
                .iter()
                .zip(&g)
                .filter(|(_, r)| r[0].is_none())
                .map(|(s, _)| s.id.to_string())
                .collect();
            out.push_str(&format!("% electrons without a g tensor use the free-electron value: {}\n", missing.join(", ")));
            for r in &mut g {
                if r[0].is_none() {
                    let free = 2.002_319_304_36;
                    r[0] = Some(FieldTensor {
                        matrix: Matrix3::identity().scale(free),
                        principal: Some(([free; 3], [0.0; 3])),
                    });
                }
            }
        }
        write_tensor_field(&mut out, "g", &g, liquid);
    }
    if nn > 0 {
        let names: Vec<&str> = nuclei.iter().map(|s| s.isotope.as_str()).collect();
        if ne == 0 {
            out.push_str("Sys = struct();\n");
        }
        let _ = writeln!(out, "Sys.Nucs = '{}';", names.join(","));
        if ne > 0 {
            write_tensor_field(&mut out, "A", &a, liquid);
        }
        if !liquid {
            write_tensor_field(&mut out, "Q", &q, false);
        }
    }
    if ne > 0 && !liquid {
        write_tensor_field(&mut out, "D", &d, false);
    }
    if ne > 1 && !exchange.is_empty() {
        let pairs: Vec<(usize, usize)> = (0..ne).flat_map(|x| (x + 1..ne).map(move |y| (x, y))).collect();
        let anisotropic = !liquid
            && exchange.values().any(|t| {
                let iso = t.matrix.trace() / 3.0;
                (t.matrix - Matrix3::identity().scale(iso)).max_abs() > 1e-12 * t.matrix.max_abs()
            });
        if anisotropic {
            let mut rows = Vec::new();
            for p in &pairs {
                let m = exchange.get(p).map_or(Matrix3::zero(), |t| t.matrix);
                for i in 0..3 {
                    rows.push((0..3).map(|j| format_number(m[(i, j)])).collect::<Vec<_>>().join(" "));
                }
            }
            let _ = writeln!(out, "Sys.ee = [{}];", rows.join("; "));
        } else {
            let j: Vec<f64> = pairs
                .iter()
                .map(|p| exchange.get(p).map_or(0.0, |t| t.matrix.trace() / 3.0))
                .collect();
            let _ = writeln!(out, "Sys.J = {};", matlab_row(&j));
        }
    }
    Ok(ExportOutput {
        text: out,
        warnings: notes.warnings,
    })
}

/// Spinach `sys` and `inter` structures. Couplings are in Hz, Zeeman terms in ppm
/// for nuclei and as g tensors for electrons.
pub fn export_spinach(sys: &SpinSystem) -> Result<ExportOutput, ExportError> {
    let n = sys.spins.len();
    let index: BTreeMap<i64, usize> = sys.spins.iter().enumerate().map(|(i, s)| (s.id, i + 1)).collect();
    let mut notes = Notes::new("%");
    let mut zeeman_scalar: BTreeMap<usize, f64> = BTreeMap::new();
    let mut zeeman_matrix: BTreeMap<usize, Matrix3<f64>> = BTreeMap::new();
    let mut scalar: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut matrix: BTreeMap<(usize, usize), Matrix3<f64>> = BTreeMap::new();

    for t in &sys.interactions {
        if let Some(r) = &t.reference {
            notes.lines.push(format!("% {} reference: {r}", term_name(t)));
        }
        let Some(&i) = index.get(&t.spin_1) else {
            notes.warn(format!("{} references a missing spin", term_name(t)));
            continue;
        };
        let j = match t.spin_2 {
            Some(s2) => match index.get(&s2) {
                Some(&j) => j,
                None => {
                    notes.warn(format!("{} references a missing spin", term_name(t)));
                    continue;
                }
            },
            None => i,
        };
        let m = t.amplitude.promote(t.kind)?;
        let scalar_value = match t.amplitude {
            AmplitudeSpec::Scalar(s) => Some(s),
            _ => None,
        };
        match t.kind {
            InteractionKind::Shielding | InteractionKind::Shift | InteractionKind::Gtensor => {
                if t.kind == InteractionKind::Shielding {
                    notes.warn(format!("{} is a shielding tensor written where Spinach expects a chemical shift", term_name(t)));
                }
                if zeeman_scalar.contains_key(&i) || zeeman_matrix.contains_key(&i) {
                    notes.warn(format!("{} duplicates an earlier Zeeman term and is dropped", term_name(t)));
                    continue;
                }
                match scalar_value {
                    Some(s) => {
                        zeeman_scalar.insert(i, s);
                    }
                    None => {
                        zeeman_matrix.insert(i, m);
                    }
                }
            }
            InteractionKind::Spinrotation => {
                notes.warn(format!("{} has no Spinach equivalent and is dropped", term_name(t)));
            }
            _ => {
                let Some(f) = hz_factor(&t.units) else {
                    notes.warn(format!(
                        "{} in {} not exported: Spinach expects Hz and the conversion needs a g value",
                        term_name(t),
                        t.units
                    ));
                    continue;
                };
                if t.kind == InteractionKind::Dipolar {
                    notes.lines.push(format!(
                        "% {} given explicitly; Spinach also derives dipolar couplings from inter.coordinates",
                        term_name(t)
                    ));
                }
                let key = (i.min(j), i.max(j));
                if scalar.contains_key(&key) || matrix.contains_key(&key) {
                    notes.warn(format!("{} duplicates an earlier coupling and is dropped", term_name(t)));
                    continue;
                }
                match scalar_value {
                    Some(s) if i != j => {
                        scalar.insert(key, s * f);
                    }
                    _ => {
                        // keep the stored orientation: rows belong to spin_1
                        let mm = if i <= j { m } else { m.transpose() };
                        matrix.insert(key, mm.scale(f));
                    }
                }
            }
        }
    }

    let mut out = String::new();
    out.push_str("% Spinach spin system\n");
    notes.write(&mut out);
    let isotopes: Vec<String> = sys.spins.iter().map(|s| format!("'{}'", s.isotope)).collect();
    let _ = writeln!(out, "sys.isotopes = {{{}}};", isotopes.join(", "));
    if sys.spins.iter().any(|s| s.label.is_some()) {
        let labels: Vec<String> = sys
            .spins
            .iter()
            .map(|s| format!("'{}'", s.label.as_deref().unwrap_or("").replace('\'', "''")))
            .collect();
        let _ = writeln!(out, "sys.labels = {{{}}};", labels.join(", "));
    }
    if !zeeman_scalar.is_empty() {
        let _ = writeln!(out, "inter.zeeman.scalar = cell(1, {n});");
        for (i, v) in &zeeman_scalar {
            let _ = writeln!(out, "inter.zeeman.scalar{{{i}}} = {};", format_number(*v));
        }
    }
    if !zeeman_matrix.is_empty() {
        let _ = writeln!(out, "inter.zeeman.matrix = cell(1, {n});");
        for (i, m) in &zeeman_matrix {
            let _ = writeln!(out, "inter.zeeman.matrix{{{i}}} = {};", matlab_matrix(m));
        }
    }
    if !scalar.is_empty() {
        let _ = writeln!(out, "inter.coupling.scalar = cell({n}, {n});");
        for ((i, j), v) in &scalar {
            let _ = writeln!(out, "inter.coupling.scalar{{{i}, {j}}} = {};", format_number(*v));
        }
    }
    if !matrix.is_empty() {
        let _ = writeln!(out, "inter.coupling.matrix = cell({n}, {n});");
        for ((i, j), m) in &matrix {
            let _ = writeln!(out, "inter.coupling.matrix{{{i}, {j}}} = {};", matlab_matrix(m));
        }
    }
    if sys.spins.iter().any(|s| s.coordinates.is_some()) {
        let coords: Vec<String> = sys
            .spins
            .iter()
            .map(|s| match s.coordinates {
                Some(c) if !s.is_electron() => matlab_row(&c.to_array()),
                _ => "[]".into(),
            })
            .collect();
        let _ = writeln!(out, "inter.coordinates = {{{}}};", coords.join("; "));
    }
    Ok(ExportOutput {
        text: out,
        warnings: notes.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EigenvalueSpec;
    use crate::rotations::Rotation;

    fn formaldehyde_like() -> SpinSystem {
        SpinSystem {
            spins: vec![
                Spin::new(1, "1H").at(1.0, 0.0, 0.0),
                Spin::new(2, "1H").at(-1.0, 0.0, 0.0),
                Spin::new(3, "13C").at(0.0, 0.5, 0.0),
                Spin::new(4, "16O").at(0.0, 1.7, 0.0),
            ],
            interactions: vec![
                InteractionTerm::new(1, InteractionKind::Shift, 3, None, AmplitudeSpec::Scalar(190.0)),
                InteractionTerm::new(2, InteractionKind::Jcoupling, 1, Some(3), AmplitudeSpec::Scalar(170.0)),
            ],
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(29.13), "29.13");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(-2.0), "-2");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(1e-20), "1e-20");
    }

    #[test]
    fn simpson_block() {
        let out = export_simpson(&formaldehyde_like(), &ExportOptions::default()).unwrap();
        assert!(out.text.contains("  channels 1H 13C\n"));
        assert!(out.text.contains("  nuclei 1H 1H 13C\n"));
        assert!(out.text.contains("  shift 3 190p 0p 0 0 0 0\n"), "{}", out.text);
        assert!(out.text.contains("  jcoupling 1 3 170 0 0 0 0 0\n"));
        assert!(out.text.ends_with("}\n"));
    }

    #[test]
    fn simpson_axial_shift() {
        let mut sys = formaldehyde_like();
        sys.interactions[0].amplitude =
            AmplitudeSpec::eigens(EigenvalueSpec::Explicit { xx: 10.0, yy: 10.0, zz: 40.0 }, Rotation::euler(0.0, 90.0, 0.0));
        let out = export_simpson(&sys, &ExportOptions::default()).unwrap();
        assert!(out.text.contains("  shift 3 20p 20p 0 "), "{}", out.text);
    }

    #[test]
    fn simpson_rejects_electrons() {
        let mut sys = formaldehyde_like();
        sys.spins.push(Spin::new(9, "E"));
        assert!(matches!(
            export_simpson(&sys, &ExportOptions::default()),
            Err(ExportError::Unsupported { .. })
        ));
    }

    #[test]
    fn simpson_dipolar_from_coordinates() {
        let mut sys = formaldehyde_like();
        sys.interactions.clear();
        let opts = ExportOptions {
            dipolar_from_coordinates: true,
            ..Default::default()
        };
        let out = export_simpson(&sys, &opts).unwrap();
        assert_eq!(out.text.matches("  dipole ").count(), 3);
    }

    #[test]
    fn empty_outputs() {
        let e = SpinSystem::default();
        assert!(export_simpson(&e, &ExportOptions::default()).unwrap().text.ends_with("spinsys {\n}\n"));
        assert_eq!(export_spinach(&e).unwrap().text, "% Spinach spin system\nsys.isotopes = {};\n");
    }

    #[test]
    fn easyspin_liquid_projects() {
        let sys = SpinSystem {
            spins: vec![Spin::new(1, "E"), Spin::new(2, "14N")],
            interactions: vec![
                InteractionTerm::new(1, InteractionKind::Gtensor, 1, None, AmplitudeSpec::eigens(
                    EigenvalueSpec::Explicit { xx: 2.0, yy: 2.0, zz: 2.003 },
                    Rotation::identity(),
                )),
                {
                    let mut t = InteractionTerm::new(2, InteractionKind::Hfc, 1, Some(2), AmplitudeSpec::Scalar(40.0));
                    t.units = "MHz".into();
                    t
                },
            ],
        };
        let liquid = export_easyspin(&sys, EasySpinRegime::Liquid).unwrap();
        assert!(liquid.text.contains("Sys.g = [2.001];"), "{}", liquid.text);
        assert!(liquid.text.contains("Sys.A = [40];"));
        assert!(!liquid.warnings.is_empty());
        let solid = export_easyspin(&sys, EasySpinRegime::Solid).unwrap();
        assert!(solid.text.contains("Sys.g = [2 2 2.003];"), "{}", solid.text);
        assert!(solid.text.contains("Sys.gFrame = [0 0 0];"));
        assert!(solid.text.contains("Sys.Nucs = '14N';"));
    }

    #[test]
    fn easyspin_refuses_gauss() {
        let sys = SpinSystem {
            spins: vec![Spin::new(1, "E"), Spin::new(2, "1H")],
            interactions: vec![InteractionTerm::new(1, InteractionKind::Hfc, 1, Some(2), AmplitudeSpec::Scalar(5.0))],
        };
        let out = export_easyspin(&sys, EasySpinRegime::Solid).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(!out.text.contains("Sys.A"));
    }

    #[test]
    fn spinach_fields() {
        let out = export_spinach(&formaldehyde_like()).unwrap();
        assert!(out.text.contains("sys.isotopes = {'1H', '1H', '13C', '16O'};"));
        assert!(out.text.contains("inter.zeeman.scalar{3} = 190;"));
        assert!(out.text.contains("inter.coupling.scalar{1, 3} = 170;"));
        assert!(out.text.contains("inter.coordinates = {[1 0 0]; [-1 0 0]; [0 0.5 0]; [0 1.7 0]};"));
    }
}
