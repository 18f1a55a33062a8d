//! Importers for coordinate files and electronic structure outputs.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use thiserror::Error;

use crate::isotopes::{self, constants};
use crate::linalg::{Matrix3, Vector3};
use crate::model::{
    promote_amplitude, AmplitudeSpec, InteractionKind, InteractionTerm, Issue, Location, ModelError,
    Spin, SpinSystem,
};
use crate::spinxml_io::ParseReport;

/// Header phrases the Gaussian log parser anchors on.
pub mod gaussian_anchors {
    pub const STANDARD_ORIENTATION: &str = "Standard orientation:";
    pub const INPUT_ORIENTATION: &str = "Input orientation:";
    pub const SHIELDING: &str = "Magnetic shielding tensor (ppm):";
    pub const J_COUPLING: &str = "Total nuclear spin-spin coupling J (Hz):";
    pub const TABLE_RULE: &str = "-----";
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportError {
    #[error("empty input")]
    Empty,
    #[error("atom count line says {declared}, found {found} atom rows")]
    CountMismatch { declared: usize, found: usize },
    #[error("line {line}: unknown element `{symbol}`")]
    UnknownElement { line: usize, symbol: String },
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("no coordinate table found")]
    NoCoordinates,
    #[error("unrecognized magres dialect")]
    Dialect,
    #[error("invalid threshold {0}")]
    Threshold(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Magnitude filtering applied while importing.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportOptions {
    /// Terms whose Frobenius norm is below this value, in the source units, are dropped.
    pub norm_threshold: f64,
    /// Interaction kinds to import.
    pub include: BTreeSet<InteractionKind>,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            norm_threshold: 0.0,
            include: InteractionKind::ALL.into_iter().collect(),
        }
    }
}

impl ImportOptions {
    pub fn with_threshold(norm_threshold: f64) -> Self {
        ImportOptions {
            norm_threshold,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<(), ImportError> {
        if self.norm_threshold.is_finite() && self.norm_threshold >= 0.0 {
            Ok(())
        } else {
            Err(ImportError::Threshold(self.norm_threshold))
        }
    }
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse::<f64>().ok().filter(|v| v.is_finite())
}

fn floats(tokens: &[&str]) -> Option<Vec<f64>> {
    tokens.iter().map(|t| parse_float(t)).collect()
}

fn bad(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::BadLine {
        line,
        message: message.into(),
    }
}

fn frobenius(term: &InteractionTerm) -> Result<f64, ModelError> {
    Ok(promote_amplitude(term)?.frobenius_norm())
}

/// Keeps terms whose Frobenius norm is at least `threshold`. Spins are kept.
pub fn filter_by_norm(sys: &SpinSystem, threshold: f64) -> Result<SpinSystem, ModelError> {
    filter_by_norm_kinds(sys, threshold, &InteractionKind::ALL.into_iter().collect())
}

/// Like [`filter_by_norm`], but only terms of the listed kinds are tested.
pub fn filter_by_norm_kinds(
    sys: &SpinSystem,
    threshold: f64,
    kinds: &BTreeSet<InteractionKind>,
) -> Result<SpinSystem, ModelError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(ModelError::NegativeThreshold(threshold));
    }
    let mut interactions = Vec::with_capacity(sys.interactions.len());
    for t in &sys.interactions {
        if !kinds.contains(&t.kind) || frobenius(t)? >= threshold {
            interactions.push(t.clone());
        }
    }
    Ok(SpinSystem {
        spins: sys.spins.clone(),
        interactions,
    })
}

fn finish(
    spins: Vec<Spin>,
    terms: Vec<InteractionTerm>,
    opts: &ImportOptions,
    warnings: Vec<Issue>,
) -> Result<ParseReport, ImportError> {
    let included: Vec<InteractionTerm> = terms.into_iter().filter(|t| opts.include.contains(&t.kind)).collect();
    let sys = filter_by_norm(
        &SpinSystem {
            spins,
            interactions: included,
        },
        opts.norm_threshold,
    )?;
    Ok(ParseReport { system: sys, warnings })
}

fn renumber(terms: &mut [InteractionTerm]) {
    for (i, t) in terms.iter_mut().enumerate() {
        t.id = i as i64 + 1;
    }
}

/// Reads an XYZ file. Multi-frame files yield the last frame.
///
/// Isotopes are guessed as the most abundant natural isotope of each element;
/// non-magnetic guesses are reported as warnings.
pub fn import_xyz(text: &str) -> Result<ParseReport, ImportError> {
    let lines: Vec<&str> = text.lines().collect();
    let is_blank = |i: usize| lines[i].trim().is_empty();
    let mut pos = (0..lines.len()).find(|&i| !is_blank(i)).ok_or(ImportError::Empty)?;
    let mut frame: Option<(usize, Vec<usize>)> = None;
    while pos < lines.len() {
        let count_line = lines[pos].trim();
        let declared: usize = match (count_line.parse(), &frame) {
            (Ok(n), _) => n,
            (Err(_), Some((declared, _))) => {
                let extra = (pos..lines.len()).filter(|&i| !is_blank(i)).count();
                return Err(ImportError::CountMismatch {
                    declared: *declared,
                    found: declared + extra,
                });
            }
            (Err(_), None) => return Err(bad(pos + 1, format!("expected atom count, found `{count_line}`"))),
        };
        let start = pos + 2;
        let found = (start..lines.len()).take_while(|&i| !is_blank(i)).count();
        if found < declared {
            return Err(ImportError::CountMismatch { declared, found });
        }
        frame = Some((declared, (start..start + declared).collect()));
        pos = start + declared;
        while pos < lines.len() && is_blank(pos) {
            pos += 1;
        }
    }
    let (_, rows) = frame.ok_or(ImportError::Empty)?;

    let mut spins = Vec::with_capacity(rows.len());
    let mut warnings = Vec::new();
    for (n, &i) in rows.iter().enumerate() {
        let toks: Vec<&str> = lines[i].split_whitespace().collect();
        if toks.len() < 4 {
            return Err(bad(i + 1, "expected `element x y z`"));
        }
        let element = match toks[0].parse::<u32>() {
            Ok(z) => isotopes::element_from_number(z).map(str::to_owned),
            Err(_) => Some(isotopes::normalize_element(toks[0])),
        };
        let isotope = element
            .as_deref()
            .and_then(isotopes::most_abundant)
            .ok_or_else(|| ImportError::UnknownElement {
                line: i + 1,
                symbol: toks[0].to_owned(),
            })?;
        let xyz = floats(&toks[1..4]).ok_or_else(|| bad(i + 1, "unparseable coordinate"))?;
        let id = n as i64 + 1;
        if !isotopes::lookup(isotope).is_some_and(|r| r.is_magnetic()) {
            warnings.push(Issue::new(
                Location::Spin(id),
                format!("non-magnetic isotope {isotope} guessed for {}", toks[0]),
            ));
        }
        spins.push(Spin::new(id, isotope).at(xyz[0], xyz[1], xyz[2]));
    }
    Ok(ParseReport {
        system: SpinSystem {
            spins,
            interactions: Vec::new(),
        },
        warnings,
    })
}

fn last_index_of(lines: &[&str], phrases: &[&str]) -> Option<usize> {
    lines
        .iter()
        .rposition(|l| phrases.iter().any(|p| l.contains(p)))
}

struct Atom {
    center: i64,
    element: String,
    xyz: Vector3<f64>,
}

fn gaussian_coordinates(lines: &[&str]) -> Result<Vec<Atom>, ImportError> {
    use gaussian_anchors::*;
    let anchor = last_index_of(lines, &[STANDARD_ORIENTATION, INPUT_ORIENTATION]).ok_or(ImportError::NoCoordinates)?;
    // anchor, rule, two header lines, rule, rows..., rule
    let mut rules = 0;
    let mut atoms = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(anchor + 1) {
        if line.trim_start().starts_with(TABLE_RULE) {
            rules += 1;
            if rules == 3 {
                break;
            }
            continue;
        }
        if rules < 2 {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 6 {
            return Err(bad(i + 1, "malformed orientation row"));
        }
        let center: i64 = toks[0].parse().map_err(|_| bad(i + 1, "bad center number"))?;
        let z: u32 = toks[1].parse().map_err(|_| bad(i + 1, "bad atomic number"))?;
        let element = isotopes::element_from_number(z)
            .ok_or_else(|| ImportError::UnknownElement {
                line: i + 1,
                symbol: toks[1].to_owned(),
            })?
            .to_owned();
        let c = floats(&toks[3..6]).ok_or_else(|| bad(i + 1, "bad coordinate"))?;
        atoms.push(Atom {
            center,
            element,
            xyz: Vector3::new(c[0], c[1], c[2]),
        });
    }
    if atoms.is_empty() {
        return Err(ImportError::NoCoordinates);
    }
    Ok(atoms)
}

fn axis_index(c: char) -> Option<usize> {
    match c {
        'X' => Some(0),
        'Y' => Some(1),
        'Z' => Some(2),
        _ => None,
    }
}

/// Parses `XX=  v  YX=  v  ZX=  v` style rows into matrix cells.
fn labelled_cells(line: &str) -> Vec<(usize, usize, f64)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let tok = toks[i];
        if let Some(label) = tok.strip_suffix('=') {
            let (val, step) = (toks.get(i + 1).copied(), 2);
            let mut ch = label.chars();
            if let (Some(a), Some(b), None, Some(v)) = (
                ch.next().and_then(axis_index),
                ch.next().and_then(axis_index),
                ch.next(),
                val.and_then(parse_float),
            ) {
                out.push((a, b, v));
            }
            i += step;
        } else if let Some((label, v)) = tok.split_once('=') {
            // `XX=-1194.8200` with no space
            let mut ch = label.chars();
            if let (Some(a), Some(b), Some(v)) = (ch.next().and_then(axis_index), ch.next().and_then(axis_index), parse_float(v)) {
                out.push((a, b, v));
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    out
}

fn gaussian_shielding(lines: &[&str], start: usize) -> Result<Vec<(i64, Matrix3<f64>)>, ImportError> {
    let mut out: Vec<(i64, Matrix3<f64>)> = Vec::new();
    let mut i = start + 1;
    while i < lines.len() {
        let toks: Vec<&str> = lines[i].split_whitespace().collect();
        let is_header = toks.len() >= 3 && toks[0].parse::<i64>().is_ok() && toks[2] == "Isotropic";
        if !is_header {
            break;
        }
        let center: i64 = toks[0].parse().expect("checked above");
        let mut m = Matrix3::zero();
        let mut seen = 0;
        for r in 1..=3 {
            let line = lines.get(i + r).ok_or_else(|| bad(i + r, "truncated shielding tensor"))?;
            let cells = labelled_cells(line);
            if cells.len() != 3 {
                return Err(bad(i + r + 1, "malformed shielding tensor row"));
            }
            for (a, b, v) in cells {
                m[(a, b)] = v;
                seen += 1;
            }
        }
        if seen != 9 {
            return Err(bad(i + 1, "incomplete shielding tensor"));
        }
        out.push((center, m));
        i += 4;
        // optional eigenvalue line
        if lines.get(i).is_some_and(|l| l.trim_start().starts_with("Eigenvalues:")) {
            i += 1;
        }
    }
    Ok(out)
}

fn gaussian_j(lines: &[&str], start: usize) -> Result<Vec<(i64, i64, f64)>, ImportError> {
    let mut columns: Vec<i64> = Vec::new();
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(start + 1) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            break;
        }
        if toks.iter().all(|t| t.parse::<i64>().is_ok()) {
            columns = toks.iter().map(|t| t.parse().expect("checked")).collect();
            continue;
        }
        let Ok(row) = toks[0].parse::<i64>() else { break };
        let Some(vals) = floats(&toks[1..]) else { break };
        if vals.len() > columns.len() {
            return Err(bad(i + 1, "more J values than column headers"));
        }
        for (col, v) in columns.iter().zip(vals) {
            if *col < row {
                out.push((*col, row, v));
            }
        }
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    Ok(out)
}

/// Reads a Gaussian 03/09 log.
///
/// Coordinates come from the last orientation table; shielding tensors and
/// the total J matrix from the last block of each. Isotopes are the most
/// abundant magnetic isotope of each element.
pub fn import_gaussian_log(text: &str, opts: &ImportOptions) -> Result<ParseReport, ImportError> {
    use gaussian_anchors::*;
    opts.check()?;
    let lines: Vec<&str> = text.lines().collect();
    let atoms = gaussian_coordinates(&lines)?;
    let mut warnings = Vec::new();
    let spins: Vec<Spin> = atoms
        .iter()
        .map(|a| {
            let iso = isotopes::magnetic_guess(&a.element).unwrap_or("");
            let iso = if iso.is_empty() { a.element.clone() } else { iso.to_owned() };
            Spin::new(a.center, iso).at(a.xyz.x, a.xyz.y, a.xyz.z)
        })
        .collect();
    for s in &spins {
        if isotopes::lookup(&s.isotope).is_none() {
            warnings.push(Issue::new(Location::Spin(s.id), format!("no isotope known for element {}", s.isotope)));
        }
    }

    let mut terms = Vec::new();
    match last_index_of(&lines, &[SHIELDING]) {
        Some(at) => {
            for (center, m) in gaussian_shielding(&lines, at)? {
                let mut t = InteractionTerm::new(0, InteractionKind::Shielding, center, None, AmplitudeSpec::Matrix(m));
                t.reference = Some("absolute".into());
                t.label = Some(format!("gaussian shielding, line {}", at + 1));
                terms.push(t);
            }
        }
        None => warnings.push(Issue::new(Location::Document, "no magnetic shielding block found")),
    }
    match last_index_of(&lines, &[J_COUPLING]) {
        Some(at) => {
            for (a, b, j) in gaussian_j(&lines, at)? {
                let mut t = InteractionTerm::new(0, InteractionKind::Jcoupling, a, Some(b), AmplitudeSpec::Scalar(j));
                t.label = Some(format!("gaussian total J, line {}", at + 1));
                terms.push(t);
            }
        }
        None => warnings.push(Issue::new(Location::Document, "no spin-spin coupling J block found")),
    }
    renumber(&mut terms);
    finish(spins, terms, opts, warnings)
}

/// Isotropic J in Hz from a reduced coupling tensor K in 10¹⁹ T² J⁻¹:
/// `J = h γ₁ γ₂ K / (4π²)`.
pub fn j_from_reduced_coupling(k_iso_1e19: f64, gamma_1: f64, gamma_2: f64) -> f64 {
    constants::PLANCK * gamma_1 * gamma_2 * k_iso_1e19 * 1e19 / (4.0 * PI * PI)
}

type AtomKey = (String, i64);

#[derive(Default)]
struct MagresData {
    atoms: Vec<(String, String, i64, Vector3<f64>)>,
    shielding: Vec<(AtomKey, Matrix3<f64>, usize)>,
    isc: Vec<(AtomKey, AtomKey, Matrix3<f64>, usize)>,
}

impl MagresData {
    fn spin_id(&self, key: &(String, i64)) -> Option<i64> {
        self.atoms
            .iter()
            .position(|(label, _, idx, _)| (label, idx) == (&key.0, &key.1))
            .map(|p| p as i64 + 1)
    }

    fn set_shielding(&mut self, key: (String, i64), m: Matrix3<f64>, line: usize) {
        match self.shielding.iter_mut().find(|(k, _, _)| *k == key) {
            Some(slot) => *slot = (key, m, line),
            None => self.shielding.push((key, m, line)),
        }
    }
}

fn matrix9(vals: &[f64]) -> Matrix3<f64> {
    let mut a = [0.0; 9];
    a.copy_from_slice(&vals[..9]);
    Matrix3::from_row_major(a)
}

fn magres_new(text: &str, warnings: &mut Vec<Issue>) -> Result<MagresData, ImportError> {
    let mut data = MagresData::default();
    let mut block = String::new();
    let mut efg_warned = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[/") {
            let _ = name;
            block.clear();
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            block = name.to_owned();
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match (block.as_str(), toks[0]) {
            ("atoms", "atom") => {
                if toks.len() != 7 {
                    return Err(bad(i + 1, "atom line needs species, label, index and x y z"));
                }
                let idx: i64 = toks[3].parse().map_err(|_| bad(i + 1, "bad atom index"))?;
                let c = floats(&toks[4..7]).ok_or_else(|| bad(i + 1, "bad coordinates"))?;
                let key_label = toks[2].to_owned();
                let entry = (key_label.clone(), toks[1].to_owned(), idx, Vector3::new(c[0], c[1], c[2]));
                match data.atoms.iter_mut().find(|a| a.0 == key_label && a.2 == idx) {
                    Some(slot) => *slot = entry,
                    None => data.atoms.push(entry),
                }
            }
            ("magres", "ms") => {
                if toks.len() != 12 {
                    return Err(bad(i + 1, "ms line needs label, index and nine values"));
                }
                let idx: i64 = toks[2].parse().map_err(|_| bad(i + 1, "bad atom index"))?;
                let v = floats(&toks[3..]).ok_or_else(|| bad(i + 1, "bad tensor value"))?;
                data.set_shielding((toks[1].to_owned(), idx), matrix9(&v), i + 1);
            }
            ("magres", "isc") => {
                if toks.len() != 14 {
                    return Err(bad(i + 1, "isc line needs two atoms and nine values"));
                }
                let i1: i64 = toks[2].parse().map_err(|_| bad(i + 1, "bad atom index"))?;
                let i2: i64 = toks[4].parse().map_err(|_| bad(i + 1, "bad atom index"))?;
                let v = floats(&toks[5..]).ok_or_else(|| bad(i + 1, "bad tensor value"))?;
                let k1 = (toks[1].to_owned(), i1);
                let k2 = (toks[3].to_owned(), i2);
                let m = matrix9(&v);
                match data
                    .isc
                    .iter_mut()
                    .find(|(a, b, _, _)| (a == &k1 && b == &k2) || (a == &k2 && b == &k1))
                {
                    Some(slot) => *slot = (k1, k2, m, i + 1),
                    None => data.isc.push((k1, k2, m, i + 1)),
                }
            }
            ("magres", "efg") if !efg_warned => {
                efg_warned = true;
                warnings.push(Issue::new(Location::Line(i as u32 + 1), "efg tensors are not imported"));
            }
            _ => {}
        }
    }
    Ok(data)
}

fn magres_old(text: &str) -> Result<MagresData, ImportError> {
    let mut data = MagresData::default();
    let lines: Vec<&str> = text.lines().collect();
    let mut current: Option<(String, i64)> = None;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if let Some(rest) = line.strip_prefix("Atom:") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(bad(i + 1, "Atom: line needs species and index"));
            }
            let idx: i64 = toks[1].parse().map_err(|_| bad(i + 1, "bad atom index"))?;
            current = Some((toks[0].to_owned(), idx));
        } else if let (Some(key), Some(pos)) = (&current, line.find("Coordinates")) {
            let toks: Vec<&str> = line[pos + "Coordinates".len()..].split_whitespace().collect();
            let c = toks.get(..3).and_then(floats).ok_or_else(|| bad(i + 1, "bad coordinates"))?;
            let entry = (key.0.clone(), key.0.clone(), key.1, Vector3::new(c[0], c[1], c[2]));
            match data.atoms.iter_mut().find(|a| a.0 == key.0 && a.2 == key.1) {
                Some(slot) => *slot = entry,
                None => data.atoms.push(entry),
            }
        } else if line.contains("TOTAL Shielding Tensor") {
            let key = current.clone().ok_or_else(|| bad(i + 1, "shielding tensor outside an Atom: block"))?;
            let mut rows = Vec::new();
            let mut j = i + 1;
            while rows.len() < 9 && j < lines.len() {
                let toks: Vec<&str> = lines[j].split_whitespace().collect();
                if !toks.is_empty() {
                    let r = floats(&toks).filter(|r| r.len() == 3).ok_or_else(|| bad(j + 1, "bad tensor row"))?;
                    rows.extend(r);
                }
                j += 1;
            }
            if rows.len() != 9 {
                return Err(bad(i + 1, "truncated shielding tensor"));
            }
            data.set_shielding(key, matrix9(&rows), i + 1);
            i = j;
            continue;
        }
        i += 1;
    }
    Ok(data)
}

/// Reads a CASTEP magres file, either the annotated `#$magres-abinitio`
/// format or the older `Atom:` block format.
pub fn import_magres(text: &str) -> Result<ParseReport, ImportError> {
    import_magres_with(text, &ImportOptions::default())
}

pub fn import_magres_with(text: &str, opts: &ImportOptions) -> Result<ParseReport, ImportError> {
    opts.check()?;
    let mut warnings = Vec::new();
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    let (data, dialect) = if first.starts_with("#$magres-abinitio") {
        (magres_new(text, &mut warnings)?, "magres")
    } else if text.lines().any(|l| l.trim_start().starts_with("Atom:")) && text.contains("TOTAL Shielding Tensor") {
        (magres_old(text)?, "magres (old format)")
    } else {
        return Err(ImportError::Dialect);
    };

    let mut spins = Vec::new();
    for (n, (_, species, _, xyz)) in data.atoms.iter().enumerate() {
        let element = isotopes::normalize_element(isotopes::element_of(species.split(':').next().unwrap_or(species)));
        let isotope = if species.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            species.clone()
        } else {
            isotopes::magnetic_guess(&element).map_or(element.clone(), str::to_owned)
        };
        spins.push(Spin::new(n as i64 + 1, isotope).at(xyz.x, xyz.y, xyz.z));
    }
    let mut terms = Vec::new();
    for (key, m, line) in &data.shielding {
        let id = data
            .spin_id(key)
            .ok_or_else(|| bad(*line, format!("shielding for unknown atom {} {}", key.0, key.1)))?;
        let mut t = InteractionTerm::new(0, InteractionKind::Shielding, id, None, AmplitudeSpec::Matrix(*m));
        t.reference = Some("absolute".into());
        t.label = Some(format!("{dialect} ms, line {line}"));
        terms.push(t);
    }
    for (k1, k2, m, line) in &data.isc {
        let (a, b) = match (data.spin_id(k1), data.spin_id(k2)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(bad(*line, "isc for unknown atom")),
        };
        let gamma = |id: i64| {
            isotopes::lookup(&spins[(id - 1) as usize].isotope)
                .map(|r| r.gamma)
                .filter(|g| *g != 0.0)
        };
        let (Some(ga), Some(gb)) = (gamma(a), gamma(b)) else {
            warnings.push(Issue::new(Location::Line(*line as u32), "isc between non-magnetic atoms skipped"));
            continue;
        };
        let j = j_from_reduced_coupling(m.trace() / 3.0, ga, gb);
        let mut t = InteractionTerm::new(0, InteractionKind::Jcoupling, a.min(b), Some(a.max(b)), AmplitudeSpec::Scalar(j));
        t.label = Some(format!("{dialect} isc, line {line}"));
        terms.push(t);
    }
    renumber(&mut terms);
    finish(spins, terms, opts, warnings)
}
