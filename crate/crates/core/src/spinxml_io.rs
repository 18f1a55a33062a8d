//! SpinXML reading, writing and structural checking.
//!
//! Euler angles are ZYZ, active, in degrees; quaternions are stored `w, x, y, z`.
//! The parser accepts the nine distinct attributes `xx` … `zz` on `tensor`
//! and `dcm` elements.

use std::collections::HashSet;
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::linalg::{Matrix3, Vector3, ELEMENT_NAMES};
use crate::model::{
    AmplitudeSpec, EigenvalueSpec, InteractionKind, InteractionTerm, Issue, Location, ModelError,
    Spin, SpinSystem,
};
use crate::rotations::{to_dcm, Rotation};

/// Machine-readable schema shipped with the crate.
pub const SCHEMA_XSD: &str = include_str!("../schema/spinxml.xsd");

const HEADER_COMMENT: &str =
    "<!-- Euler angles: ZYZ, active, degrees. Quaternion order: w, x, y, z. -->";

const AMPLITUDE_ELEMENTS: [&str; 6] = ["scalar", "tensor", "eigenvalues", "aniso_asym", "ax_rh", "span_skew"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("not well-formed XML: {0}")]
    Xml(String),
    #[error("input is not UTF-8")]
    Encoding,
    #[error("root element must be spin_system, found `{0}`")]
    WrongRoot(String),
    #[error("unexpected element `{0}`")]
    UnexpectedElement(String),
    #[error("unknown interaction kind `{0}`")]
    UnknownKind(String),
    #[error("SWITCH violation: {0}")]
    Switch(String),
    #[error("<{element}> is missing attribute `{attribute}`")]
    MissingAttribute { element: String, attribute: String },
    #[error("cannot parse `{value}` as a number for `{attribute}`")]
    BadNumber { attribute: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: u32,
    pub kind: ParseErrorKind,
}

/// Parsed document plus non-fatal findings.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseReport {
    pub system: SpinSystem,
    pub warnings: Vec<Issue>,
}

struct Ctx<'a, 'input> {
    doc: &'a Document<'input>,
    warnings: Vec<Issue>,
}

impl<'a, 'input> Ctx<'a, 'input> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn err(&self, node: Node, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line(node),
            kind,
        }
    }

    fn warn(&mut self, node: Node, message: String) {
        let line = self.line(node);
        self.warnings.push(Issue::new(Location::Line(line), message));
    }

    fn required<'n>(&self, node: Node<'n, 'input>, name: &str) -> Result<&'n str, ParseError> {
        node.attribute(name).ok_or_else(|| {
            self.err(
                node,
                ParseErrorKind::MissingAttribute {
                    element: node.tag_name().name().to_owned(),
                    attribute: name.to_owned(),
                },
            )
        })
    }

    fn number(&self, node: Node, name: &str, raw: &str) -> Result<f64, ParseError> {
        match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(
                node,
                ParseErrorKind::BadNumber {
                    attribute: name.to_owned(),
                    value: raw.to_owned(),
                },
            )),
        }
    }

    fn double(&self, node: Node, name: &str) -> Result<f64, ParseError> {
        let raw = self.required(node, name)?;
        self.number(node, name, raw)
    }

    fn integer(&self, node: Node, name: &str, raw: &str) -> Result<i64, ParseError> {
        raw.trim().parse::<i64>().map_err(|_| {
            self.err(
                node,
                ParseErrorKind::BadNumber {
                    attribute: name.to_owned(),
                    value: raw.to_owned(),
                },
            )
        })
    }

    fn doubles<const N: usize>(&self, node: Node, names: [&str; N]) -> Result<[f64; N], ParseError> {
        let mut out = [0.0; N];
        for (slot, name) in out.iter_mut().zip(names) {
            *slot = self.double(node, name)?;
        }
        Ok(out)
    }

    fn matrix(&self, node: Node) -> Result<Matrix3<f64>, ParseError> {
        Ok(Matrix3::from_row_major(self.doubles(node, ELEMENT_NAMES)?))
    }

    fn vector(&self, node: Node) -> Result<Vector3<f64>, ParseError> {
        let [x, y, z] = self.doubles(node, ["x", "y", "z"])?;
        Ok(Vector3::new(x, y, z))
    }

    fn check_attributes(&mut self, node: Node, allowed: &[&str]) {
        for a in node.attributes() {
            if !allowed.contains(&a.name()) {
                let msg = format!("ignored attribute `{}` on <{}>", a.name(), node.tag_name().name());
                self.warn(node, msg);
            }
        }
    }
}

fn elements<'a, 'input>(node: Node<'a, 'input>) -> impl Iterator<Item = Node<'a, 'input>> {
    node.children().filter(Node::is_element)
}

fn parse_spin(ctx: &mut Ctx, node: Node) -> Result<Spin, ParseError> {
    ctx.check_attributes(node, &["number", "id", "isotope", "label"]);
    let (name, raw) = match (node.attribute("number"), node.attribute("id")) {
        (Some(n), _) => ("number", n),
        (None, Some(i)) => ("id", i),
        (None, None) => return Err(ctx.required(node, "number").unwrap_err()),
    };
    let id = ctx.integer(node, name, raw)?;
    let isotope = ctx.required(node, "isotope")?.to_owned();
    let mut spin = Spin::new(id, isotope);
    spin.label = node.attribute("label").map(str::to_owned);
    for child in elements(node) {
        match child.tag_name().name() {
            "coordinates" if spin.coordinates.is_none() => spin.coordinates = Some(ctx.vector(child)?),
            "coordinates" => {
                return Err(ctx.err(child, ParseErrorKind::Switch("more than one coordinates element".into())))
            }
            other => return Err(ctx.err(child, ParseErrorKind::UnexpectedElement(other.to_owned()))),
        }
    }
    Ok(spin)
}

fn parse_rotation(ctx: &Ctx, node: Node) -> Result<Rotation<f64>, ParseError> {
    let kids: Vec<Node> = elements(node).collect();
    if kids.len() != 1 {
        return Err(ctx.err(
            node,
            ParseErrorKind::Switch(format!("rotation needs exactly one convention, found {}", kids.len())),
        ));
    }
    let c = kids[0];
    Ok(match c.tag_name().name() {
        "euler_angles" => {
            let [alpha, beta, gamma] = ctx.doubles(c, ["alpha", "beta", "gamma"])?;
            Rotation::EulerAngles { alpha, beta, gamma }
        }
        "angle_axis" => {
            let angle = ctx.double(c, "angle")?;
            let axes: Vec<Node> = elements(c).collect();
            match axes.as_slice() {
                [a] if a.has_tag_name("axis") => Rotation::AngleAxis {
                    angle,
                    axis: ctx.vector(*a)?,
                },
                _ => {
                    return Err(ctx.err(
                        c,
                        ParseErrorKind::Switch("angle_axis needs exactly one axis element".into()),
                    ))
                }
            }
        }
        "quaternion" => {
            let [w, x, y, z] = ctx.doubles(c, ["w", "x", "y", "z"])?;
            Rotation::Quaternion { w, x, y, z }
        }
        "dcm" => Rotation::Dcm(ctx.matrix(c)?),
        other => return Err(ctx.err(c, ParseErrorKind::UnexpectedElement(other.to_owned()))),
    })
}

fn parse_amplitude(ctx: &Ctx, node: Node) -> Result<AmplitudeSpec, ParseError> {
    let kids: Vec<Node> = elements(node).collect();
    for k in &kids {
        let n = k.tag_name().name();
        if !AMPLITUDE_ELEMENTS.contains(&n) && n != "rotation" {
            return Err(ctx.err(*k, ParseErrorKind::UnexpectedElement(n.to_owned())));
        }
    }
    let amps: Vec<Node> = kids
        .iter()
        .copied()
        .filter(|k| AMPLITUDE_ELEMENTS.contains(&k.tag_name().name()))
        .collect();
    let rots: Vec<Node> = kids.iter().copied().filter(|k| k.has_tag_name("rotation")).collect();
    let amp = match amps.as_slice() {
        [a] => *a,
        [] => return Err(ctx.err(node, ParseErrorKind::Switch("interaction has no amplitude element".into()))),
        [_, second, ..] => {
            return Err(ctx.err(
                *second,
                ParseErrorKind::Switch("interaction has more than one amplitude element".into()),
            ))
        }
    };
    if rots.len() > 1 {
        return Err(ctx.err(rots[1], ParseErrorKind::Switch("more than one rotation element".into())));
    }
    let rotation = rots.first().map(|r| parse_rotation(ctx, *r)).transpose()?;

    let values = match amp.tag_name().name() {
        "scalar" | "tensor" if rotation.is_some() => {
            return Err(ctx.err(
                rots[0],
                ParseErrorKind::Switch(format!("rotation is not allowed with <{}>", amp.tag_name().name())),
            ))
        }
        "scalar" => {
            let text = amp.text().unwrap_or("");
            return Ok(AmplitudeSpec::Scalar(ctx.number(amp, "scalar", text)?));
        }
        "tensor" => return Ok(AmplitudeSpec::Matrix(ctx.matrix(amp)?)),
        "eigenvalues" => {
            let [xx, yy, zz] = ctx.doubles(amp, ["xx", "yy", "zz"])?;
            EigenvalueSpec::Explicit { xx, yy, zz }
        }
        "aniso_asym" => {
            let [iso, aniso, asym] = ctx.doubles(amp, ["iso", "aniso", "asym"])?;
            EigenvalueSpec::IsoAnisoAsym { iso, aniso, asym }
        }
        "ax_rh" => {
            let [iso, ax, rh] = ctx.doubles(amp, ["iso", "ax", "rh"])?;
            EigenvalueSpec::IsoAxRh { iso, ax, rh }
        }
        "span_skew" => {
            let [iso, span, skew] = ctx.doubles(amp, ["iso", "span", "skew"])?;
            EigenvalueSpec::IsoSpanSkew { iso, span, skew }
        }
        _ => unreachable!("filtered to amplitude elements"),
    };
    Ok(AmplitudeSpec::EigensPlusRotation { values, rotation })
}

struct PendingTerm {
    id: Option<i64>,
    term: InteractionTerm,
}

fn parse_interaction(ctx: &mut Ctx, node: Node) -> Result<PendingTerm, ParseError> {
    ctx.check_attributes(node, &["id", "kind", "units", "spin_1", "spin_2", "label", "reference"]);
    let kind_raw = ctx.required(node, "kind")?;
    let kind: InteractionKind = kind_raw.parse().map_err(|e: ModelError| match e {
        ModelError::UnknownKind(k) => ctx.err(node, ParseErrorKind::UnknownKind(k)),
        other => ctx.err(node, ParseErrorKind::Xml(other.to_string())),
    })?;
    let id = node.attribute("id").map(|v| ctx.integer(node, "id", v)).transpose()?;
    let spin_1 = ctx.integer(node, "spin_1", ctx.required(node, "spin_1")?)?;
    let spin_2 = node
        .attribute("spin_2")
        .map(|v| ctx.integer(node, "spin_2", v))
        .transpose()?;
    let units = match node.attribute("units") {
        Some(u) => u.to_owned(),
        None => {
            let d = kind.default_units();
            ctx.warn(node, format!("missing units on {kind} interaction, assuming {d}"));
            d.to_owned()
        }
    };
    let amplitude = parse_amplitude(ctx, node)?;
    Ok(PendingTerm {
        id,
        term: InteractionTerm {
            id: 0,
            kind,
            units,
            spin_1,
            spin_2,
            label: node.attribute("label").map(str::to_owned),
            reference: node.attribute("reference").map(str::to_owned),
            amplitude,
        },
    })
}

/// Parses a SpinXML document.
///
/// Interactions without an `id` attribute get the smallest positive integers
/// not used by any explicit id, in document order.
pub fn parse_spinxml(text: &str) -> Result<ParseReport, ParseError> {
    let doc = Document::parse(text).map_err(|e| ParseError {
        line: e.pos().row,
        kind: ParseErrorKind::Xml(e.to_string()),
    })?;
    let mut ctx = Ctx {
        doc: &doc,
        warnings: Vec::new(),
    };
    let root = doc.root_element();
    if !root.has_tag_name("spin_system") {
        return Err(ctx.err(root, ParseErrorKind::WrongRoot(root.tag_name().name().to_owned())));
    }
    let mut spins = Vec::new();
    let mut pending = Vec::new();
    for child in elements(root) {
        match child.tag_name().name() {
            "spin" => spins.push(parse_spin(&mut ctx, child)?),
            "interaction" => pending.push(parse_interaction(&mut ctx, child)?),
            other => return Err(ctx.err(child, ParseErrorKind::UnexpectedElement(other.to_owned()))),
        }
    }
    let used: HashSet<i64> = pending.iter().filter_map(|p| p.id).collect();
    let mut next = 1;
    let interactions = pending
        .into_iter()
        .map(|mut p| {
            p.term.id = p.id.unwrap_or_else(|| {
                while used.contains(&next) {
                    next += 1;
                }
                next += 1;
                next - 1
            });
            p.term
        })
        .collect();
    Ok(ParseReport {
        system: SpinSystem { spins, interactions },
        warnings: ctx.warnings,
    })
}

/// Byte-level entry point; input must be UTF-8.
pub fn parse_spinxml_bytes(bytes: &[u8]) -> Result<ParseReport, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError {
        line: 1,
        kind: ParseErrorKind::Encoding,
    })?;
    parse_spinxml(text.strip_prefix('\u{feff}').unwrap_or(text))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WriteStyle {
    /// Every term in its stored convention.
    Preserve,
    /// Eigenvalue forms folded into full `tensor` elements.
    Normalize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AmplitudeMode {
    #[default]
    Preserve,
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrientationMode {
    #[default]
    Preserve,
    Dcm,
}

/// Rewrites amplitudes and orientations of every term. Idempotent.
pub fn convert_system(
    sys: &SpinSystem,
    amplitude: AmplitudeMode,
    orientation: OrientationMode,
) -> Result<SpinSystem, ModelError> {
    let mut out = sys.clone();
    for term in &mut out.interactions {
        if let AmplitudeSpec::EigensPlusRotation { values, rotation } = term.amplitude {
            term.amplitude = match amplitude {
                AmplitudeMode::Matrix => AmplitudeSpec::Matrix(term.amplitude.promote(term.kind)?),
                AmplitudeMode::Preserve => AmplitudeSpec::EigensPlusRotation {
                    values,
                    rotation: match (orientation, rotation) {
                        (OrientationMode::Dcm, Some(r)) if !matches!(r, Rotation::Dcm(_)) => {
                            Some(Rotation::Dcm(to_dcm(&r)?))
                        }
                        (_, r) => r,
                    },
                },
            };
        }
    }
    Ok(out)
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn attrs(pairs: &[(&str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!(" {k}=\"{}\"", format_number(*v)))
        .collect()
}

fn matrix_attrs(m: &Matrix3<f64>) -> String {
    let v = m.to_row_major();
    let pairs: Vec<(&str, f64)> = ELEMENT_NAMES.iter().copied().zip(v).collect();
    attrs(&pairs)
}

fn write_rotation(out: &mut String, r: &Rotation<f64>) {
    out.push_str("    <rotation>\n");
    match *r {
        Rotation::EulerAngles { alpha, beta, gamma } => {
            let _ = writeln!(
                out,
                "      <euler_angles{}/>",
                attrs(&[("alpha", alpha), ("beta", beta), ("gamma", gamma)])
            );
        }
        Rotation::AngleAxis { angle, axis } => {
            let _ = writeln!(out, "      <angle_axis{}>", attrs(&[("angle", angle)]));
            let _ = writeln!(out, "        <axis{}/>", attrs(&[("x", axis.x), ("y", axis.y), ("z", axis.z)]));
            out.push_str("      </angle_axis>\n");
        }
        Rotation::Quaternion { w, x, y, z } => {
            let _ = writeln!(out, "      <quaternion{}/>", attrs(&[("w", w), ("x", x), ("y", y), ("z", z)]));
        }
        Rotation::Dcm(m) => {
            let _ = writeln!(out, "      <dcm{}/>", matrix_attrs(&m));
        }
    }
    out.push_str("    </rotation>\n");
}

fn write_amplitude(out: &mut String, a: &AmplitudeSpec) {
    match a {
        AmplitudeSpec::Scalar(s) => {
            let _ = writeln!(out, "    <scalar>{}</scalar>", format_number(*s));
        }
        AmplitudeSpec::Matrix(m) => {
            let _ = writeln!(out, "    <tensor{}/>", matrix_attrs(m));
        }
        AmplitudeSpec::EigensPlusRotation { values, rotation } => {
            let (name, a) = match *values {
                EigenvalueSpec::Explicit { xx, yy, zz } => ("eigenvalues", attrs(&[("xx", xx), ("yy", yy), ("zz", zz)])),
                EigenvalueSpec::IsoAnisoAsym { iso, aniso, asym } => {
                    ("aniso_asym", attrs(&[("iso", iso), ("aniso", aniso), ("asym", asym)]))
                }
                EigenvalueSpec::IsoAxRh { iso, ax, rh } => ("ax_rh", attrs(&[("iso", iso), ("ax", ax), ("rh", rh)])),
                EigenvalueSpec::IsoSpanSkew { iso, span, skew } => {
                    ("span_skew", attrs(&[("iso", iso), ("span", span), ("skew", skew)]))
                }
            };
            let _ = writeln!(out, "    <{name}{a}/>");
            if let Some(r) = rotation {
                write_rotation(out, r);
            }
        }
    }
}

/// Serializes a document. Output is deterministic: fixed attribute order,
/// two-space indentation, LF line endings.
pub fn write_spinxml(sys: &SpinSystem, style: WriteStyle) -> Result<String, ModelError> {
    let sys = match style {
        WriteStyle::Preserve => sys.clone(),
        WriteStyle::Normalize => convert_system(sys, AmplitudeMode::Matrix, OrientationMode::Preserve)?,
    };
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(HEADER_COMMENT);
    out.push('\n');
    if sys.spins.is_empty() && sys.interactions.is_empty() {
        out.push_str("<spin_system></spin_system>\n");
        return Ok(out);
    }
    out.push_str("<spin_system>\n");
    for s in &sys.spins {
        let _ = write!(out, "  <spin number=\"{}\" isotope=\"{}\"", s.id, escape(&s.isotope));
        if let Some(l) = &s.label {
            let _ = write!(out, " label=\"{}\"", escape(l));
        }
        match s.coordinates {
            Some(c) => {
                out.push_str(">\n");
                let _ = writeln!(out, "    <coordinates{}/>", attrs(&[("x", c.x), ("y", c.y), ("z", c.z)]));
                out.push_str("  </spin>\n");
            }
            None => out.push_str("/>\n"),
        }
    }
    for t in &sys.interactions {
        let _ = write!(
            out,
            "  <interaction id=\"{}\" kind=\"{}\" units=\"{}\" spin_1=\"{}\"",
            t.id,
            t.kind,
            escape(&t.units),
            t.spin_1
        );
        if let Some(s2) = t.spin_2 {
            let _ = write!(out, " spin_2=\"{s2}\"");
        }
        if let Some(l) = &t.label {
            let _ = write!(out, " label=\"{}\"", escape(l));
        }
        if let Some(r) = &t.reference {
            let _ = write!(out, " reference=\"{}\"", escape(r));
        }
        out.push_str(">\n");
        write_amplitude(&mut out, &t.amplitude);
        out.push_str("  </interaction>\n");
    }
    out.push_str("</spin_system>\n");
    Ok(out)
}

/// A structural schema violation.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub line: u32,
    pub message: String,
}

struct SchemaCheck<'a, 'input> {
    doc: &'a Document<'input>,
    out: Vec<Violation>,
}

impl<'a, 'input> SchemaCheck<'a, 'input> {
    fn report(&mut self, node: Node, message: String) {
        let line = self.doc.text_pos_at(node.range().start).row;
        self.out.push(Violation { line, message });
    }

    fn attributes(&mut self, node: Node, required: &[&str], optional: &[&str], numeric: &[&str], integer: &[&str]) {
        let name = node.tag_name().name().to_owned();
        for r in required {
            if node.attribute(*r).is_none() {
                self.report(node, format!("<{name}> requires attribute `{r}`"));
            }
        }
        for a in node.attributes() {
            let n = a.name();
            if !required.contains(&n) && !optional.contains(&n) {
                self.report(node, format!("<{name}> does not allow attribute `{n}`"));
            } else if numeric.contains(&n) && !a.value().trim().parse::<f64>().is_ok_and(f64::is_finite) {
                self.report(node, format!("attribute `{n}` of <{name}> is not a double"));
            } else if integer.contains(&n) && a.value().trim().parse::<i64>().is_err() {
                self.report(node, format!("attribute `{n}` of <{name}> is not an integer"));
            }
        }
    }

    fn leaf(&mut self, node: Node, numeric: &[&str]) {
        self.attributes(node, numeric, &[], numeric, &[]);
        if let Some(c) = elements(node).next() {
            self.report(c, format!("<{}> must be empty", node.tag_name().name()));
        }
    }

    fn spin(&mut self, node: Node) {
        self.attributes(node, &["number", "isotope"], &["label"], &[], &["number"]);
        let mut seen = false;
        for c in elements(node) {
            if c.has_tag_name("coordinates") && !seen {
                seen = true;
                self.leaf(c, &["x", "y", "z"]);
            } else if c.has_tag_name("coordinates") {
                self.report(c, "<spin> allows at most one <coordinates>".into());
            } else {
                self.report(c, format!("unexpected element <{}> in <spin>", c.tag_name().name()));
            }
        }
    }

    fn rotation(&mut self, node: Node) {
        self.attributes(node, &[], &[], &[], &[]);
        let kids: Vec<Node> = elements(node).collect();
        if kids.len() != 1 {
            self.report(node, format!("<rotation> needs exactly one convention, found {}", kids.len()));
        }
        for c in kids {
            match c.tag_name().name() {
                "euler_angles" => self.leaf(c, &["alpha", "beta", "gamma"]),
                "quaternion" => self.leaf(c, &["w", "x", "y", "z"]),
                "dcm" => self.leaf(c, &ELEMENT_NAMES),
                "angle_axis" => {
                    self.attributes(c, &["angle"], &[], &["angle"], &[]);
                    let axes: Vec<Node> = elements(c).collect();
                    match axes.as_slice() {
                        [a] if a.has_tag_name("axis") => self.leaf(*a, &["x", "y", "z"]),
                        _ => self.report(c, "<angle_axis> needs exactly one <axis>".into()),
                    }
                }
                other => self.report(c, format!("unexpected element <{other}> in <rotation>")),
            }
        }
    }

    fn interaction(&mut self, node: Node) {
        self.attributes(
            node,
            &["kind", "units", "spin_1"],
            &["id", "spin_2", "label", "reference"],
            &[],
            &["id", "spin_1", "spin_2"],
        );
        if let Some(k) = node.attribute("kind") {
            if k.parse::<InteractionKind>().is_err() {
                self.report(node, format!("unknown interaction kind `{k}`"));
            }
        }
        let kids: Vec<Node> = elements(node).collect();
        let amps: Vec<Node> = kids
            .iter()
            .copied()
            .filter(|k| AMPLITUDE_ELEMENTS.contains(&k.tag_name().name()))
            .collect();
        let rots: Vec<Node> = kids.iter().copied().filter(|k| k.has_tag_name("rotation")).collect();
        if amps.is_empty() {
            self.report(node, "<interaction> needs one amplitude element".into());
        } else if amps.len() > 1 {
            self.report(amps[1], "<interaction> allows only one amplitude element".into());
        }
        if rots.len() > 1 {
            self.report(rots[1], "<interaction> allows at most one <rotation>".into());
        }
        if let (Some(a), Some(r)) = (amps.first(), rots.first()) {
            if matches!(a.tag_name().name(), "scalar" | "tensor") && amps.len() == 1 {
                self.report(*r, format!("<rotation> is not allowed with <{}>", a.tag_name().name()));
            }
        }
        for c in kids {
            match c.tag_name().name() {
                "scalar" => {
                    self.attributes(c, &[], &[], &[], &[]);
                    if !c.text().unwrap_or("").trim().parse::<f64>().is_ok_and(f64::is_finite) {
                        self.report(c, "<scalar> content is not a double".into());
                    }
                }
                "tensor" => self.leaf(c, &ELEMENT_NAMES),
                "eigenvalues" => self.leaf(c, &["xx", "yy", "zz"]),
                "aniso_asym" => self.leaf(c, &["iso", "aniso", "asym"]),
                "ax_rh" => self.leaf(c, &["iso", "ax", "rh"]),
                "span_skew" => self.leaf(c, &["iso", "span", "skew"]),
                "rotation" => self.rotation(c),
                other => self.report(c, format!("unexpected element <{other}> in <interaction>")),
            }
        }
    }
}

/// Structural check against the shipped schema, without building a model.
pub fn validate_against_schema(text: &str) -> Vec<Violation> {
    let doc = match Document::parse(text) {
        Ok(d) => d,
        Err(e) => {
            return vec![Violation {
                line: e.pos().row,
                message: format!("not well-formed XML: {e}"),
            }]
        }
    };
    let mut check = SchemaCheck {
        doc: &doc,
        out: Vec::new(),
    };
    let root = doc.root_element();
    if !root.has_tag_name("spin_system") {
        check.report(root, format!("root element must be <spin_system>, found <{}>", root.tag_name().name()));
        return check.out;
    }
    check.attributes(root, &[], &[], &[], &[]);
    let mut seen_interaction = false;
    for c in elements(root) {
        match c.tag_name().name() {
            "spin" => {
                if seen_interaction {
                    check.report(c, "<spin> elements must precede <interaction> elements".into());
                }
                check.spin(c);
            }
            "interaction" => {
                seen_interaction = true;
                check.interaction(c);
            }
            other => check.report(c, format!("unexpected element <{other}> in <spin_system>")),
        }
    }
    check.out
}
