//! `spinxml` command-line tool and serve-mode request handling.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use spinxml::amplitudes::{recompute_views, AmplitudeError, Edit, RepresentationBundle};
use spinxml::exporters::{export, EasySpinRegime, ExportOptions, ExportTarget};
use spinxml::geometry::{build_scene, dipolar_between, SceneMode, SceneOptions, DEFAULT_BOND_THRESHOLD};
use spinxml::importers::{import_gaussian_log, import_magres_with, import_xyz, ImportOptions};
use spinxml::model::{validate_system, Issue, ValidationReport};
use spinxml::rotations::Rotation;
use spinxml::spinxml_io::{
    convert_system, parse_spinxml, validate_against_schema, write_spinxml, AmplitudeMode, OrientationMode,
    ParseReport, Violation, WriteStyle,
};
use spinxml::{AmplitudeSpec, InteractionTerm, SpinSystem};

pub mod serve;

#[derive(Parser, Debug)]
#[command(name = "spinxml", version, about = "Read, convert, import, export and inspect SpinXML spin systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a document against the schema and the model rules.
    Validate { input: PathBuf },
    /// Rewrite amplitudes and orientations in another convention.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = AmplitudeArg::Preserve)]
        amplitude: AmplitudeArg,
        #[arg(long, value_enum, default_value_t = OrientationArg::Preserve)]
        orientation: OrientationArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a document from quantum-chemistry or structure output.
    Import {
        #[arg(value_enum)]
        format: ImportFormat,
        file: PathBuf,
        /// Drop terms whose Frobenius norm is below this value.
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write input for a simulation package.
    Export {
        #[arg(value_enum)]
        target: TargetArg,
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RegimeArg::Solid)]
        regime: RegimeArg,
        /// SIMPSON only: add dipole lines computed from coordinates.
        #[arg(long)]
        dipolar_from_coordinates: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit the render scene as JSON.
    Scene {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Nmr)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_BOND_THRESHOLD)]
        bond_threshold: f64,
        #[arg(long, default_value_t = 0.0)]
        display_threshold: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the dipolar tensor between two spins, in Hz.
    Dipolar {
        input: PathBuf,
        /// Spin numbers, `A,B`.
        #[arg(long, value_parser = parse_pair)]
        pair: (i64, i64),
    },
    /// Change one representation of an interaction and write the document back.
    Edit {
        input: PathBuf,
        #[arg(long)]
        interaction: i64,
        /// `<field>=<json>`, e.g. `eigenvalues=[1,2,3]`.
        #[arg(long, value_parser = parse_assignment)]
        set: (String, serde_json::Value),
        /// Defaults to overwriting the input.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve the document, scene and edit endpoints over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Document loaded at start-up.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AmplitudeArg {
    Preserve,
    Matrix,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrientationArg {
    Preserve,
    Dcm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ImportFormat {
    Gaussian,
    Xyz,
    Magres,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TargetArg {
    Simpson,
    Easyspin,
    Spinach,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RegimeArg {
    Liquid,
    SlowMotion,
    Solid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Nmr,
    Epr,
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let n = |v: &str| v.trim().parse::<i64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((n(a)?, n(b)?))
}

fn parse_assignment(s: &str) -> Result<(String, serde_json::Value), String> {
    let (field, value) = s.split_once('=').ok_or("expected <field>=<json>")?;
    let v = serde_json::from_str(value).map_err(|e| format!("value is not JSON: {e}"))?;
    Ok((field.trim().to_owned(), v))
}

/// A failure reported as `{"error": kind, "message": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(error: &'static str, message: impl fmt::Display) -> Self {
        CliError {
            error,
            message: message.to_string(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain strings")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.error, self.message)
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<ParseReport> {
    parse_spinxml(&read(path)?).map_err(|e| CliError::new("parse", e))
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::new("io", format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::new("io", e)),
    }
}

fn warn_lines(warnings: impl IntoIterator<Item = String>, stderr: &mut dyn Write) {
    for w in warnings {
        let _ = writeln!(stderr, "{}", json!({ "warning": w }));
    }
}

fn issue_text(i: &Issue) -> String {
    i.to_string()
}

/// Schema and model report for a document.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub clean: bool,
    pub schema: Vec<Violation>,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

pub fn validate_text(text: &str) -> CliResult<ValidateReport> {
    let schema = validate_against_schema(text);
    let parsed = parse_spinxml(text).map_err(|e| CliError::new("parse", e))?;
    let ValidationReport { errors, mut warnings } = validate_system(&parsed.system);
    warnings.splice(0..0, parsed.warnings);
    Ok(ValidateReport {
        clean: schema.is_empty() && errors.is_empty(),
        schema,
        errors,
        warnings,
    })
}

/// Representation bundle of one stored term.
pub fn bundle_for(term: &InteractionTerm) -> CliResult<RepresentationBundle<f64>> {
    let kind = term.kind.spanskew_kind();
    let model = |e: spinxml::model::ModelError| CliError::new("model", e);
    match &term.amplitude {
        AmplitudeSpec::EigensPlusRotation { values, rotation } => {
            let l = values.resolve(kind).map_err(|e| CliError::new("model", e))?;
            RepresentationBundle::from_eigens(l, rotation.as_ref().unwrap_or(&Rotation::identity()), kind)
                .map_err(|e| CliError::new("model", e))
        }
        _ => RepresentationBundle::from_matrix(&term.amplitude.promote(term.kind).map_err(model)?, kind)
            .map_err(|e| CliError::new("model", e)),
    }
}

/// Applies an edit to term `id`, stores the result as a full tensor and
/// returns the recomputed bundle.
pub fn apply_edit(
    sys: &mut SpinSystem,
    id: i64,
    field: &str,
    value: serde_json::Value,
) -> CliResult<RepresentationBundle<f64>> {
    let term = sys
        .interaction_mut(id)
        .ok_or_else(|| CliError::new("not_found", format!("no interaction with id {id}")))?;
    let current = bundle_for(term)?;
    let edit = Edit::from_json(field, value).map_err(edit_error)?;
    let next = recompute_views(&current, &edit).map_err(edit_error)?;
    term.amplitude = AmplitudeSpec::Matrix(next.matrix);
    Ok(next)
}

fn edit_error(e: AmplitudeError) -> CliError {
    match e {
        AmplitudeError::ReadOnlyField(_) => CliError::new("read_only_field", e),
        _ => CliError::new("edit", e),
    }
}

fn write_xml(sys: &SpinSystem) -> CliResult<String> {
    write_spinxml(sys, WriteStyle::Preserve).map_err(|e| CliError::new("model", e))
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Validate { input } => {
            let report = validate_text(&read(&input)?)?;
            let line = serde_json::to_string(&report).map_err(|e| CliError::new("io", e))?;
            emit(None, &(line + "\n"), stdout)?;
            Ok(if report.clean { 0 } else { 1 })
        }
        Command::Convert {
            input,
            amplitude,
            orientation,
            output,
        } => {
            let report = load(&input)?;
            warn_lines(report.warnings.iter().map(issue_text), stderr);
            let amp = match amplitude {
                AmplitudeArg::Preserve => AmplitudeMode::Preserve,
                AmplitudeArg::Matrix => AmplitudeMode::Matrix,
            };
            let orient = match orientation {
                OrientationArg::Preserve => OrientationMode::Preserve,
                OrientationArg::Dcm => OrientationMode::Dcm,
            };
            let sys = convert_system(&report.system, amp, orient).map_err(|e| CliError::new("model", e))?;
            emit(output.as_deref(), &write_xml(&sys)?, stdout)?;
            Ok(0)
        }
        Command::Import {
            format,
            file,
            threshold,
            output,
        } => {
            let text = read(&file)?;
            let opts = ImportOptions::with_threshold(threshold);
            let report = match format {
                ImportFormat::Gaussian => import_gaussian_log(&text, &opts),
                ImportFormat::Magres => import_magres_with(&text, &opts),
                ImportFormat::Xyz => import_xyz(&text).and_then(|r| {
                    let system = spinxml::importers::filter_by_norm(&r.system, threshold)?;
                    Ok(ParseReport {
                        system,
                        warnings: r.warnings,
                    })
                }),
            }
            .map_err(|e| CliError::new("import", e))?;
            warn_lines(report.warnings.iter().map(issue_text), stderr);
            emit(output.as_deref(), &write_xml(&report.system)?, stdout)?;
            Ok(0)
        }
        Command::Export {
            target,
            input,
            regime,
            dipolar_from_coordinates,
            output,
        } => {
            let report = load(&input)?;
            let target = match target {
                TargetArg::Simpson => ExportTarget::Simpson,
                TargetArg::Easyspin => ExportTarget::Easyspin,
                TargetArg::Spinach => ExportTarget::Spinach,
            };
            let opts = ExportOptions {
                regime: match regime {
                    RegimeArg::Liquid => EasySpinRegime::Liquid,
                    RegimeArg::SlowMotion => EasySpinRegime::SlowMotion,
                    RegimeArg::Solid => EasySpinRegime::Solid,
                },
                dipolar_from_coordinates,
            };
            let out = export(&report.system, target, &opts).map_err(|e| CliError::new("export", e))?;
            warn_lines(out.warnings, stderr);
            emit(output.as_deref(), &out.text, stdout)?;
            Ok(0)
        }
        Command::Scene {
            input,
            mode,
            bond_threshold,
            display_threshold,
            output,
        } => {
            let report = load(&input)?;
            let opts = SceneOptions {
                mode: match mode {
                    ModeArg::Nmr => SceneMode::Nmr,
                    ModeArg::Epr => SceneMode::Epr,
                },
                bond_threshold,
                display_threshold,
                ..Default::default()
            };
            let scene = build_scene(&report.system, &opts);
            let text = serde_json::to_string_pretty(&scene).map_err(|e| CliError::new("io", e))? + "\n";
            emit(output.as_deref(), &text, stdout)?;
            Ok(0)
        }
        Command::Dipolar { input, pair: (a, b) } => {
            let report = load(&input)?;
            let d = dipolar_between(&report.system, a, b).map_err(|e| CliError::new("geometry", e))?;
            let rows: Vec<[f64; 3]> = (0..3).map(|i| [d[(i, 0)], d[(i, 1)], d[(i, 2)]]).collect();
            let line = json!({ "spin_1": a, "spin_2": b, "units": "Hz", "tensor": rows });
            emit(None, &format!("{line}\n"), stdout)?;
            Ok(0)
        }
        Command::Edit {
            input,
            interaction,
            set: (field, value),
            output,
        } => {
            let mut sys = load(&input)?.system;
            let bundle = apply_edit(&mut sys, interaction, &field, value)?;
            let target = output.unwrap_or(input);
            emit(Some(&target), &write_xml(&sys)?, stdout)?;
            let line = serde_json::to_string(&bundle).map_err(|e| CliError::new("io", e))?;
            emit(None, &(line + "\n"), stdout)?;
            Ok(0)
        }
        Command::Serve { port, host, input } => {
            let sys = match input {
                Some(p) => load(&p)?.system,
                None => SpinSystem::default(),
            };
            serve::serve(&host, port, sys, stderr).map_err(|e| CliError::new("io", e))?;
            Ok(0)
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
/// Errors go to `stderr` as a single JSON line.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", CliError::new("usage", first).to_json_line());
            return 2;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json_line());
            1
        }
    }
}

/// Body of `POST /interactions/{id}/edit`.
#[derive(Debug, Clone, Deserialize)]
pub struct EditRequest {
    pub edited: String,
    pub value: serde_json::Value,
}
