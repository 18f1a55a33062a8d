use spinxml::exporters::{export_easyspin, export_simpson, export_spinach, EasySpinRegime, ExportError, ExportOptions};
use spinxml::geometry::{build_scene, detect_bonds, SceneMode, SceneOptions};
use spinxml::importers::{import_gaussian_log, import_magres, import_xyz, ImportError, ImportOptions};
use spinxml::model::{promote_amplitude, validate_system};
use spinxml::spinxml_io::{parse_spinxml, validate_against_schema, write_spinxml, ParseErrorKind, WriteStyle};
use spinxml::{AmplitudeSpec, InteractionKind, Matrix3d, SpinSystem};

const FORMALDEHYDE: &str = include_str!("fixtures/formaldehyde.xml");
const VERBATIM: &str = include_str!("fixtures/formaldehyde_verbatim.xml");
const MIXED: &str = include_str!("fixtures/mixed.xml");
const CORPUS: &str = include_str!("fixtures/corpus.xml");
const GAUSSIAN: &str = include_str!("fixtures/formaldehyde_gaussian.log");
const MAGRES: &str = include_str!("fixtures/fragment.magres");
const MAGRES_OLD: &str = include_str!("fixtures/fragment_old.magres");
const XYZ: &str = include_str!("fixtures/formaldehyde.xyz");

fn formaldehyde() -> SpinSystem {
    parse_spinxml(FORMALDEHYDE).unwrap().system
}

#[test]
fn fixtures_validate_clean() {
    for (name, text) in [("formaldehyde", FORMALDEHYDE), ("mixed", MIXED), ("corpus", CORPUS)] {
        let report = parse_spinxml(text).unwrap();
        assert!(report.warnings.is_empty(), "{name}: {:?}", report.warnings);
        let v = validate_system(&report.system);
        assert!(v.is_clean(), "{name}: {v:?}");
        assert!(validate_against_schema(text).is_empty(), "{name}");
    }
}

#[test]
fn duplicate_attribute_is_rejected_with_line() {
    let err = parse_spinxml(VERBATIM).unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::Xml(_)), "{err}");
    assert!(err.line > 1);
}

#[test]
fn formaldehyde_interactions_get_sequential_ids() {
    let ids: Vec<i64> = formaldehyde().interactions.iter().map(|t| t.id).collect();
    assert_eq!(ids, [1, 2, 3, 4, 5, 6]);
}

#[test]
fn formaldehyde_carbon_principal_values() {
    let sys = formaldehyde();
    let m = promote_amplitude(sys.interactions.iter().find(|t| t.spin_1 == 3).unwrap()).unwrap();
    let mut d = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    d.sort_by(f64::total_cmp);
    for (got, want) in d.iter().zip([-127.82925, -34.9715, 86.87075]) {
        assert!((got - want).abs() < 1e-9, "{d:?}");
    }
}

#[test]
fn formaldehyde_bonds() {
    let sys = formaldehyde();
    // H-O is 1.154 Å in these coordinates, so both thresholds pick up all five short contacts
    assert_eq!(detect_bonds(&sys.spins, 1.8).len(), 5);
    assert_eq!(detect_bonds(&sys.spins, 1.3).len(), 5);
    assert_eq!(detect_bonds(&sys.spins, 1.1).len(), 2);
    assert_eq!(detect_bonds(&sys.spins, 1.9).len(), 6);
}

#[test]
fn formaldehyde_scene() {
    let sys = formaldehyde();
    let nmr = build_scene(&sys, &SceneOptions::default());
    assert_eq!(nmr.atoms.len(), 4);
    assert_eq!(nmr.ellipsoids.len(), 3);
    assert_eq!(nmr.lines.len(), 3);
    assert!(nmr.electrons.is_empty() && nmr.coils.is_empty());
    let epr = build_scene(&sys, &SceneOptions { mode: SceneMode::Epr, ..Default::default() });
    assert!(epr.glyph_interactions().is_empty());
    let json = serde_json::to_value(&nmr).unwrap();
    assert_eq!(json["mode"], "nmr");
}

#[test]
fn mixed_scene_places_glyphs() {
    let sys = parse_spinxml(MIXED).unwrap().system;
    let epr = build_scene(&sys, &SceneOptions { mode: SceneMode::Epr, ..Default::default() });
    assert_eq!(epr.electrons.len(), 2);
    assert!(epr.electrons.iter().all(|e| e.position.y < 0.0));
    let hfc = epr.ellipsoids.iter().find(|e| e.interaction == 3).unwrap();
    assert_eq!(hfc.center, sys.spin(1).unwrap().coordinates.unwrap());
    assert_eq!(epr.coils.len(), 1);
    assert_eq!(epr.coils[0].value, 150.0);
}

#[test]
fn writer_output_is_stable() {
    let sys = formaldehyde();
    let text = write_spinxml(&sys, WriteStyle::Preserve).unwrap();
    assert!(text.contains(r#"<interaction id="4" kind="jcoupling" units="Hz" spin_1="1" spin_2="2">"#), "{text}");
    assert!(text.contains(r#"<span_skew iso="-25.31" span="214.7" skew="0.135"/>"#), "{text}");
    let normalized = write_spinxml(&sys, WriteStyle::Normalize).unwrap();
    assert!(!normalized.contains("span_skew"));
    assert_eq!(normalized.matches("<tensor").count(), 3);
}

#[test]
fn gaussian_uses_last_blocks() {
    let sys = import_gaussian_log(GAUSSIAN, &ImportOptions::default()).unwrap().system;
    let isotopes: Vec<&str> = sys.spins.iter().map(|s| s.isotope.as_str()).collect();
    assert_eq!(isotopes, ["1H", "1H", "13C", "17O"]);
    let shieldings: Vec<_> = sys.interactions.iter().filter(|t| t.kind == InteractionKind::Shielding).collect();
    assert_eq!(shieldings.len(), 4);
    let AmplitudeSpec::Matrix(h1) = shieldings[0].amplitude else { panic!() };
    assert_eq!(h1[(0, 1)], -0.76);
    assert_eq!(h1[(1, 0)], -0.70);
    // the decoy block before the real one is all 99s
    assert!(shieldings.iter().all(|t| promote_amplitude(t).unwrap()[(0, 0)] != 99.0));
    assert!(shieldings[0].label.as_deref().unwrap().starts_with("gaussian shielding, line "));
    let j: Vec<(i64, i64)> = sys
        .interactions
        .iter()
        .filter(|t| t.kind == InteractionKind::Jcoupling)
        .map(|t| (t.spin_1, t.spin_2.unwrap()))
        .collect();
    assert_eq!(j, [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
    let ids: Vec<i64> = sys.interactions.iter().map(|t| t.id).collect();
    assert_eq!(ids, (1..=10).collect::<Vec<_>>());
}

#[test]
fn gaussian_threshold_applies_to_every_kind() {
    let sys = import_gaussian_log(GAUSSIAN, &ImportOptions::with_threshold(60.0)).unwrap().system;
    // shieldings here are about 40 ppm in norm and fall below the threshold too
    assert!(sys.interactions.iter().all(|t| promote_amplitude(t).unwrap().frobenius_norm() >= 60.0));
    assert!(sys.interactions.iter().any(|t| t.kind == InteractionKind::Jcoupling));
}

#[test]
fn magres_dialects_agree() {
    let new = import_magres(MAGRES).unwrap();
    let old = import_magres(MAGRES_OLD).unwrap();
    let shield = |s: &SpinSystem| -> Vec<Matrix3d> {
        s.interactions
            .iter()
            .filter(|t| t.kind == InteractionKind::Shielding)
            .map(|t| promote_amplitude(t).unwrap())
            .collect()
    };
    assert_eq!(shield(&new.system), shield(&old.system));
    assert_eq!(new.system.spins, old.system.spins);
    assert!(new.warnings.iter().any(|w| w.message.contains("efg")));
    let j = new.system.interactions.iter().find(|t| t.kind == InteractionKind::Jcoupling).unwrap();
    let AmplitudeSpec::Scalar(v) = j.amplitude else { panic!() };
    assert!((v - 138.97).abs() < 0.05, "{v}");
}

#[test]
fn magres_rejects_other_text() {
    assert!(matches!(import_magres("hello\nworld\n"), Err(ImportError::Dialect)));
}

#[test]
fn xyz_import() {
    let report = import_xyz(XYZ).unwrap();
    let isotopes: Vec<&str> = report.system.spins.iter().map(|s| s.isotope.as_str()).collect();
    assert_eq!(isotopes, ["1H", "1H", "12C", "16O"]);
    assert!(report.system.interactions.is_empty());
    assert!(!report.warnings.is_empty());
    assert!(matches!(import_xyz("2\n\nH 0 0 0\nH 1 0 0\nH 2 0 0\n"), Err(ImportError::CountMismatch { declared: 2, found: 3 })));
}

#[test]
fn formaldehyde_exports() {
    let sys = formaldehyde();
    let simpson = export_simpson(&sys, &ExportOptions::default()).unwrap();
    assert!(simpson.text.contains("  jcoupling 1 2 29.13 0 0 0 0 0\n"));
    assert!(simpson.text.contains("  jcoupling 1 3 256.9 0 0 0 0 0\n"));
    assert_eq!(simpson.text.matches("  shift ").count(), 3);
    assert!(simpson.warnings.iter().any(|w| w.contains("shielding")));

    let easyspin = export_easyspin(&sys, EasySpinRegime::Solid).unwrap();
    assert!(easyspin.text.contains("Sys.Nucs = '1H,1H,13C';"));
    assert!(!easyspin.text.contains("Sys.S"));
    assert!(easyspin.warnings.iter().any(|w| w.contains("no electron")));

    let spinach = export_spinach(&sys).unwrap();
    assert!(spinach.text.contains("sys.isotopes = {'1H', '1H', '13C', '16O'};"));
    assert!(spinach.text.contains("sys.labels = {'Proton A', 'Proton B', 'Carbon', 'Oxygen'};"));
    assert!(spinach.text.contains("inter.coupling.scalar{1, 2} = 29.13;"));
    assert_eq!(spinach.text.matches("inter.zeeman.matrix{").count(), 3);
}

#[test]
fn mixed_exports() {
    let sys = parse_spinxml(MIXED).unwrap().system;
    assert!(matches!(export_simpson(&sys, &ExportOptions::default()), Err(ExportError::Unsupported { .. })));
    let solid = export_easyspin(&sys, EasySpinRegime::Solid).unwrap();
    assert!(solid.text.contains("Sys.S = [0.5 0.5];"), "{}", solid.text);
    assert!(solid.text.contains("Sys.Nucs = '14N,1H';"));
    assert!(solid.text.contains("Sys.J = [150];"));
    assert!(solid.text.contains("Sys.A = ["));
    assert!(solid.text.contains("Sys.Q = ["));
    assert!(solid.text.contains("Sys.D = ["));
    let liquid = export_easyspin(&sys, EasySpinRegime::Liquid).unwrap();
    assert!(liquid.text.contains("Sys.A = [43 0; 0 -2.5];"), "{}", liquid.text);
    assert!(!liquid.text.contains("Sys.Q"));
    assert!(liquid.warnings.iter().any(|w| w.contains("anisotropic")));
    let spinach = export_spinach(&sys).unwrap();
    assert!(spinach.text.contains("sys.isotopes = {'14N', '1H', '16O', 'E', 'E'};"));
    assert!(spinach.text.contains("inter.coupling.scalar{4, 5} = 150000000;"));
    assert!(spinach.warnings.iter().any(|w| w.contains("spinrotation")));
}
