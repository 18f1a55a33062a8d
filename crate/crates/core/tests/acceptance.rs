//! Acceptance suite. Runs every criterion, prints one line each and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinxml::amplitudes::{
    axrh_from_eigens, eigens_from_axrh, eigens_from_haeberlen, eigens_from_matrix, eigens_from_spanskew,
    haeberlen_from_eigens, haeberlen_order, matrix_from_spherical, spanskew_from_eigens, spherical_from_matrix,
    EigenOrdering, SpanSkewKind,
};
use spinxml::exporters::{export_easyspin, export_simpson, export_spinach, EasySpinRegime, ExportOptions};
use spinxml::geometry::{build_scene, dipolar_tensor, SceneMode, SceneOptions};
use spinxml::importers::{import_gaussian_log, ImportOptions};
use spinxml::model::{promote_amplitude, EigenvalueSpec};
use spinxml::rotations::{from_dcm, to_dcm, wigner_d2, Convention, Rotation};
use spinxml::spinxml_io::{parse_spinxml, write_spinxml, WriteStyle};
use spinxml::{AmplitudeSpec, InteractionKind, Matrix3d, Spin, SpinSystem, Vector3d};

const FORMALDEHYDE: &str = include_str!("fixtures/formaldehyde.xml");
const CORPUS: &str = include_str!("fixtures/corpus.xml");
const MIXED: &str = include_str!("fixtures/mixed.xml");
const GAUSSIAN: &str = include_str!("fixtures/formaldehyde_gaussian.log");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_5a11)
}

/// Uniform random rotation from a normalized Gaussian quaternion, built with
/// the textbook quaternion-to-matrix formula.
fn random_dcm(rng: &mut impl Rng) -> Matrix3d {
    let q: [f64; 4] = loop {
        let v = [0; 4].map(|_| gaussian(rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            break v.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    Matrix3d::new([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn random_matrix(rng: &mut impl Rng, scale: f64) -> Matrix3d {
    Matrix3d::from_fn(|_, _| rng.gen_range(-scale..scale))
}

/// Three values in `[-100, 100]` with pairwise gaps of at least 1.
fn random_eigenvalues(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let l: [f64; 3] = [0; 3].map(|_| rng.gen_range(-100.0..100.0));
        if (l[0] - l[1]).abs() > 1.0 && (l[1] - l[2]).abs() > 1.0 && (l[0] - l[2]).abs() > 1.0 {
            return l;
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn sorted(mut a: [f64; 3]) -> [f64; 3] {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a
}

fn formaldehyde_fixture() -> Outcome {
    let sys = parse_spinxml(FORMALDEHYDE).map_err(|e| e.to_string())?.system;
    check(sys.spins.len() == 4, || format!("{} spins", sys.spins.len()))?;
    check(sys.interactions.len() == 6, || format!("{} interactions", sys.interactions.len()))?;
    let carbon = sys
        .interactions
        .iter()
        .find(|t| t.kind == InteractionKind::Shielding && t.spin_1 == 3)
        .ok_or("no shielding on spin 3")?;
    match carbon.amplitude {
        AmplitudeSpec::EigensPlusRotation {
            values: EigenvalueSpec::IsoSpanSkew { iso, span, skew },
            ..
        } => check((iso, span, skew) == (-25.31, 214.70, 0.135), || format!("span_skew ({iso}, {span}, {skew})"))?,
        other => return Err(format!("spin 3 amplitude {other:?}")),
    }
    let j: Vec<f64> = sys
        .interactions
        .iter()
        .filter(|t| t.kind == InteractionKind::Jcoupling)
        .map(|t| match (t.units.as_str(), t.amplitude) {
            ("Hz", AmplitudeSpec::Scalar(v)) => v,
            _ => f64::NAN,
        })
        .collect();
    check(j == [29.13, 256.9, 256.9], || format!("J values {j:?}"))?;
    check(sys.spin(4).map(|s| s.isotope.as_str()) == Some("16O"), || "oxygen isotope".into())?;
    Ok("4 spins, 6 interactions, span_skew and J values exact, 16O kept".into())
}

fn spanskew_inversion() -> Outcome {
    let (iso, span, skew) = (-25.31, 214.70, 0.135);
    let l = eigens_from_spanskew(iso, span, skew, SpanSkewKind::Shielding).map_err(|e| e.to_string())?;
    // forward map, shielding convention: σ11 ≤ σ22 ≤ σ33, Ω = σ33 − σ11, κ = 3(σiso − σ22)/Ω
    let s = sorted(l);
    let f_iso = (s[0] + s[1] + s[2]) / 3.0;
    let f_span = s[2] - s[0];
    let f_skew = 3.0 * (f_iso - s[1]) / f_span;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let worst = rel(f_iso, iso).max(rel(f_span, span)).max(rel(f_skew, skew));
    check(worst <= 1e-10, || format!("forward map relative error {worst:e}"))?;
    let expected = [-127.82925, -34.9715, 86.87075];
    check(max_diff(&s, &expected) < 1e-9, || format!("eigenvalues {s:?}"))?;
    let lib = spanskew_from_eigens(l, SpanSkewKind::Shielding).map_err(|e| e.to_string())?;
    check(rel(lib.skew, skew) <= 1e-10, || format!("library forward skew {}", lib.skew))?;
    Ok(format!("eigenvalues {s:?}, forward relative error {worst:.1e}"))
}

fn rotation_round_trips() -> Outcome {
    let mut rng = rng();
    let mut worst = 0.0f64;
    for n in 0..10_000 {
        let d = random_dcm(&mut rng);
        for &src in &Convention::ALL {
            let r = from_dcm(&d, src).map_err(|e| e.to_string())?;
            for &dst in &Convention::ALL {
                let c = r.convert(dst).map_err(|e| e.to_string())?;
                if let Rotation::Quaternion { w, .. } = c {
                    check(w >= 0.0, || format!("sample {n}: quaternion w = {w}"))?;
                }
                let back = to_dcm(&c).map_err(|e| e.to_string())?;
                worst = worst.max(back.max_abs_diff(&d));
            }
        }
    }
    check(worst <= 1e-9, || format!("max DCM deviation {worst:e}"))?;
    Ok(format!("10000 rotations x 16 ordered pairs, max deviation {worst:.1e}"))
}

fn wigner_equivariance() -> Outcome {
    let mut rng = rng();
    let (mut worst, mut unitarity) = (0.0f64, 0.0f64);
    for _ in 0..1_000 {
        let d = random_dcm(&mut rng);
        let m = random_matrix(&mut rng, 100.0);
        let w = wigner_d2(&Rotation::Dcm(d)).map_err(|e| e.to_string())?;
        unitarity = unitarity.max(w.unitarity_error());
        let rotated = spherical_from_matrix(&m.similarity(&d)).rank2;
        let predicted = w.rotate_rank2(&spherical_from_matrix(&m).rank2);
        let err = rotated
            .iter()
            .zip(&predicted)
            .map(|(a, b): (&Complex<f64>, &Complex<f64>)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err / m.frobenius_norm().max(1.0));
    }
    check(worst <= 1e-9, || format!("equivariance error {worst:e}"))?;
    check(unitarity <= 1e-9, || format!("unitarity error {unitarity:e}"))?;
    Ok(format!("1000 pairs, equivariance {worst:.1e}, unitarity {unitarity:.1e}"))
}

fn convention_round_trips() -> Outcome {
    let mut rng = rng();
    let tol = 1e-12;
    let mut worst = [0.0f64; 5];
    for _ in 0..10_000 {
        let l = random_eigenvalues(&mut rng);
        let scale = max_abs(&l);

        let h = haeberlen_from_eigens(l).map_err(|e| e.to_string())?;
        let back = eigens_from_haeberlen(h.iso, h.aniso, h.asym).map_err(|e| e.to_string())?;
        worst[0] = worst[0].max(max_diff(&back, &haeberlen_order(l)) / scale);

        let a = axrh_from_eigens(l);
        let back = eigens_from_axrh(a.iso, a.ax, a.rh).map_err(|e| e.to_string())?;
        worst[1] = worst[1].max(max_diff(&back, &haeberlen_order(l)) / scale);

        for kind in [SpanSkewKind::Shielding, SpanSkewKind::Shift] {
            let s = spanskew_from_eigens(l, kind).map_err(|e| e.to_string())?;
            let back = eigens_from_spanskew(s.iso, s.span, s.skew, kind).map_err(|e| e.to_string())?;
            worst[2] = worst[2].max(max_diff(&sorted(back), &sorted(l)) / scale);
        }

        let m = random_matrix(&mut rng, 100.0);
        let back = matrix_from_spherical(&spherical_from_matrix(&m)).map_err(|e| e.to_string())?;
        worst[3] = worst[3].max(back.max_abs_diff(&m) / m.max_abs());

        let d = random_dcm(&mut rng);
        let m = Matrix3d::diag(l).similarity(&d);
        let e = eigens_from_matrix(&m, EigenOrdering::Ascending);
        worst[4] = worst[4]
            .max(e.to_matrix().max_abs_diff(&m) / m.max_abs())
            .max(max_diff(&e.eigenvalues, &sorted(l)) / scale);
    }
    let names = ["haeberlen", "axrh", "spanskew", "spherical", "eigens<->matrix"];
    for (name, w) in names.iter().zip(worst) {
        check(w <= tol, || format!("{name} relative error {w:e}"))?;
    }
    Ok(format!(
        "10000 inputs each, max relative error {:.1e}",
        worst.iter().copied().fold(0.0, f64::max)
    ))
}

fn dipolar_physics() -> Outcome {
    let a = Spin::new(1, "1H").at(0.0, 0.0, 0.0);
    let b = Spin::new(2, "1H").at(0.0, 0.0, 2.0);
    let d = dipolar_tensor(&a, &b).map_err(|e| e.to_string())?;
    // (μ0/4π) γ² ħ / (2π r³), γ(1H) = 2.675221900e8 rad/s/T, r = 2 Å
    let hand = 1e-7 * 2.675_221_900e8_f64.powi(2) * 1.054_571_817e-34 / (2.0 * PI * 8e-30);
    let coupling = -d[(2, 2)] / 2.0;
    let dev = (coupling.abs() - hand).abs() / hand;
    check(dev <= 0.005, || format!("|b| = {} Hz vs {hand} Hz", coupling.abs()))?;
    check((coupling.abs() / 1e3 - 15.0).abs() <= 0.075, || format!("|b| = {} kHz", coupling.abs() / 1e3))?;
    let norm = d.frobenius_norm();
    let trace = d.trace().abs();
    let asym = d.antisymmetric_part().max_abs();
    check(trace <= 1e-10 * norm, || format!("trace {trace:e}"))?;
    check(asym <= 1e-10 * norm, || format!("antisymmetric part {asym:e}"))?;
    let e = eigens_from_matrix(&d, EigenOrdering::Ascending).eigenvalues;
    let axial = (e[1] - e[2]).abs().min((e[0] - e[1]).abs());
    check(axial <= 1e-10 * norm, || format!("eigenvalues {e:?} not axial"))?;
    let mut worst = 0.0f64;
    for k in [0.5, 1.5, 3.0, 7.0] {
        let far = dipolar_tensor(&a, &Spin::new(2, "1H").at(0.0, 0.0, 2.0 * k)).map_err(|e| e.to_string())?;
        worst = worst.max((far[(2, 2)] * k * k * k - d[(2, 2)]).abs() / d[(2, 2)].abs());
    }
    check(worst <= 1e-12, || format!("1/r^3 scaling error {worst:e}"))?;
    Ok(format!(
        "|b| = {:.4} kHz ({:.3}% from hand value), trace/symmetry/axiality within 1e-10, scaling {worst:.1e}",
        coupling.abs() / 1e3,
        dev * 100.0
    ))
}

fn ulp_distance(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    let key = |x: f64| {
        let i = x.to_bits() as i64;
        if i < 0 {
            i64::MIN - i
        } else {
            i
        }
    };
    key(a).abs_diff(key(b))
}

fn numbers(sys: &SpinSystem) -> Vec<f64> {
    let v = serde_json::to_value(sys).expect("serializable");
    let mut out = Vec::new();
    fn walk(v: &serde_json::Value, out: &mut Vec<f64>) {
        match v {
            serde_json::Value::Number(n) => out.push(n.as_f64().unwrap_or(f64::NAN)),
            serde_json::Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            serde_json::Value::Object(o) => o.values().for_each(|x| walk(x, out)),
            _ => {}
        }
    }
    walk(&v, &mut out);
    out
}

fn spinxml_round_trip() -> Outcome {
    let mut drift = 0u64;
    for (name, text) in [("corpus", CORPUS), ("formaldehyde", FORMALDEHYDE), ("mixed", MIXED)] {
        let first = parse_spinxml(text).map_err(|e| format!("{name}: {e}"))?.system;
        let written = write_spinxml(&first, WriteStyle::Preserve).map_err(|e| e.to_string())?;
        let second = parse_spinxml(&written).map_err(|e| format!("{name} reparse: {e}"))?.system;
        let rewritten = write_spinxml(&second, WriteStyle::Preserve).map_err(|e| e.to_string())?;
        check(written == rewritten, || format!("{name}: writer is not a fixpoint"))?;
        let (a, b) = (numbers(&first), numbers(&second));
        check(a.len() == b.len(), || format!("{name}: structure changed"))?;
        drift = drift.max(a.iter().zip(&b).map(|(x, y)| ulp_distance(*x, *y)).max().unwrap_or(0));
    }
    let corpus = parse_spinxml(CORPUS).map_err(|e| e.to_string())?.system;
    let mut seen = std::collections::BTreeSet::new();
    for t in &corpus.interactions {
        let tag = match &t.amplitude {
            AmplitudeSpec::Scalar(_) => "scalar".to_string(),
            AmplitudeSpec::Matrix(_) => "tensor".to_string(),
            AmplitudeSpec::EigensPlusRotation { values, rotation } => {
                let v = match values {
                    EigenvalueSpec::Explicit { .. } => "eigenvalues",
                    EigenvalueSpec::IsoAnisoAsym { .. } => "aniso_asym",
                    EigenvalueSpec::IsoAxRh { .. } => "ax_rh",
                    EigenvalueSpec::IsoSpanSkew { .. } => "span_skew",
                };
                seen.insert(v.to_string());
                match rotation {
                    Some(r) => format!("{:?}", r.convention()),
                    None => "no rotation".into(),
                }
            }
        };
        seen.insert(tag);
    }
    check(seen.len() >= 10, || format!("corpus covers only {seen:?}"))?;
    check(drift <= 1, || format!("numeric drift {drift} ULP"))?;
    Ok(format!("3 documents, {} variants, drift {drift} ULP", seen.len()))
}

fn import_rules() -> Outcome {
    let all = import_gaussian_log(GAUSSIAN, &ImportOptions::default()).map_err(|e| e.to_string())?.system;
    let expected = [
        [0.937, 0.0, 0.0],
        [-0.937, 0.0, 0.0],
        [0.0, -0.526, 0.0],
        [0.0, 0.673, 0.0],
    ];
    let coords: Vec<[f64; 3]> = all.spins.iter().map(|s| s.coordinates.map_or([f64::NAN; 3], Vector3d::to_array)).collect();
    check(coords == expected, || format!("coordinates {coords:?}"))?;
    let small = all
        .interactions
        .iter()
        .find(|t| t.kind == InteractionKind::Jcoupling && t.spin_1 == 1 && t.spin_2 == Some(2))
        .ok_or("no H-H coupling before filtering")?;
    let norm = promote_amplitude(small).map_err(|e| e.to_string())?.frobenius_norm();
    check((norm - 50.45).abs() < 0.005, || format!("norm of H-H coupling {norm}"))?;

    let kept = import_gaussian_log(GAUSSIAN, &ImportOptions::with_threshold(60.0)).map_err(|e| e.to_string())?.system;
    let j: Vec<(i64, Option<i64>, f64)> = kept
        .interactions
        .iter()
        .filter(|t| t.kind == InteractionKind::Jcoupling)
        .map(|t| (t.spin_1, t.spin_2, promote_amplitude(t).map_or(f64::NAN, |m| m.trace() / 3.0)))
        .collect();
    check(!j.iter().any(|(_, _, v)| (*v - 29.13).abs() < 1e-9), || "29.13 Hz coupling survived".into())?;
    let big = j.iter().filter(|(_, _, v)| (*v - 256.9).abs() < 1e-9).count();
    check(big == 2, || format!("256.9 Hz couplings kept: {big}"))?;
    Ok(format!("last orientation table used; threshold 60 Hz drops norm {norm:.2} and keeps 2 x 256.9 Hz"))
}

fn exporter_grammar() -> Outcome {
    let sys = parse_spinxml(FORMALDEHYDE).map_err(|e| e.to_string())?.system;
    let opts = ExportOptions::default();
    let out = export_simpson(&sys, &opts).map_err(|e| e.to_string())?;
    let text = &out.text;
    check(text.matches("spinsys {").count() == 1, || "spinsys block count".into())?;
    let mut depth = 0i32;
    for c in text.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            _ => {}
        }
        check(depth >= 0, || "unbalanced braces".into())?;
    }
    check(depth == 0, || "unclosed block".into())?;
    let body: Vec<&str> = text
        .split_once("spinsys {")
        .map(|(_, b)| b)
        .unwrap_or("")
        .lines()
        .map(str::trim)
        .collect();
    let magnetic: Vec<&str> = sys.spins.iter().filter(|s| s.isotope != "16O").map(|s| s.isotope.as_str()).collect();
    let nuclei = format!("nuclei {}", magnetic.join(" "));
    check(body.contains(&nuclei.as_str()), || format!("missing `{nuclei}`"))?;
    check(body.contains(&"channels 1H 13C"), || "missing channels 1H 13C".into())?;
    check(export_simpson(&sys, &opts).map_err(|e| e.to_string())?.text == *text, || "SIMPSON not deterministic".into())?;
    let es = export_easyspin(&sys, EasySpinRegime::Solid).map_err(|e| e.to_string())?.text;
    check(export_easyspin(&sys, EasySpinRegime::Solid).map_err(|e| e.to_string())?.text == es, || {
        "EasySpin not deterministic".into()
    })?;
    let sp = export_spinach(&sys).map_err(|e| e.to_string())?.text;
    check(export_spinach(&sys).map_err(|e| e.to_string())?.text == sp, || "Spinach not deterministic".into())?;
    Ok(format!("one balanced block, `{nuclei}`, byte-identical reruns"))
}

fn scene_partition() -> Outcome {
    let sys = parse_spinxml(MIXED).map_err(|e| e.to_string())?.system;
    let scene = |mode| {
        build_scene(
            &sys,
            &SceneOptions {
                mode,
                ..Default::default()
            },
        )
    };
    let (nmr, epr) = (scene(SceneMode::Nmr), scene(SceneMode::Epr));
    check(nmr.skipped.is_empty() && epr.skipped.is_empty(), || "glyphs skipped".into())?;
    let (a, b) = (nmr.glyph_interactions(), epr.glyph_interactions());
    check(a.iter().all(|id| !b.contains(id)), || format!("NMR {a:?} and EPR {b:?} overlap"))?;
    let mut union: Vec<i64> = a.iter().chain(&b).copied().collect();
    union.sort_unstable();
    let mut visual: Vec<i64> = sys
        .interactions
        .iter()
        .filter(|t| !matches!(t.kind, InteractionKind::Dipolar | InteractionKind::Spinrotation))
        .map(|t| t.id)
        .collect();
    visual.sort_unstable();
    check(union == visual, || format!("union {union:?} vs visualizable {visual:?}"))?;
    for id in &a {
        let kind = sys.interaction(*id).map(|t| t.kind);
        check(
            matches!(
                kind,
                Some(InteractionKind::Shielding | InteractionKind::Shift | InteractionKind::Jcoupling | InteractionKind::Quadrupolar)
            ),
            || format!("NMR scene draws {kind:?}"),
        )?;
    }
    Ok(format!("NMR {} glyphs, EPR {} glyphs, {} visualizable terms", a.len(), b.len(), visual.len()))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("formaldehyde fixture", Duration::from_secs(1), formaldehyde_fixture),
        ("span/skew inversion", Duration::from_secs(1), spanskew_inversion),
        ("rotation round trips", Duration::from_secs(10), rotation_round_trips),
        ("wigner equivariance", Duration::from_secs(10), wigner_equivariance),
        ("convention round trips", Duration::from_secs(30), convention_round_trips),
        ("dipolar physics", Duration::from_secs(1), dipolar_physics),
        ("spinxml round trip", Duration::from_secs(5), spinxml_round_trip),
        ("import rules", Duration::from_secs(1), import_rules),
        ("exporter grammar", Duration::from_secs(1), exporter_grammar),
        ("scene partition", Duration::from_secs(1), scene_partition),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; took {took:?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} ({:.3} s): {detail}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.3} s): {why}", took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", 10 - failed, 10);
    if failed > 0 {
        std::process::exit(1);
    }
}
