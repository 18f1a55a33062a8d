#![allow(dead_code)]

use proptest::prelude::*;

use spinxml::model::EigenvalueSpec;
use spinxml::rotations::Rotation;
use spinxml::{AmplitudeSpec, InteractionKind, InteractionTerm, Matrix3d, Spin, SpinSystem, Vector3d};

pub fn quaternion_dcm(q: [f64; 4]) -> Matrix3d {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    Matrix3d::new([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

pub fn dcm() -> impl Strategy<Value = Matrix3d> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("quaternion too short", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(quaternion_dcm)
}

pub fn matrix(scale: f64) -> impl Strategy<Value = Matrix3d> {
    prop::array::uniform9(-scale..scale).prop_map(Matrix3d::from_row_major)
}

pub fn eigenvalues() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-100.0f64..100.0).prop_filter("near-degenerate", |l| {
        (l[0] - l[1]).abs() > 1e-3 && (l[1] - l[2]).abs() > 1e-3 && (l[0] - l[2]).abs() > 1e-3
    })
}

pub fn rotation() -> impl Strategy<Value = Rotation<f64>> {
    prop_oneof![
        (0.0f64..360.0, 0.0f64..180.0, 0.0f64..360.0)
            .prop_map(|(alpha, beta, gamma)| Rotation::EulerAngles { alpha, beta, gamma }),
        (0.0f64..180.0, prop::array::uniform3(-1.0f64..1.0))
            .prop_filter("short axis", |(_, a)| a.iter().map(|x| x * x).sum::<f64>() > 1e-2)
            .prop_map(|(angle, a)| {
                let v = Vector3d::from_array(a);
                Rotation::AngleAxis { angle, axis: v.scale(1.0 / v.norm()) }
            }),
        dcm().prop_map(|d| {
            let [w, x, y, z] = spinxml::rotations::quaternion_from_dcm(&d);
            Rotation::Quaternion { w, x, y, z }
        }),
        dcm().prop_map(Rotation::Dcm),
    ]
}

pub fn eigenvalue_spec() -> impl Strategy<Value = EigenvalueSpec> {
    prop_oneof![
        prop::array::uniform3(-100.0f64..100.0).prop_map(|[xx, yy, zz]| EigenvalueSpec::Explicit { xx, yy, zz }),
        (-100.0f64..100.0, -100.0f64..100.0, 0.0f64..1.0)
            .prop_map(|(iso, aniso, asym)| EigenvalueSpec::IsoAnisoAsym { iso, aniso, asym }),
        (-100.0f64..100.0, -100.0f64..100.0, -50.0f64..50.0)
            .prop_map(|(iso, ax, rh)| EigenvalueSpec::IsoAxRh { iso, ax, rh }),
        (-100.0f64..100.0, 0.0f64..200.0, -1.0f64..1.0)
            .prop_map(|(iso, span, skew)| EigenvalueSpec::IsoSpanSkew { iso, span, skew }),
    ]
}

pub fn amplitude() -> impl Strategy<Value = AmplitudeSpec> {
    prop_oneof![
        (-500.0f64..500.0).prop_map(AmplitudeSpec::Scalar),
        matrix(100.0).prop_map(AmplitudeSpec::Matrix),
        (eigenvalue_spec(), prop::option::of(rotation()))
            .prop_map(|(values, rotation)| AmplitudeSpec::EigensPlusRotation { values, rotation }),
    ]
}

const ISOTOPES: [&str; 6] = ["1H", "13C", "15N", "16O", "17O", "E"];

/// Spin systems with every nucleus placed, electrons unplaced.
pub fn spin_system() -> impl Strategy<Value = SpinSystem> {
    let spins = prop::collection::vec((0usize..ISOTOPES.len(), prop::array::uniform3(-5.0f64..5.0)), 2..6);
    spins.prop_flat_map(|raw| {
        let spins: Vec<Spin> = raw
            .iter()
            .enumerate()
            .map(|(i, (iso, c))| {
                let s = Spin::new(i as i64 + 1, ISOTOPES[*iso]);
                if s.is_electron() {
                    s
                } else {
                    s.at(c[0], c[1], c[2])
                }
            })
            .collect();
        let n = spins.len() as i64;
        let term = (0usize..InteractionKind::ALL.len(), 1..=n, 1..=n, amplitude());
        (Just(spins), prop::collection::vec(term, 0..8))
    })
    .prop_map(|(spins, raw)| {
        let n = spins.len() as i64;
        let interactions = raw
            .into_iter()
            .enumerate()
            .map(|(i, (k, a, b, amp))| {
                let kind = InteractionKind::ALL[k];
                let spin_2 = kind.is_binary().then(|| if a == b { a % n + 1 } else { b });
                InteractionTerm::new(i as i64 + 1, kind, a, spin_2, amp)
            })
            .collect();
        SpinSystem { spins, interactions }
    })
}

pub fn rel_diff(a: &Matrix3d, b: &Matrix3d) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(1e-300)
}
