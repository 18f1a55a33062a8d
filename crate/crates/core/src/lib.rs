//! Spin-system model for magnetic resonance: interaction tensors in
//! interchangeable conventions, SpinXML reading and writing, importers for
//! quantum-chemistry output, exporters for simulation packages and render
//! geometry.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, with `f32` variants where useful.

pub mod amplitudes;
pub mod exporters;
pub mod geometry;
pub mod importers;
pub mod isotopes;
pub mod linalg;
pub mod model;
pub mod rotations;
pub mod scalar;
pub mod spinxml_io;

pub use linalg::{Matrix3, Vector3};
pub use model::{AmplitudeSpec, InteractionKind, InteractionTerm, Spin, SpinSystem};

pub type Matrix3d = linalg::Matrix3<f64>;
pub type Vector3d = linalg::Vector3<f64>;
pub type Rotationd = rotations::Rotation<f64>;
pub type WignerD2d = rotations::WignerD2<f64>;
pub type EigenSystemd = amplitudes::EigenSystem<f64>;
pub type SphericalComponentsd = amplitudes::SphericalComponents<f64>;
pub type RepresentationBundled = amplitudes::RepresentationBundle<f64>;

pub type Matrix3f = linalg::Matrix3<f32>;
pub type Vector3f = linalg::Vector3<f32>;
pub type Rotationf = rotations::Rotation<f32>;
pub type RepresentationBundlef = amplitudes::RepresentationBundle<f32>;
