//! Stark tuning, lineshape fitting and two-emitter planning for
//! electrically tunable solid-state emitters.
//!
//! Closed-form models ([`emitter`], [`lineshape`], [`interference`]) are
//! generic over [`Scalar`]; the aliases below fix them to `f64`. Fitting,
//! synthesis and planning work in `f64` only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod catalog;
pub mod constants;
pub mod data;
pub mod emitter;
pub mod error;
pub mod fit;
pub mod interference;
pub mod lineshape;
pub mod planner;
pub mod quadrature;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use lineshape::LineShapeKind;
pub use scalar::Scalar;

pub type StarkResponse = emitter::StarkResponse<f64>;
pub type QuenchModel = emitter::QuenchModel<f64>;
pub type NamedEmitter = emitter::NamedEmitter<f64>;
pub type CavityModel = emitter::CavityModel<f64>;
pub type IonizationParams = emitter::IonizationParams<f64>;
pub type PeakProfile = emitter::PeakProfile<f64>;
pub type EmitterPairConfig = interference::EmitterPairConfig<f64>;
pub type OverlapPoint = interference::OverlapPoint<f64>;
pub type CavityParams = lineshape::CavityParams<f64>;
pub type DoubleDecayParams = lineshape::DoubleDecayParams<f64>;
