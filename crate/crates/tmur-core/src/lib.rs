//! Trusted multi-view classification with unified evidence routing.
//!
//! This crate implements an evidential multi-view classifier end to end:
//! per-view feature alignment, private and collaborative experts emitting
//! non-negative class evidence, a routing network that weighs experts from a
//! cross-view attention context, and Dirichlet-based fusion yielding both
//! class probabilities and a calibrated uncertainty score. Everything down
//! to the reverse-mode gradients and the digamma/trigamma special functions
//! is implemented here, with deterministic seeded training.
//!
//! The main entry points are:
//!
//! - [`data`]: dataset manifests, synthetic generators, perturbations;
//! - [`model::TmurModel`]: the architecture and its serialization;
//! - [`train::run_training`]: the full split/standardize/fit pipeline;
//! - [`metrics`]: accuracy and calibration measures;
//! - [`theory`]: executable checks of the scale-bias and routing-gap
//!   properties that motivate the design.

pub mod array;
pub mod autodiff;
pub mod data;
pub mod error;
pub mod evidential;
pub mod gradcheck;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod report;
pub mod seeding;
pub mod special;
pub mod theory;
pub mod train;

pub use array::DenseArray;
pub use error::{Result, TmurError};
