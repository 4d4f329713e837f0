//! Contraction-inducing input design for nonlinear systems in normal form.
//!
//! The crate is organized bottom-up:
//!
//! - [`models`]: the normal-form abstraction, built-in models and the algebraic inverse `f_inv`.
//! - [`signal`]: composable input and reference signals.
//! - [`integrate`]: fixed-step RK4 and adaptive Dormand-Prince integration, limit-cycle detection.
//! - [`variational`]: state-transition matrices, Floquet spectra, Routh-Hurwitz, contraction probes.
//! - [`design`]: averaging, impulse trains, conductance certificates, describing functions, feedforward.
//! - [`observer`]: the adaptive observer without output injection.
//! - [`experiments`]: JSON-configured experiment runners used by the command line tool.
//! - [`verify`]: the acceptance checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod design;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod models;
pub mod nonlinearity;
pub mod observer;
pub mod par;
pub mod poly;
pub mod signal;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use models::NormalFormModel;
pub use signal::InputSignal;
