//! Analog beamsteering for mmWave hybrid beamforming.
//!
//! The crate is organised bottom-up:
//!
//! - [`array_channel`]: ULA steering vectors, geometric multipath channel draws
//!   and the link budget tying SNR, noise power and path loss together.
//! - [`beamforming`]: SVD digital reference, analog beamsteerers (exact and
//!   codebook-quantized), effective channels and Dirichlet-kernel gains.
//! - [`rate_engine`]: per-realization achievable rates, condition numbers and
//!   deterministic Monte Carlo expectations.
//! - [`closed_form`]: exponential integral, rate-loss prediction for finite
//!   codebooks and the minimal codebook-size rule.
//! - [`experiments`]: configuration parsing, figure presets and CSV/JSON
//!   result tables used by the `beamsteer` CLI.
//!
//! All array math is carried in normalized spatial frequency
//! `psi = 2*pi*(d/lambda)*sin(angle)`, the phase increment per element.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array_channel;
pub mod beamforming;
pub mod closed_form;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rate_engine;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
