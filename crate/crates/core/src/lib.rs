//! Transceiver design and Monte Carlo BER simulation for block-by-block
//! communication with intra-block decision-feedback detection.
//!
//! The crate provides:
//! - complex dense-matrix decompositions with deterministic conventions
//!   ([`linalg`]),
//! - the equal-diagonal QR rotation ([`equal_diag`]),
//! - FIR / circulant / Rayleigh MIMO channel models ([`channel`]),
//! - jointly optimal ZF- and MMSE-BDFD transceivers, receiver synthesis for
//!   arbitrary precoders and the standard baselines ([`transceiver`]),
//! - a QAM modem and the sequential decision-feedback detector
//!   ([`detection`]),
//! - closed-form MSE/SINR/BER/mutual-information analysis ([`analysis`]),
//! - a reproducible seeded Monte Carlo engine with scenario presets, file
//!   formats and CSV reporting ([`sim`]).

pub mod analysis;
pub mod channel;
pub mod detection;
pub mod equal_diag;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sim;
pub mod transceiver;

pub use error::{Error, Result};
pub use linalg::CMatrix;
