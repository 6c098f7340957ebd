//! Angle-of-arrival (AoA) physical layer authentication.
//!
//! The crate models a receiver equipped with a uniform linear array (ULA),
//! estimates the AoA of incoming pilots with MUSIC, and quantifies how well a
//! multi-antenna adversary can impersonate a legitimate transmitter by
//! precoding its own pilot:
//!
//! * [`array_model`]: array geometry, steering vectors, signal synthesis.
//! * [`music`]: sample covariance, Hermitian eigensolver, pseudospectrum.
//! * [`attack`]: closed-form impersonation MSE, optimal precoders, Monte Carlo.
//! * [`auth`]: enrollment/verification protocol and FAR/FRR evaluation.
//! * [`experiments`]: deterministic figure runs emitting CSV and SVG.

pub mod array_model;
pub mod attack;
pub mod auth;
mod error;
pub mod experiments;
pub mod linalg;
pub mod music;
pub mod rng;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
