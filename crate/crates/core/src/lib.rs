//! Branching Brownian motion with singular (measure-valued) branching rates.
//!
//! The toolkit covers four layers:
//!
//! * [`model`] — branching-rate measures (point atoms in 1-D, spherical
//!   shells in higher dimensions), site-indexed offspring distributions,
//!   and scenario configuration.
//! * [`eigen`] — the principal eigenvalue of the Schrödinger-type operator
//!   `-Δ/2 - ν` driving population growth, its ground state, and the growth
//!   rate profile, with an independent finite-difference oracle.
//! * [`samplers`] / [`engine`] — exact and time-stepped simulation of the
//!   particle system, plus the derived population observables.
//! * [`fk`] / [`experiments`] — Monte Carlo Feynman-Kac estimators,
//!   extinction fixed points, and scenario-driven experiment suites with
//!   pass/fail verdicts.

pub mod eigen;
pub mod engine;
pub mod experiments;
pub mod fk;
pub mod model;
pub mod numeric;
pub mod samplers;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),
    #[error("measure has {measure} support points but mechanism has {mechanism} pmfs")]
    IndexMismatch { measure: usize, mechanism: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid halfwidth {halfwidth} does not cover the measure support (max extent {extent})")]
    GridTooSmall { halfwidth: f64, extent: f64 },
    #[error("root bracketing failed: {0}")]
    NoBracket(String),
    #[error("unsupported model shape for this backend: {0}")]
    UnsupportedModel(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
