//! Randomized benchmarking under gate-dependent Markovian noise.
//!
//! * [`chanalg`]: transfer-matrix algebra of channels and the norms used by the bounds.
//! * [`groups`]: unitary 2-design gate groups as multiplication tables.
//! * [`noise`]: gate-dependent noise models producing a [`noise::GateSet`].
//! * [`decomp`]: the `(p, t, L, R)` eigen-decomposition of the average noise,
//!   gauge transformations and the perturbation bounds.
//! * [`rbsim`]: sequence sampling, Monte Carlo and exact averages, theory curves.
//! * [`analysis`]: decay fitting, confidence intervals and first-order analytics.

pub mod analysis;
pub mod chanalg;
pub mod decomp;
pub mod error;
pub mod groups;
pub mod noise;
pub mod rbsim;
pub mod rng;

pub use error::{Error, ErrorClass, Result};
