//! Multi-operator DSL access simulator.
//!
//! Computes per-operator downstream rates over a shared copper binder under
//! sub-band vectoring (SBV), non-vectored sharing (NV) and single-operator
//! full vectoring, and turns rate-versus-distance into population coverage.

// `!(a < b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod coverage;
pub mod error;
pub mod ini;
pub mod linkrate;
pub mod plot;
pub mod spectrum;

pub use error::{Result, SimError};
