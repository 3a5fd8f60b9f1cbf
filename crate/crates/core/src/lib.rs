//! Verification-condition generation for parametrized concurrent programs.
//!
//! A program is written once for an arbitrary number of identical threads.
//! Candidate invariants mention thread-indexed locals such as `ticket(i)`.
//! The [`rules`] module turns a candidate into finitely many closed,
//! quantifier-free verification conditions over a small concrete instance;
//! [`solve`] discharges them with a location-only procedure first and an
//! external SMT solver second; [`oracle`] cross-checks results by bounded
//! explicit-state exploration.

pub mod cli;
pub mod engine;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod ir;
pub mod oracle;
pub mod rules;
pub mod solve;
pub mod tactics;

pub use error::{Error, Result};
