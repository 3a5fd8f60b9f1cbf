//! Deciding concrete verification conditions: a location-only procedure,
//! an SMT-LIB2 encoding, a solver driver and the layered pipeline.

pub mod decide;
pub mod model;
pub mod position;
pub mod runner;
pub mod sexpr;
pub mod smt;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::eval::{Valuation, Value};
use crate::ir::ConcreteVar;

pub use decide::decide;
pub use position::position_dp;
pub use runner::run_solver;
pub use smt::{emit_smt, SmtOptions, SmtScript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Invalid,
    Unknown,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dp {
    Position,
    Smt,
}

/// A model of `hypothesis ∧ ¬conclusion` over concrete variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterModel {
    pub assignments: Valuation,
}

impl CounterModel {
    pub fn get(&self, var: &str) -> Option<&Value> {
        let key: ConcreteVar = var.parse().ok()?;
        self.assignments.get(&key)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.assignments.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect();
        serde_json::Value::Object(map)
    }

    /// The unprimed part.
    pub fn pre_state(&self) -> BTreeMap<ConcreteVar, Value> {
        self.assignments.iter().filter(|(k, _)| !k.primed).map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

impl Serialize for CounterModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolverVerdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<CounterModel>,
    pub dp_used: Dp,
    pub elapsed_ms: u64,
    /// Diagnostic for unknown verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Support batches in use when the verdict was reached (lazy tactic).
    pub lazy_rounds: usize,
}

impl SolverVerdict {
    pub fn new(status: Status, dp: Dp) -> Self {
        SolverVerdict { status, model: None, dp_used: dp, elapsed_ms: 0, note: None, lazy_rounds: 0 }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub const DEFAULT_SOLVER: &str = "z3 -in";
pub const SOLVER_ENV: &str = "PINV_SOLVER";

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Executable followed by its arguments; the script is fed on stdin.
    pub command: Vec<String>,
    pub timeout: Duration,
    pub quantified_min: bool,
}

impl SolverConfig {
    pub fn from_command(cmd: &str) -> Self {
        SolverConfig {
            command: cmd.split_whitespace().map(String::from).collect(),
            timeout: Duration::from_secs(1800),
            quantified_min: false,
        }
    }

    /// `PINV_SOLVER` if set, else the default command.
    pub fn from_env() -> Self {
        let cmd = std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty());
        Self::from_command(cmd.as_deref().unwrap_or(DEFAULT_SOLVER))
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::from_env()
    }
}
