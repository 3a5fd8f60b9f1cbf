#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use pinv_core::frontend::{load_graph, load_program, load_spec, ProofGraph, SpecFile};
use pinv_core::ir::ParamProgram;
use pinv_core::solve::runner::{run_solver, RawOutcome};
use pinv_core::solve::SolverConfig;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub struct Protocol {
    pub program: ParamProgram,
    pub spec: SpecFile,
    pub graph: ProofGraph,
}

pub fn protocol(stem: &str) -> Protocol {
    let program = load_program(&corpus(&format!("{stem}.prg"))).unwrap();
    let spec = load_spec(&corpus(&format!("{stem}.inv")), &program).unwrap();
    let graph = load_graph(&corpus(&format!("{stem}.graph"))).unwrap();
    Protocol { program, spec, graph }
}

pub fn int_sect() -> Protocol {
    protocol("critical_int")
}

pub fn set_sect() -> Protocol {
    protocol("critical_sect")
}

pub fn solver() -> SolverConfig {
    let mut cfg = SolverConfig::from_env();
    cfg.timeout = std::time::Duration::from_secs(60);
    cfg
}

/// Whether the configured SMT solver answers a trivial query.
pub fn solver_available() -> bool {
    static AVAILABLE: OnceLock<bool> = OnceLock::new();
    *AVAILABLE.get_or_init(|| {
        let ok = matches!(run_solver("(check-sat)\n", &solver()), Ok(RawOutcome::Sat(_)));
        if !ok {
            eprintln!("no SMT solver available; solver-backed checks are skipped");
        }
        ok
    })
}

/// A solver stand-in: a shell script that ignores its input and prints `reply`.
pub fn fake_solver(reply: &str) -> SolverConfig {
    let mut cfg = solver();
    cfg.command = vec!["sh".into(), "-c".into(), format!("cat >/dev/null; printf '%s' '{reply}'")];
    cfg
}
