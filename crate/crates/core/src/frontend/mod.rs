//! Parsers for programs (`.prg`), specifications (`.inv`) and proof graphs
//! (`.graph`), their printers, and the syntactic symmetry gate.

pub mod graph;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod program;
pub mod spec;
pub mod symmetry;

use std::path::Path;

pub use graph::{parse_proof_graph, Annotation, GraphNode, LocSel, PremiseClass, ProofGraph, TacticHint};
pub use parser::Macro;
pub use print::{print_program, print_spec};
pub use program::{parse_program, ME};
pub use spec::{parse_spec, Invariant, SpecFile};
pub use symmetry::{check_full_symmetry, SymmetryReport};

use crate::error::{Error, Result};
use crate::ir::ParamProgram;

pub fn read_source(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_program(path: &Path) -> Result<ParamProgram> {
    parse_program(&read_source(path)?, &path.display().to_string())
}

pub fn load_spec(path: &Path, program: &ParamProgram) -> Result<SpecFile> {
    parse_spec(&read_source(path)?, &path.display().to_string(), program)
}

pub fn load_graph(path: &Path) -> Result<ProofGraph> {
    parse_proof_graph(&read_source(path)?, &path.display().to_string())
}
