//! Pretty printers whose output parses back to the same value.

use std::fmt::Write;

use super::spec::SpecFile;
use crate::ir::{ParamProgram, StmtKind, VarDecl};

fn decl_line(out: &mut String, d: &VarDecl) {
    let _ = write!(out, "  {} {}", d.sort, d.name);
    if let Some(e) = &d.init {
        let _ = write!(out, " := {e}");
    }
    out.push('\n');
}

pub fn print_program(p: &ParamProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {}", p.name);
    if !p.globals.is_empty() {
        out.push_str("global\n");
        p.globals.iter().for_each(|d| decl_line(&mut out, d));
    }
    out.push_str("procedure main()\n");
    if !p.locals.is_empty() {
        out.push_str("local\n");
        p.locals.iter().for_each(|d| decl_line(&mut out, d));
    }
    out.push_str("begin\n");
    let mut locs: Vec<u32> = p.transitions.iter().map(|t| t.id.loc).collect();
    locs.dedup();
    for loc in locs {
        let arms: Vec<_> = p.transitions_at(loc).collect();
        let t = arms[0];
        let body = match &t.kind {
            StmtKind::Skip(None) => "skip".to_string(),
            StmtKind::Skip(Some(label)) => label.clone(),
            StmtKind::Loop => "loop".into(),
            StmtKind::EndLoop => "endloop".into(),
            StmtKind::Goto => format!("goto {}", t.next),
            StmtKind::Await => format!("await {}", t.guard),
            StmtKind::IfThen => format!("if {} then {}", t.guard, t.next),
            StmtKind::IfElse => format!("if {} then {} else {}", t.guard, t.next, arms[1].next),
            StmtKind::Assign => {
                let parts: Vec<String> = t.effect.iter().map(|a| format!("{} := {}", a.var, a.value)).collect();
                if parts.len() == 1 {
                    parts[0].clone()
                } else {
                    format!("{{ {} }}", parts.join("; "))
                }
            }
        };
        let _ = writeln!(out, "  {loc}: {body}");
    }
    out.push_str("end\n");
    out
}

pub fn print_spec(s: &SpecFile) -> String {
    let mut out = String::new();
    for m in &s.macros {
        let locs: Vec<String> = m.locs.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "macro {}({}) := pc({}) in {{{}}}", m.name, m.param, m.param, locs.join(", "));
    }
    for inv in &s.invariants {
        let _ = writeln!(out, "invariant {}({}) := {}", inv.name, inv.index_vars.join(", "), inv.body);
    }
    out
}
