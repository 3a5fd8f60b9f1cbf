use serde::Serialize;

use super::spec::SpecFile;
use crate::ir::{Expr, Formula, ParamProgram, Sort, ThreadRef};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// The first offending term, rendered.
    pub witness: Option<String>,
}

/// Syntactic full-symmetry test: tid terms may only be compared with `=`
/// and `≠`, and no concrete thread id may appear.
pub fn check_full_symmetry(p: &ParamProgram, spec: &SpecFile) -> SymmetryReport {
    let mut formulas: Vec<&Formula> = vec![&p.theta_global, &p.theta_local];
    let mut exprs: Vec<&Expr> = Vec::new();
    for t in &p.transitions {
        formulas.push(&t.guard);
        for a in &t.effect {
            exprs.push(&a.value);
        }
    }
    for d in p.globals.iter().chain(p.locals.iter()) {
        if let Some(e) = &d.init {
            exprs.push(e);
        }
    }
    for inv in &spec.invariants {
        formulas.push(&inv.body);
    }
    let witness = formulas
        .iter()
        .find_map(|f| formula_witness(f))
        .or_else(|| exprs.iter().find_map(|e| expr_witness(e)));
    SymmetryReport { symmetric: witness.is_none(), witness }
}

fn expr_witness(e: &Expr) -> Option<String> {
    let mut found = None;
    e.visit_threads(&mut |t| {
        if found.is_none() && matches!(t, ThreadRef::Const(_)) {
            found = Some(e.to_string());
        }
    });
    found
}

fn formula_witness(f: &Formula) -> Option<String> {
    match f {
        Formula::Cmp(op, a, b) => {
            if !op.is_equality() && a.sort().ok() == Some(Sort::Tid) {
                return Some(f.to_string());
            }
            expr_witness(a).or_else(|| expr_witness(b)).map(|_| f.to_string())
        }
        Formula::Not(g) => formula_witness(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().find_map(formula_witness),
        Formula::Implies(a, b) => formula_witness(a).or_else(|| formula_witness(b)),
        _ => {
            let mut found = false;
            f.visit_threads(&mut |t| found |= matches!(t, ThreadRef::Const(_)));
            found.then(|| f.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, parse_spec};

    const PRG: &str = "global tid owner procedure main() local int x := 0 begin 1: await owner = me 2: goto 1 end";

    #[test]
    fn equality_on_tids_is_symmetric() {
        let p = parse_program(PRG, "p.prg").unwrap();
        let s = parse_spec("invariant d(i,j) := i != j -> x(i) = x(j)", "s.inv", &p).unwrap();
        assert!(check_full_symmetry(&p, &s).symmetric);
    }

    #[test]
    fn ordering_on_tids_is_rejected() {
        let p = parse_program(PRG, "p.prg").unwrap();
        let s = parse_spec("invariant o(k,j) := k < j -> x(k) = x(j)", "s.inv", &p).unwrap();
        let r = check_full_symmetry(&p, &s);
        assert!(!r.symmetric);
        assert_eq!(r.witness.as_deref(), Some("k < j"));
    }

    #[test]
    fn thread_constant_is_rejected() {
        let p = parse_program(&PRG.replace("owner = me", "owner = @0"), "p.prg").unwrap();
        let r = check_full_symmetry(&p, &SpecFile::default());
        assert_eq!(r.witness.as_deref(), Some("owner = @0"));
        let q = parse_program(PRG, "p.prg").unwrap();
        let s = parse_spec("invariant z := x[0] = 0", "s.inv", &q).unwrap();
        assert!(!check_full_symmetry(&q, &s).symmetric);
    }
}
