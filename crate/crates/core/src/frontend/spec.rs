//! `.inv` specification files: location macros and candidate invariants.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexer::{lex, Tok};
use super::parser::{Macro, Names, Parser};
use crate::error::{Error, Result};
use crate::ir::{CmpOp, Expr, Formula, ParamProgram};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub index_vars: Vec<String>,
    pub body: Formula,
}

impl Invariant {
    pub fn index(&self) -> usize {
        self.index_vars.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFile {
    pub macros: Vec<Macro>,
    pub invariants: Vec<Invariant>,
}

impl SpecFile {
    pub fn get(&self, name: &str) -> Result<&Invariant> {
        self.invariants.iter().find(|i| i.name == name).ok_or_else(|| Error::UnknownInvariant(name.to_string()))
    }
}

pub fn parse_spec(src: &str, origin: &str, program: &ParamProgram) -> Result<SpecFile> {
    let toks = lex(src, origin)?;
    let mut p = Parser::new(&toks, origin);
    let mut spec = SpecFile::default();
    let mut taken = BTreeSet::new();

    while !p.at_eof() {
        let is_macro = if p.eat_keyword("macro") {
            true
        } else {
            p.expect_keyword("invariant")?;
            false
        };
        let name = p.ident()?;
        if !taken.insert(name.clone()) {
            return Err(p.error(format!("a fresh name instead of duplicate `{name}`")));
        }
        let mut params = Vec::new();
        if p.eat(&Tok::LParen) {
            if !p.eat(&Tok::RParen) {
                loop {
                    let v = p.ident()?;
                    if params.contains(&v) || program.sort_of(&v).is_some() {
                        return Err(p.error(format!("a fresh index variable instead of `{v}`")));
                    }
                    params.push(v);
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    p.expect(Tok::RParen)?;
                    break;
                }
            }
        }
        p.expect(Tok::Assign)?;
        p.eat(&Tok::Always);
        let names = Names {
            globals: &program.globals,
            locals: &program.locals,
            tid_vars: &params,
            implicit_thread: None,
            macros: &spec.macros,
            locals_visible: true,
        };
        let body = p.formula(&names)?;
        p.eat(&Tok::Semi);
        if is_macro {
            if params.len() != 1 {
                return Err(Error::Arity { name, declared: params.len(), used: 1 });
            }
            let locs = macro_locations(&body, &params[0])
                .ok_or_else(|| Error::Sort(format!("macro `{name}` must be a location predicate on pc({})", params[0])))?;
            spec.macros.push(Macro { name, param: params.remove(0), locs });
        } else {
            let used = body.free_tids();
            if used.len() != params.len() {
                return Err(Error::Arity { name, declared: params.len(), used: used.len() });
            }
            spec.invariants.push(Invariant { name, index_vars: params, body });
        }
    }
    Ok(spec)
}

/// Extracts the location set of `pc(k) in {..}`, `pc(k) = l`, or a
/// disjunction of those.
fn macro_locations(f: &Formula, k: &str) -> Option<BTreeSet<u32>> {
    let is_pc_of_k = |v: &crate::ir::VarRef| {
        v.is_pc() && !v.primed && matches!(v.index(), Some(crate::ir::ThreadRef::Var(x)) if x == k)
    };
    match f {
        Formula::AtLoc(v, locs) if is_pc_of_k(v) => Some(locs.clone()),
        Formula::Cmp(CmpOp::Eq, Expr::Var(v), Expr::Loc(l)) if is_pc_of_k(v) => Some([*l].into()),
        Formula::Or(parts) => {
            let mut out = BTreeSet::new();
            for g in parts {
                out.extend(macro_locations(g, k)?);
            }
            Some(out)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::program::parse_program;

    fn prog() -> ParamProgram {
        parse_program(
            "global int tick := 0 int min := 0
             procedure main() local int ticket := 0
             begin skip end",
            "p.prg",
        )
        .unwrap()
    }

    #[test]
    fn macros_and_invariants() {
        let s = parse_spec(
            "macro critical(k) := pc(k) in {5,6}
             invariant mutex(i,j) := [] i != j -> !(critical(i) && critical(j))
             invariant low(i) := pc(i) = 4 || pc(i) = 5 -> ticket(i) < tick
             invariant glob := min <= tick",
            "s.inv",
            &prog(),
        )
        .unwrap();
        assert_eq!(s.macros[0].locs, [5, 6].into());
        assert_eq!(s.get("mutex").unwrap().index(), 2);
        assert_eq!(s.get("low").unwrap().index(), 1);
        assert_eq!(s.get("glob").unwrap().index(), 0);
        assert!(matches!(s.get("nope"), Err(Error::UnknownInvariant(_))));
    }

    #[test]
    fn arity_mismatch() {
        let e = parse_spec("invariant bad(i,j) := ticket(i) = 0", "s.inv", &prog()).unwrap_err();
        assert!(matches!(e, Error::Arity { declared: 2, used: 1, .. }));
    }

    #[test]
    fn undeclared_tid_or_variable() {
        assert!(matches!(parse_spec("invariant bad(i) := ticket(j) = 0", "s.inv", &prog()), Err(Error::UnknownVariable { .. })));
        assert!(matches!(parse_spec("invariant bad := bogus = 0", "s.inv", &prog()), Err(Error::UnknownVariable { .. })));
    }

    #[test]
    fn macro_must_be_location_predicate() {
        assert!(matches!(parse_spec("macro m(k) := ticket(k) = 0", "s.inv", &prog()), Err(Error::Sort(_))));
    }

    #[test]
    fn empty_spec() {
        assert_eq!(parse_spec("# nothing\n", "s.inv", &prog()).unwrap(), SpecFile::default());
    }
}
