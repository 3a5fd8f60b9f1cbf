//! `.prg` programs: one `procedure main()` executed by every thread.

use std::collections::BTreeSet;

use super::lexer::{lex, Tok};
use super::parser::{coerce_to, Names, Parser};
use crate::error::{Error, Result};
use crate::ir::{
    Assign, Expr, Formula, ParamProgram, Sort, StmtKind, ThreadRef, Transition, TransitionId, VarDecl, VarRef, PC,
};

/// The tid variable that names the executing thread inside a program.
pub const ME: &str = "me";

const BLOCK_KEYWORDS: &[&str] = &["procedure", "local", "begin", "end"];

pub fn parse_program(src: &str, origin: &str) -> Result<ParamProgram> {
    let toks = lex(src, origin)?;
    let mut p = Parser::new(&toks, origin);

    let name = if p.eat_keyword("program") {
        p.ident()?
    } else {
        default_name(origin)
    };

    let mut globals = Vec::new();
    if p.eat_keyword("global") {
        while !is_block_keyword(&p) {
            let d = declaration(&mut p, &globals, &[], false)?;
            if globals.iter().any(|g: &VarDecl| g.name == d.name) {
                return Err(p.error(format!("a fresh name instead of duplicate `{}`", d.name)));
            }
            globals.push(d);
        }
    }
    p.expect_keyword("procedure")?;
    p.ident()?;
    p.expect(Tok::LParen)?;
    p.expect(Tok::RParen)?;

    let mut locals: Vec<VarDecl> = Vec::new();
    if p.eat_keyword("local") {
        while !is_block_keyword(&p) {
            let d = declaration(&mut p, &globals, &locals, true)?;
            if d.name == PC || d.name == ME || globals.iter().chain(locals.iter()).any(|g| g.name == d.name) {
                return Err(p.error(format!("a fresh name instead of `{}`", d.name)));
            }
            locals.push(d);
        }
    }
    p.expect_keyword("begin")?;
    let transitions = statements(&mut p, &globals, &locals)?;
    p.expect_keyword("end")?;
    if !p.at_eof() {
        return Err(p.error("end of input"));
    }

    let theta_global = Formula::and(
        globals
            .iter()
            .filter_map(|g| g.init.as_ref().map(|e| Formula::eq(Expr::Var(VarRef::global(g.name.clone(), g.sort.clone())), e.clone())))
            .collect(),
    );
    let me = ThreadRef::var(ME);
    let mut local_init: Vec<Formula> = locals
        .iter()
        .filter_map(|l| {
            l.init.as_ref().map(|e| Formula::eq(Expr::Var(VarRef::local(l.name.clone(), me.clone(), l.sort.clone())), e.clone()))
        })
        .collect();
    local_init.push(Formula::at(me, 1));

    Ok(ParamProgram {
        name,
        globals,
        locals,
        transitions,
        theta_global,
        theta_local: Formula::and(local_init),
        tid_param: ME.to_string(),
    })
}

fn default_name(origin: &str) -> String {
    std::path::Path::new(origin)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "program".into())
}

fn is_block_keyword(p: &Parser) -> bool {
    BLOCK_KEYWORDS.iter().any(|k| p.is_keyword(k)) || p.at_eof()
}

fn sort_from_name(s: &str) -> Sort {
    match s {
        "int" => Sort::Int,
        "bool" => Sort::Bool,
        "set" | "intset" => Sort::SetInt,
        "tid" => Sort::Tid,
        "loc" => Sort::Loc,
        other => Sort::Uninterpreted(other.to_string()),
    }
}

fn declaration(p: &mut Parser, globals: &[VarDecl], locals: &[VarDecl], is_local: bool) -> Result<VarDecl> {
    let sort = sort_from_name(&p.ident()?);
    let name = p.ident()?;
    let init = if p.eat(&Tok::Assign) {
        let tids = [ME.to_string()];
        let names = Names {
            globals,
            locals,
            tid_vars: &tids,
            implicit_thread: Some(ME),
            macros: &[],
            locals_visible: is_local,
        };
        let e = coerce_to(p.expr(&names)?, &sort);
        let es = e.sort()?;
        if es != sort {
            return Err(Error::Sort(format!("initializer of `{name}` has sort {es}, expected {sort}")));
        }
        Some(e)
    } else {
        None
    };
    p.eat(&Tok::Semi);
    Ok(VarDecl { name, sort, init })
}

struct Pending {
    loc: u32,
    kind: StmtKind,
    guard: Formula,
    effect: Vec<Assign>,
    /// Explicit successor; `None` falls through to the next location.
    target: Option<u32>,
    else_target: Option<u32>,
    pos: (usize, usize),
}

fn statements(p: &mut Parser, globals: &[VarDecl], locals: &[VarDecl]) -> Result<Vec<Transition>> {
    let tids = [ME.to_string()];
    let names = Names { globals, locals, tid_vars: &tids, implicit_thread: Some(ME), macros: &[], locals_visible: true };
    let mut pending: Vec<Pending> = Vec::new();
    let mut loops: Vec<u32> = Vec::new();
    let mut seen = BTreeSet::new();

    while !p.is_keyword("end") && !p.at_eof() {
        let loc = pending.len() as u32 + 1;
        if let (Tok::Int(n), Tok::Colon) = (p.peek().clone(), p.peek_at(1).clone()) {
            let label = u32::try_from(n).map_err(|_| p.error("location label"))?;
            if seen.contains(&label) {
                return Err(Error::DuplicateLocation(label));
            }
            if label != loc {
                return Err(p.error(format!("label {loc}")));
            }
            p.advance();
            p.advance();
        }
        seen.insert(loc);
        let pos = p.here();
        let mut st = Pending {
            loc,
            kind: StmtKind::Skip(None),
            guard: Formula::True,
            effect: Vec::new(),
            target: None,
            else_target: None,
            pos,
        };
        let head = match p.peek() {
            Tok::Ident(h) if !names_local_or_global(h, globals, locals) => p.ident()?,
            _ => String::new(),
        };
        match head.as_str() {
            "skip" => {}
            "noncritical" | "critical" => st.kind = StmtKind::Skip(Some(head.clone())),
            "loop" => {
                st.kind = StmtKind::Loop;
                loops.push(loc);
            }
            "endloop" => {
                st.kind = StmtKind::EndLoop;
                st.target = Some(loops.pop().ok_or_else(|| p.error("a matching `loop` before `endloop`"))?);
            }
            "goto" => {
                st.kind = StmtKind::Goto;
                st.target = Some(p.loc()?);
            }
            "await" => {
                st.kind = StmtKind::Await;
                st.guard = p.formula(&names)?;
            }
            "if" => {
                st.guard = p.formula(&names)?;
                p.expect_keyword("then")?;
                p.eat_keyword("goto");
                st.target = Some(p.loc()?);
                if p.eat_keyword("else") {
                    p.eat_keyword("goto");
                    st.else_target = Some(p.loc()?);
                    st.kind = StmtKind::IfElse;
                } else {
                    st.kind = StmtKind::IfThen;
                }
            }
            "" => {
                st.kind = StmtKind::Assign;
                st.effect = assignments(p, &names)?;
            }
            other => return Err(p.unknown(other, 0)),
        }
        p.eat(&Tok::Semi);
        pending.push(st);
    }
    if pending.is_empty() {
        return Err(p.error("at least one statement"));
    }
    if !loops.is_empty() {
        return Err(p.error("`endloop`"));
    }

    let last = pending.len() as u32 + 1;
    let all_names: Vec<&str> = globals.iter().chain(locals.iter()).map(|d| d.name.as_str()).collect();
    let mut out = Vec::new();
    for st in pending {
        let fall = st.loc + 1;
        for t in [st.target, st.else_target].into_iter().flatten() {
            if t == 0 || t > last {
                let (line, col) = st.pos;
                return Err(Error::parse(p.origin(), line, col, format!("jump target within 1..{last}, found {t}")));
            }
        }
        let written: BTreeSet<&str> = st.effect.iter().map(|a| a.var.name.as_str()).collect();
        let preserved: BTreeSet<String> =
            all_names.iter().filter(|n| !written.contains(*n)).map(|n| n.to_string()).collect();
        let mk = |arm: u8, guard: Formula, next: u32| Transition {
            id: TransitionId { loc: st.loc, arm },
            tid_param: ME.to_string(),
            guard,
            effect: st.effect.clone(),
            next,
            preserved: preserved.clone(),
            kind: st.kind.clone(),
        };
        match st.kind {
            StmtKind::IfThen | StmtKind::IfElse => {
                out.push(mk(1, st.guard.clone(), st.target.unwrap()));
                out.push(mk(2, Formula::not(st.guard.clone()), st.else_target.unwrap_or(fall)));
            }
            _ => out.push(mk(0, st.guard.clone(), st.target.unwrap_or(fall))),
        }
    }
    Ok(out)
}

fn names_local_or_global(n: &str, globals: &[VarDecl], locals: &[VarDecl]) -> bool {
    n == PC || globals.iter().chain(locals.iter()).any(|d| d.name == n)
}

fn assignments(p: &mut Parser, names: &Names) -> Result<Vec<Assign>> {
    let braced = p.eat(&Tok::LBrace);
    let mut out: Vec<Assign> = Vec::new();
    loop {
        let pos = p.pos;
        let target = match p.expr(names)? {
            Expr::Var(v) if !v.primed => v,
            _ => {
                p.pos = pos;
                return Err(p.error("assignable variable"));
            }
        };
        if target.name == PC {
            p.pos = pos;
            return Err(p.error("a variable other than `pc`"));
        }
        if let Some(t) = target.index() {
            if t != &ThreadRef::var(ME) {
                p.pos = pos;
                return Err(p.error("a local of the executing thread"));
            }
        }
        if out.iter().any(|a| a.var.name == target.name) {
            p.pos = pos;
            return Err(p.error(format!("a single assignment to `{}` per block", target.name)));
        }
        p.expect(Tok::Assign)?;
        let value = coerce_to(p.expr(names)?, &target.sort);
        let vs = value.sort()?;
        if vs != target.sort {
            return Err(Error::Sort(format!("assigning {vs} `{value}` to {} `{}`", target.sort, target.name)));
        }
        out.push(Assign { var: target, value });
        if !braced {
            return Ok(out);
        }
        if p.eat(&Tok::Semi) {
            if p.eat(&Tok::RBrace) {
                return Ok(out);
            }
            continue;
        }
        p.expect(Tok::RBrace)?;
        return Ok(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
global
  int x := 0
procedure main()
local
  int y := 0
begin
  1: loop
  2:   { y := x; x := x + 1 }
  3:   if y = 0 then 1 else 4
  4: endloop
end
";

    #[test]
    fn compiles_statements_to_transitions() {
        let p = parse_program(SMALL, "small.prg").unwrap();
        assert_eq!(p.name, "small");
        let ids: Vec<String> = p.transitions.iter().map(|t| t.id.to_string()).collect();
        assert_eq!(ids, ["t1", "t2", "t3.1", "t3.2", "t4"]);
        assert_eq!(p.transitions[0].next, 2);
        assert_eq!(p.transitions[4].next, 1);
        assert_eq!(p.transitions[1].effect.len(), 2);
        assert!(p.transitions[1].preserved.is_empty());
        assert_eq!(p.transitions[0].preserved, ["x".to_string(), "y".to_string()].into());
        assert_eq!(p.max_loc(), 4);
    }

    #[test]
    fn labels_are_optional_but_checked() {
        let unlabeled = SMALL.replace("1: ", "").replace("2: ", "").replace("3: ", "").replace("4: ", "");
        assert_eq!(parse_program(&unlabeled, "small.prg").unwrap(), parse_program(SMALL, "small.prg").unwrap());
        let dup = SMALL.replace("2:", "1:");
        assert!(matches!(parse_program(&dup, "d.prg"), Err(Error::DuplicateLocation(1))));
        let skip = SMALL.replace("2:", "5:");
        assert!(matches!(parse_program(&skip, "d.prg"), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_body_is_a_parse_error() {
        let src = "procedure main() begin end";
        assert!(matches!(parse_program(src, "e.prg"), Err(Error::Parse { .. })));
    }

    #[test]
    fn pc_is_not_assignable() {
        let src = "procedure main() begin pc := 3 end";
        assert!(matches!(parse_program(src, "e.prg"), Err(Error::Parse { .. })));
    }

    #[test]
    fn sort_errors_surface() {
        let src = "global set s := {} procedure main() begin s := 1 end";
        assert!(matches!(parse_program(src, "e.prg"), Err(Error::Sort(_))));
    }

    #[test]
    fn jump_target_out_of_range() {
        let src = "procedure main() begin 1: goto 9 end";
        let e = parse_program(src, "e.prg").unwrap_err();
        assert!(e.to_string().contains("jump target"), "{e}");
    }

    #[test]
    fn uninterpreted_declarations_are_kept() {
        let src = "global addr head procedure main() local addr cur begin skip end";
        let p = parse_program(src, "l.prg").unwrap();
        assert!(!p.uses_only_core_sorts());
        assert_eq!(p.theta_global, Formula::True);
    }
}
