//! SMT-LIB2 encoding of a concrete VC.
//!
//! Int terms carry an infinity condition so `setmin(∅) = +∞` is encoded
//! exactly. Each distinct `setmin(S)` becomes a constant `setmin!n` with a
//! flag `setmin!n!empty`; minimality is asserted against every Int term of
//! the VC, or with a quantified axiom when requested.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ir::{CmpOp, ConcreteVar, Expr, Formula, Sort, ThreadRef};

const EMPTY: &str = "((as const (Array Int Bool)) false)";
const RESERVED: &[&str] = &[
    "abs", "and", "as", "assert", "bool", "distinct", "div", "exists", "false", "forall", "ite", "lambda", "let",
    "max", "min", "mod", "not", "or", "select", "store", "true", "xor", "Int", "Bool", "Array", "set", "union",
];

#[derive(Clone, Debug, Default)]
pub struct SmtOptions {
    pub quantified_min: bool,
    pub threads: u32,
    pub max_loc: u32,
    /// Emitted as a leading comment.
    pub comment: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SmtScript {
    pub text: String,
    /// Declared program variables with their SMT symbol.
    pub symbols: Vec<(String, ConcreteVar, Sort)>,
    /// `setmin!n` symbols with the set term they stand for.
    pub setmins: Vec<(String, Expr)>,
    /// Integer literals occurring in the VC.
    pub literals: BTreeSet<i64>,
}

pub fn symbol(v: &ConcreteVar) -> String {
    let mut s = v.name.clone();
    if let Some(t) = v.thread {
        let _ = write!(s, "!{t}");
    }
    if v.primed {
        s.push_str("!next");
    }
    if RESERVED.contains(&s.as_str()) {
        format!("|{s}|")
    } else {
        s
    }
}

fn int_lit(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

struct IntTerm {
    term: String,
    inf: Option<String>,
}

fn or2(a: &Option<String>, b: &Option<String>) -> Option<String> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(format!("(or {x} {y})")),
    }
}

fn not(s: &Option<String>) -> String {
    match s {
        None => "true".into(),
        Some(x) => format!("(not {x})"),
    }
}

fn and_all(parts: Vec<String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "true").collect();
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or_all(parts: Vec<String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "false").collect();
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

fn inf_or_false(s: &Option<String>) -> String {
    s.clone().unwrap_or_else(|| "false".into())
}

#[derive(Default)]
struct Encoder {
    vars: BTreeMap<ConcreteVar, Sort>,
    setmins: Vec<(String, Expr)>,
    candidates: BTreeSet<(String, Option<String>)>,
    literals: BTreeSet<i64>,
}

impl Encoder {
    fn var(&mut self, v: &crate::ir::VarRef) -> Result<String> {
        let c = v.concrete().ok_or_else(|| Error::Protocol(format!("free thread variable in `{v}`")))?;
        if let Sort::Uninterpreted(s) = &v.sort {
            return Err(Error::UnsupportedTheory(format!("variable `{v}` of sort {s}")));
        }
        let s = symbol(&c);
        self.vars.insert(c, v.sort.clone());
        Ok(s)
    }

    fn int(&mut self, e: &Expr) -> Result<IntTerm> {
        let t = match e {
            Expr::Int(n) => {
                self.literals.insert(*n);
                IntTerm { term: int_lit(*n), inf: None }
            }
            Expr::Loc(l) => return Ok(IntTerm { term: l.to_string(), inf: None }),
            Expr::Tid(ThreadRef::Const(a)) => return Ok(IntTerm { term: a.to_string(), inf: None }),
            Expr::Tid(ThreadRef::Var(k)) => return Err(Error::Protocol(format!("free thread variable `{k}`"))),
            Expr::Var(v) => {
                let term = self.var(v)?;
                if v.sort != Sort::Int {
                    return Ok(IntTerm { term, inf: None });
                }
                IntTerm { term, inf: None }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let x = self.int(a)?;
                let y = self.int(b)?;
                let op = if matches!(e, Expr::Add(..)) { "+" } else { "-" };
                IntTerm { term: format!("({op} {} {})", x.term, y.term), inf: or2(&x.inf, &y.inf) }
            }
            Expr::SetMin(s) => {
                let set = self.set(s)?;
                let n = match self.setmins.iter().position(|(k, _)| *k == set) {
                    Some(n) => n,
                    None => {
                        self.setmins.push((set, (**s).clone()));
                        self.setmins.len() - 1
                    }
                };
                IntTerm { term: format!("setmin!{n}"), inf: Some(format!("setmin!{n}!empty")) }
            }
            _ => return Err(Error::Sort(format!("`{e}` is not an integer term"))),
        };
        self.candidates.insert((t.term.clone(), t.inf.clone()));
        Ok(t)
    }

    fn with(&mut self, base: String, x: &Expr, val: bool) -> Result<String> {
        let x = self.int(x)?;
        let store = format!("(store {base} {} {val})", x.term);
        Ok(match x.inf {
            None => store,
            Some(i) => format!("(ite {i} {base} {store})"),
        })
    }

    fn set(&mut self, e: &Expr) -> Result<String> {
        match e {
            Expr::Var(v) => self.var(v),
            Expr::EmptySet => Ok(EMPTY.into()),
            Expr::Singleton(x) => self.with(EMPTY.into(), x, true),
            Expr::Union(a, b) => match (&**a, &**b) {
                (_, Expr::Singleton(x)) => {
                    let base = self.set(a)?;
                    self.with(base, x, true)
                }
                (Expr::Singleton(x), _) => {
                    let base = self.set(b)?;
                    self.with(base, x, true)
                }
                _ => {
                    let (x, y) = (self.set(a)?, self.set(b)?);
                    Ok(format!("(lambda ((x!set Int)) (or (select {x} x!set) (select {y} x!set)))"))
                }
            },
            Expr::Diff(a, b) => match &**b {
                Expr::Singleton(x) => {
                    let base = self.set(a)?;
                    self.with(base, x, false)
                }
                _ => {
                    let (x, y) = (self.set(a)?, self.set(b)?);
                    Ok(format!("(lambda ((x!set Int)) (and (select {x} x!set) (not (select {y} x!set))))"))
                }
            },
            _ => Err(Error::Sort(format!("`{e}` is not a set term"))),
        }
    }

    fn cmp(&mut self, op: CmpOp, a: &Expr, b: &Expr) -> Result<String> {
        let sort = a.sort()?;
        match sort {
            Sort::Int => {
                let x = self.int(a)?;
                let y = self.int(b)?;
                Ok(match op {
                    CmpOp::Eq => int_eq(&x, &y),
                    CmpOp::Ne => format!("(not {})", int_eq(&x, &y)),
                    CmpOp::Lt => int_lt(&x, &y),
                    CmpOp::Gt => int_lt(&y, &x),
                    CmpOp::Le => int_le(&x, &y),
                    CmpOp::Ge => int_le(&y, &x),
                })
            }
            Sort::Loc | Sort::Tid => {
                let x = self.int(a)?;
                let y = self.int(b)?;
                Ok(plain(op, &x.term, &y.term))
            }
            Sort::Bool => {
                let x = self.boolean(a)?;
                let y = self.boolean(b)?;
                match op {
                    CmpOp::Eq | CmpOp::Ne => Ok(plain(op, &x, &y)),
                    _ => Err(Error::Sort(format!("ordering on Bool in `{a} {} {b}`", op.symbol()))),
                }
            }
            Sort::SetInt => {
                let x = self.set(a)?;
                let y = self.set(b)?;
                match op {
                    CmpOp::Eq | CmpOp::Ne => Ok(plain(op, &x, &y)),
                    _ => Err(Error::Sort(format!("ordering on sets in `{a} {} {b}`", op.symbol()))),
                }
            }
            Sort::Uninterpreted(s) => Err(Error::UnsupportedTheory(format!("comparison at sort {s}"))),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<String> {
        match e {
            Expr::Bool(b) => Ok(b.to_string()),
            Expr::Var(v) if v.sort == Sort::Bool => self.var(v),
            _ => Err(Error::Sort(format!("`{e}` is not a Bool term"))),
        }
    }

    fn formula(&mut self, f: &Formula) -> Result<String> {
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(e) => self.boolean(e)?,
            Formula::Cmp(op, a, b) => self.cmp(*op, a, b)?,
            Formula::Member(a, b) => {
                let x = self.int(a)?;
                let s = self.set(b)?;
                and_all(vec![not(&x.inf), format!("(select {s} {})", x.term)])
            }
            Formula::AtLoc(v, locs) => {
                let s = self.var(v)?;
                or_all(locs.iter().map(|l| format!("(= {s} {l})")).collect())
            }
            Formula::Not(g) => format!("(not {})", self.formula(g)?),
            Formula::And(gs) => and_all(gs.iter().map(|g| self.formula(g)).collect::<Result<_>>()?),
            Formula::Or(gs) => or_all(gs.iter().map(|g| self.formula(g)).collect::<Result<_>>()?),
            Formula::Implies(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Update { .. } | Formula::Frame { .. } => {
                return Err(Error::Protocol(format!("array term `{f}` reached the SMT encoder")))
            }
        })
    }
}

fn plain(op: CmpOp, a: &str, b: &str) -> String {
    match op {
        CmpOp::Ne => format!("(not (= {a} {b}))"),
        _ => format!("({} {a} {b})", op.symbol()),
    }
}

fn int_eq(x: &IntTerm, y: &IntTerm) -> String {
    let eq = format!("(= {} {})", x.term, y.term);
    match (&x.inf, &y.inf) {
        (None, None) => eq,
        (Some(i), None) | (None, Some(i)) => format!("(and (not {i}) {eq})"),
        (Some(i), Some(j)) => format!("(or (and {i} {j}) (and (not {i}) (not {j}) {eq}))"),
    }
}

fn int_lt(x: &IntTerm, y: &IntTerm) -> String {
    and_all(vec![not(&x.inf), or_all(vec![inf_or_false(&y.inf), format!("(< {} {})", x.term, y.term)])])
}

fn int_le(x: &IntTerm, y: &IntTerm) -> String {
    or_all(vec![inf_or_false(&y.inf), and_all(vec![not(&x.inf), format!("(<= {} {})", x.term, y.term)])])
}

fn sort_name(s: &Sort) -> Result<&'static str> {
    match s {
        Sort::Bool => Ok("Bool"),
        Sort::Int | Sort::Loc | Sort::Tid => Ok("Int"),
        Sort::SetInt => Ok("(Array Int Bool)"),
        Sort::Uninterpreted(n) => Err(Error::UnsupportedTheory(format!("sort {n}"))),
    }
}

/// Encodes the validity query `hypothesis → conclusion` as a satisfiability
/// check of `hypothesis ∧ ¬conclusion`. `extra_vars` are declared even when
/// they no longer occur (e.g. after simplification), so models stay total.
pub fn emit_smt(
    hypothesis: &Formula,
    conclusion: &Formula,
    extra_vars: &BTreeMap<ConcreteVar, Sort>,
    opts: &SmtOptions,
) -> Result<SmtScript> {
    let mut enc = Encoder::default();
    let hyps: Vec<String> = hypothesis.conjuncts().into_iter().map(|c| enc.formula(c)).collect::<Result<_>>()?;
    let concl = enc.formula(conclusion)?;
    for (v, s) in extra_vars {
        sort_name(s)?;
        enc.vars.entry(v.clone()).or_insert_with(|| s.clone());
    }

    let mut out = String::new();
    if let Some(c) = &opts.comment {
        for line in c.lines() {
            let _ = writeln!(out, "; {line}");
        }
    }
    out.push_str("(set-option :produce-models true)\n(set-logic ALL)\n");
    let mut symbols = Vec::new();
    for (v, s) in &enc.vars {
        let sym = symbol(v);
        let _ = writeln!(out, "(declare-const {sym} {})", sort_name(s)?);
        symbols.push((sym, v.clone(), s.clone()));
    }
    for (sym, _, s) in &symbols {
        match s {
            Sort::Loc => {
                let _ = writeln!(out, "(assert (and (<= 1 {sym}) (<= {sym} {})))", opts.max_loc.max(1));
            }
            Sort::Tid if opts.threads > 0 => {
                let _ = writeln!(out, "(assert (and (<= 0 {sym}) (< {sym} {})))", opts.threads);
            }
            _ => {}
        }
    }
    for (n, (set, _)) in enc.setmins.iter().enumerate() {
        let m = format!("setmin!{n}");
        let _ = writeln!(out, "(declare-const {m} Int)\n(declare-const {m}!empty Bool)");
        let _ = writeln!(out, "(assert (= {m}!empty (= {set} {EMPTY})))");
        let _ = writeln!(out, "(assert (=> (not {m}!empty) (select {set} {m})))");
        if opts.quantified_min {
            let _ = writeln!(out, "(assert (forall ((x!min Int)) (=> (select {set} x!min) (<= {m} x!min))))");
        }
    }
    for (n, (set, _)) in enc.setmins.iter().enumerate() {
        for (t, inf) in &enc.candidates {
            if *t == format!("setmin!{n}") {
                continue;
            }
            let guard = and_all(vec![not(inf), format!("(select {set} {t})")]);
            let _ = writeln!(out, "(assert (=> {guard} (<= setmin!{n} {t})))");
        }
    }
    for h in hyps {
        let _ = writeln!(out, "(assert {h})");
    }
    let _ = writeln!(out, "(assert (not {concl}))");
    out.push_str("(check-sat)\n(get-model)\n");

    let setmins = enc.setmins.iter().enumerate().map(|(n, (_, e))| (format!("setmin!{n}"), e.clone())).collect();
    Ok(SmtScript { text: out, symbols, setmins, literals: enc.literals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::VarRef;

    fn g(name: &str, sort: Sort) -> Expr {
        Expr::Var(VarRef::global(name, sort))
    }

    #[test]
    fn symbols_and_reserved_names() {
        assert_eq!(symbol(&"ticket'[1]".parse().unwrap()), "ticket!1!next");
        assert_eq!(symbol(&"min".parse().unwrap()), "|min|");
        assert_eq!(symbol(&"pc[0]".parse().unwrap()), "pc!0");
    }

    #[test]
    fn setmin_gets_flag_and_ground_axioms() {
        let bag = g("bag", Sort::SetInt);
        let f = Formula::eq(Expr::SetMin(Box::new(bag)), g("x", Sort::Int));
        let s = emit_smt(&Formula::True, &f, &BTreeMap::new(), &SmtOptions::default()).unwrap();
        assert!(s.text.contains("(declare-const setmin!0!empty Bool)"));
        assert!(s.text.contains("(assert (=> (select bag x) (<= setmin!0 x)))"));
        assert!(s.text.contains("(and (not setmin!0!empty) (= setmin!0 x))"));
        assert!(!s.text.contains("forall"));
        assert!(s.text.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn deterministic_output() {
        let f = Formula::and(vec![
            Formula::Member(g("a", Sort::Int), g("s", Sort::SetInt)),
            Formula::at(ThreadRef::Const(1), 3),
        ]);
        let o = SmtOptions { max_loc: 4, threads: 2, ..Default::default() };
        let a = emit_smt(&f, &Formula::False, &BTreeMap::new(), &o).unwrap().text;
        let b = emit_smt(&f, &Formula::False, &BTreeMap::new(), &o).unwrap().text;
        assert_eq!(a, b);
        assert!(a.contains("(assert (and (<= 1 pc!1) (<= pc!1 4)))"));
    }

    #[test]
    fn uninterpreted_sorts_are_rejected() {
        let f = Formula::eq(g("q", Sort::Uninterpreted("Queue".into())), g("r", Sort::Uninterpreted("Queue".into())));
        assert!(matches!(
            emit_smt(&Formula::True, &f, &BTreeMap::new(), &SmtOptions::default()),
            Err(Error::UnsupportedTheory(_))
        ));
    }
}
