//! Recursive-descent parser for expressions and formulas, shared by the
//! program and specification languages.

use std::collections::BTreeSet;

use super::lexer::{Tok, Token};
use crate::error::{Error, Result};
use crate::ir::{CmpOp, Expr, Formula, Sort, ThreadRef, VarDecl, VarRef, PC};

/// A single-parameter location macro such as `critical(k) := pc(k) in {5,6}`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Macro {
    pub name: String,
    pub param: String,
    pub locs: BTreeSet<u32>,
}

/// Name-resolution context.
pub struct Names<'a> {
    pub globals: &'a [VarDecl],
    pub locals: &'a [VarDecl],
    /// Identifiers that denote tid variables (`me` in programs, the
    /// declared index variables in specifications).
    pub tid_vars: &'a [String],
    /// In program text a bare local name reads the acting thread's copy.
    pub implicit_thread: Option<&'a str>,
    pub macros: &'a [Macro],
    /// Whether locals are in scope at all (false for global initializers).
    pub locals_visible: bool,
}

impl<'a> Names<'a> {
    fn global(&self, n: &str) -> Option<&VarDecl> {
        self.globals.iter().find(|d| d.name == n)
    }

    fn local_sort(&self, n: &str) -> Option<Sort> {
        if !self.locals_visible {
            return None;
        }
        if n == PC {
            return Some(Sort::Loc);
        }
        self.locals.iter().find(|d| d.name == n).map(|d| d.sort.clone())
    }

    fn is_tid_var(&self, n: &str) -> bool {
        self.tid_vars.iter().any(|t| t == n)
    }

    fn macro_named(&self, n: &str) -> Option<&Macro> {
        self.macros.iter().find(|m| m.name == n)
    }
}

pub struct Parser<'t> {
    toks: &'t [Token],
    pub pos: usize,
    origin: String,
}

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token], origin: &str) -> Self {
        Parser { toks, pos: 0, origin: origin.to_string() }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error(&self, expected: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::parse(&self.origin, t.line, t.col, format!("{}, found {}", expected.into(), t.tok.describe()))
    }

    pub fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(t.describe()))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("`{kw}`")))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    pub fn int(&mut self) -> Result<i64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.error("integer")),
        }
    }

    pub fn loc(&mut self) -> Result<u32> {
        let n = self.int()?;
        u32::try_from(n).ok().filter(|n| *n >= 1).ok_or_else(|| self.error("location (positive integer)"))
    }

    // ---- formulas -------------------------------------------------------

    pub fn formula(&mut self, names: &Names) -> Result<Formula> {
        let lhs = self.disjunction(names)?;
        if self.eat(&Tok::Implies) {
            let rhs = self.formula(names)?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self, names: &Names) -> Result<Formula> {
        let mut parts = vec![self.conjunction(names)?];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction(names)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self, names: &Names) -> Result<Formula> {
        let mut parts = vec![self.unary(names)?];
        while self.eat(&Tok::And) {
            parts.push(self.unary(names)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self, names: &Names) -> Result<Formula> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::not(self.unary(names)?));
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" && !is_relational(self.peek_at(1)) => {
                self.advance();
                return Ok(Formula::True);
            }
            Tok::Ident(s) if s == "false" && !is_relational(self.peek_at(1)) => {
                self.advance();
                return Ok(Formula::False);
            }
            Tok::Ident(s) if names.macro_named(&s).is_some() && self.peek_at(1) == &Tok::LParen => {
                let m = names.macro_named(&s).unwrap().clone();
                self.advance();
                self.expect(Tok::LParen)?;
                let t = self.thread_ref(names)?;
                self.expect(Tok::RParen)?;
                return Ok(Formula::AtLoc(VarRef::pc(t), m.locs));
            }
            Tok::LParen => {
                let save = self.pos;
                self.advance();
                if let Ok(f) = self.formula(names) {
                    if self.eat(&Tok::RParen) && !continues_term(self.peek()) {
                        return Ok(f);
                    }
                }
                self.pos = save;
            }
            _ => {}
        }
        self.comparison(names)
    }

    fn comparison(&mut self, names: &Names) -> Result<Formula> {
        let lhs = self.expr(names)?;
        let op = match self.peek() {
            Tok::Eq => Some(CmpOp::Eq),
            Tok::Ne => Some(CmpOp::Ne),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Le => Some(CmpOp::Le),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Ge => Some(CmpOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let rhs = self.expr(names)?;
            let (lhs, rhs) = coerce_pair(lhs, rhs);
            let f = Formula::Cmp(op, lhs, rhs);
            f.check_sorts()?;
            return Ok(f);
        }
        if self.eat(&Tok::In) {
            let lsort = lhs.sort()?;
            if lsort == Sort::Loc {
                let v = match &lhs {
                    Expr::Var(v) => v.clone(),
                    _ => return Err(self.error("program counter before `in`")),
                };
                let locs = self.brace_list()?;
                let mut set = BTreeSet::new();
                for n in locs {
                    set.insert(u32::try_from(n).ok().filter(|n| *n >= 1).ok_or_else(|| self.error("location"))?);
                }
                return Ok(Formula::AtLoc(v, set));
            }
            let rhs = if self.peek() == &Tok::LBrace && self.brace_is_range() {
                let items = self.brace_list()?;
                items.into_iter().fold(Expr::EmptySet, |acc, n| {
                    let s = Expr::Singleton(Box::new(Expr::Int(n)));
                    if acc == Expr::EmptySet { s } else { Expr::Union(Box::new(acc), Box::new(s)) }
                })
            } else {
                self.expr(names)?
            };
            let f = Formula::Member(lhs, rhs);
            f.check_sorts()?;
            return Ok(f);
        }
        match lhs.sort()? {
            Sort::Bool => Ok(Formula::Atom(lhs)),
            _ => Err(self.error("comparison operator")),
        }
    }

    fn brace_is_range(&self) -> bool {
        let mut k = 1;
        loop {
            match self.peek_at(k) {
                Tok::DotDot => return true,
                Tok::RBrace | Tok::Eof => return false,
                _ => k += 1,
            }
        }
    }

    /// `{4, 5, 6}` or `{4..6}`, integer literals only.
    fn brace_list(&mut self) -> Result<Vec<i64>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let a = self.int()?;
            if self.eat(&Tok::DotDot) {
                let b = self.int()?;
                out.extend(a..=b);
            } else {
                out.push(a);
            }
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RBrace)?;
            return Ok(out);
        }
    }

    // ---- expressions ----------------------------------------------------

    pub fn expr(&mut self, names: &Names) -> Result<Expr> {
        let mut lhs = self.term(names)?;
        loop {
            let ctor: fn(Box<Expr>, Box<Expr>) -> Expr = match self.peek() {
                Tok::Plus => Expr::Add,
                Tok::Minus => Expr::Sub,
                Tok::Union => Expr::Union,
                Tok::SetMinus => Expr::Diff,
                _ => break,
            };
            self.advance();
            let rhs = self.term(names)?;
            lhs = ctor(Box::new(lhs), Box::new(rhs));
            lhs.sort()?;
        }
        Ok(lhs)
    }

    fn term(&mut self, names: &Names) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            Tok::Minus => {
                self.advance();
                let n = self.int()?;
                Ok(Expr::Int(-n))
            }
            Tok::TidLit(a) => {
                self.advance();
                Ok(Expr::Tid(ThreadRef::Const(a)))
            }
            Tok::Empty => {
                self.advance();
                Ok(Expr::EmptySet)
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr(names)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.advance();
                if self.eat(&Tok::RBrace) {
                    return Ok(Expr::EmptySet);
                }
                let mut acc: Option<Expr> = None;
                loop {
                    let e = self.expr(names)?;
                    let s = Expr::Singleton(Box::new(e));
                    s.sort()?;
                    acc = Some(match acc {
                        None => s,
                        Some(a) => Expr::Union(Box::new(a), Box::new(s)),
                    });
                    if self.eat(&Tok::Comma) {
                        continue;
                    }
                    self.expect(Tok::RBrace)?;
                    return Ok(acc.unwrap());
                }
            }
            Tok::Ident(name) => self.named_term(names, name),
            _ => Err(self.error("expression")),
        }
    }

    /// `UnknownVariable` located at the token `back` positions before the cursor.
    pub fn unknown(&self, name: impl Into<String>, back: usize) -> Error {
        let t = &self.toks[self.pos.saturating_sub(back)];
        Error::UnknownVariable { name: name.into(), at: Some(format!("{}:{}:{}", self.origin, t.line, t.col)) }
    }

    fn named_term(&mut self, names: &Names, name: String) -> Result<Expr> {
        let start = self.pos;
        self.advance();
        match name.as_str() {
            "true" => return Ok(Expr::Bool(true)),
            "false" => return Ok(Expr::Bool(false)),
            "setmin" if self.peek() == &Tok::LParen => {
                self.advance();
                let s = self.expr(names)?;
                self.expect(Tok::RParen)?;
                let e = Expr::SetMin(Box::new(s));
                e.sort()?;
                return Ok(e);
            }
            _ => {}
        }
        let primed = self.eat(&Tok::Prime);
        if let Some(sort) = names.local_sort(&name) {
            let index = match self.peek() {
                Tok::LParen => {
                    self.advance();
                    let t = self.thread_ref(names)?;
                    self.expect(Tok::RParen)?;
                    t
                }
                Tok::LBrack => {
                    self.advance();
                    let a = self.int()?;
                    self.expect(Tok::RBrack)?;
                    ThreadRef::Const(u32::try_from(a).map_err(|_| self.error("thread id"))?)
                }
                _ => match names.implicit_thread {
                    Some(me) => ThreadRef::Var(me.to_string()),
                    None => return Err(self.error(format!("thread index after local `{name}`"))),
                },
            };
            let mut v = VarRef::local(name, index, sort);
            v.primed = primed;
            return Ok(Expr::Var(v));
        }
        if let Some(d) = names.global(&name) {
            let mut v = VarRef::global(name, d.sort.clone());
            v.primed = primed;
            return Ok(Expr::Var(v));
        }
        if names.is_tid_var(&name) && !primed {
            return Ok(Expr::Tid(ThreadRef::Var(name)));
        }
        Err(self.unknown(name, self.pos - start))
    }

    fn thread_ref(&mut self, names: &Names) -> Result<ThreadRef> {
        match self.peek().clone() {
            Tok::TidLit(a) => {
                self.advance();
                Ok(ThreadRef::Const(a))
            }
            Tok::Ident(k) if names.is_tid_var(&k) => {
                self.advance();
                Ok(ThreadRef::Var(k))
            }
            Tok::Ident(k) => Err(self.unknown(k, 0)),
            _ => Err(self.error("thread variable")),
        }
    }
}

fn is_relational(t: &Tok) -> bool {
    matches!(t, Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
}

fn continues_term(t: &Tok) -> bool {
    is_relational(t) || matches!(t, Tok::Plus | Tok::Minus | Tok::Union | Tok::SetMinus | Tok::In)
}

/// Integer literals compared with a location-sorted term become locations.
pub fn coerce_to(e: Expr, target: &Sort) -> Expr {
    match (e, target) {
        (Expr::Int(n), Sort::Loc) if n >= 1 => Expr::Loc(n as u32),
        (e, _) => e,
    }
}

fn coerce_pair(a: Expr, b: Expr) -> (Expr, Expr) {
    let sa = a.sort().ok();
    let sb = b.sort().ok();
    match (sa, sb) {
        (Some(Sort::Loc), Some(Sort::Int)) => (a, coerce_to(b, &Sort::Loc)),
        (Some(Sort::Int), Some(Sort::Loc)) => (coerce_to(a, &Sort::Loc), b),
        _ => (a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::lex;

    fn decls() -> (Vec<VarDecl>, Vec<VarDecl>) {
        let g = vec![
            VarDecl { name: "avail".into(), sort: Sort::Int, init: None },
            VarDecl { name: "bag".into(), sort: Sort::SetInt, init: None },
        ];
        let l = vec![VarDecl { name: "ticket".into(), sort: Sort::Int, init: None }];
        (g, l)
    }

    fn parse(src: &str) -> Result<Formula> {
        let (g, l) = decls();
        let tids = vec!["i".to_string(), "j".to_string()];
        let macros = vec![Macro { name: "critical".into(), param: "k".into(), locs: [5, 6].into() }];
        let names = Names {
            globals: &g,
            locals: &l,
            tid_vars: &tids,
            implicit_thread: None,
            macros: &macros,
            locals_visible: true,
        };
        let toks = lex(src, "t")?;
        let mut p = Parser::new(&toks, "t");
        let f = p.formula(&names)?;
        if !p.at_eof() {
            return Err(p.error("end of formula"));
        }
        Ok(f)
    }

    #[test]
    fn macro_expands_to_location_set() {
        let f = parse("critical(i)").unwrap();
        assert_eq!(f, Formula::AtLoc(VarRef::pc(ThreadRef::var("i")), [5, 6].into()));
    }

    #[test]
    fn parenthesised_formula_versus_expression() {
        let f = parse("(ticket(i) + 1) = avail").unwrap();
        assert!(matches!(f, Formula::Cmp(CmpOp::Eq, Expr::Add(..), _)));
        let g = parse("!(critical(i) && critical(j))").unwrap();
        assert!(matches!(g, Formula::Not(_)));
    }

    #[test]
    fn pc_literal_is_a_location() {
        let f = parse("pc(i) = 4").unwrap();
        assert_eq!(f, Formula::at(ThreadRef::var("i"), 4));
        let g = parse("pc(i) in {4..6}").unwrap();
        assert_eq!(g, Formula::AtLoc(VarRef::pc(ThreadRef::var("i")), [4, 5, 6].into()));
    }

    #[test]
    fn implication_is_right_associative() {
        let f = parse("i = j -> i = j -> true").unwrap();
        match f {
            Formula::Implies(_, rhs) => assert!(matches!(*rhs, Formula::Implies(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn local_without_index_is_rejected_in_specs() {
        assert!(parse("ticket = 0").is_err());
        assert!(matches!(parse("ghost(i) = 0"), Err(Error::UnknownVariable { .. })));
    }

    #[test]
    fn ill_sorted_comparison_is_rejected() {
        assert!(matches!(parse("bag = 1"), Err(Error::Sort(_))));
        assert!(matches!(parse("bag < bag"), Err(Error::Sort(_))));
    }

    #[test]
    fn setmin_and_membership() {
        let f = parse("setmin(bag) = ticket(i) && ticket(j) in bag union {avail}").unwrap();
        assert_eq!(f.free_tids(), ["i".to_string(), "j".to_string()].into());
    }
}
