//! Intermediate representation shared by every other module: sorts, thread
//! references, expressions, quantifier-free formulas, transitions and
//! programs, plus substitution and array-update expansion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the distinguished program counter.
pub const PC: &str = "pc";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    Int,
    Loc,
    Tid,
    SetInt,
    /// Any declared type outside the core theory (heap cells, addresses, ...).
    Uninterpreted(String),
}

impl Sort {
    pub fn is_core(&self) -> bool {
        !matches!(self, Sort::Uninterpreted(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("bool"),
            Sort::Int => f.write_str("int"),
            Sort::Loc => f.write_str("loc"),
            Sort::Tid => f.write_str("tid"),
            Sort::SetInt => f.write_str("set"),
            Sort::Uninterpreted(n) => f.write_str(n),
        }
    }
}

/// A thread identifier term: a logical tid variable `k` or a concrete id `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThreadRef {
    Var(String),
    Const(u32),
}

impl ThreadRef {
    pub fn var(name: impl Into<String>) -> Self {
        ThreadRef::Var(name.into())
    }

    pub fn as_const(&self) -> Option<u32> {
        match self {
            ThreadRef::Const(a) => Some(*a),
            ThreadRef::Var(_) => None,
        }
    }
}

impl fmt::Display for ThreadRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThreadRef::Var(v) => f.write_str(v),
            ThreadRef::Const(a) => write!(f, "@{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    Global,
    /// `v(k)` when the index is a variable, `v[a]` when it is a constant.
    Local(ThreadRef),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub name: String,
    pub scope: Scope,
    pub primed: bool,
    pub sort: Sort,
}

impl VarRef {
    pub fn global(name: impl Into<String>, sort: Sort) -> Self {
        VarRef { name: name.into(), scope: Scope::Global, primed: false, sort }
    }

    pub fn local(name: impl Into<String>, index: ThreadRef, sort: Sort) -> Self {
        VarRef { name: name.into(), scope: Scope::Local(index), primed: false, sort }
    }

    pub fn pc(index: ThreadRef) -> Self {
        VarRef::local(PC, index, Sort::Loc)
    }

    pub fn primed(mut self) -> Self {
        self.primed = true;
        self
    }

    pub fn is_pc(&self) -> bool {
        self.name == PC && matches!(self.scope, Scope::Local(_))
    }

    pub fn index(&self) -> Option<&ThreadRef> {
        match &self.scope {
            Scope::Local(t) => Some(t),
            Scope::Global => None,
        }
    }

    /// The concrete identity of this reference, if it has no free tid variable.
    pub fn concrete(&self) -> Option<ConcreteVar> {
        let thread = match &self.scope {
            Scope::Global => None,
            Scope::Local(ThreadRef::Const(a)) => Some(*a),
            Scope::Local(ThreadRef::Var(_)) => return None,
        };
        Some(ConcreteVar { name: self.name.clone(), thread, primed: self.primed })
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.primed {
            f.write_str("'")?;
        }
        match &self.scope {
            Scope::Global => Ok(()),
            Scope::Local(ThreadRef::Var(k)) => write!(f, "({k})"),
            Scope::Local(ThreadRef::Const(a)) => write!(f, "[{a}]"),
        }
    }
}

/// A program variable of a concrete instance `S[N]`: `avail`, `ticket[1]`, `pc'[0]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteVar {
    pub name: String,
    pub thread: Option<u32>,
    pub primed: bool,
}

impl ConcreteVar {
    pub fn global(name: impl Into<String>) -> Self {
        ConcreteVar { name: name.into(), thread: None, primed: false }
    }

    pub fn local(name: impl Into<String>, thread: u32) -> Self {
        ConcreteVar { name: name.into(), thread: Some(thread), primed: false }
    }

    pub fn primed(mut self) -> Self {
        self.primed = true;
        self
    }

    pub fn unprimed(&self) -> Self {
        ConcreteVar { primed: false, ..self.clone() }
    }

    pub fn is_pc(&self) -> bool {
        self.name == PC && self.thread.is_some()
    }
}

impl fmt::Display for ConcreteVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.primed {
            f.write_str("'")?;
        }
        if let Some(a) = self.thread {
            write!(f, "[{a}]")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ConcreteVar {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let (head, thread) = match s.find('[') {
            Some(open) => {
                let close = s.rfind(']').filter(|c| *c == s.len() - 1).ok_or_else(|| format!("malformed variable `{s}`"))?;
                let idx = s[open + 1..close].trim().parse::<u32>().map_err(|_| format!("malformed thread index in `{s}`"))?;
                (&s[..open], Some(idx))
            }
            None => (s, None),
        };
        let (name, primed) = match head.strip_suffix('\'') {
            Some(n) => (n, true),
            None => (head, false),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(format!("malformed variable `{s}`"));
        }
        Ok(ConcreteVar { name: name.to_string(), thread, primed })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Loc(u32),
    Var(VarRef),
    Tid(ThreadRef),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    EmptySet,
    Singleton(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    SetMin(Box<Expr>),
}

impl Expr {
    pub fn var(v: VarRef) -> Self {
        Expr::Var(v)
    }

    /// Sort inference; fails on ill-sorted terms.
    pub fn sort(&self) -> Result<Sort> {
        match self {
            Expr::Int(_) => Ok(Sort::Int),
            Expr::Bool(_) => Ok(Sort::Bool),
            Expr::Loc(_) => Ok(Sort::Loc),
            Expr::Var(v) => Ok(v.sort.clone()),
            Expr::Tid(_) => Ok(Sort::Tid),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                expect_sort(a, &Sort::Int, self)?;
                expect_sort(b, &Sort::Int, self)?;
                Ok(Sort::Int)
            }
            Expr::EmptySet => Ok(Sort::SetInt),
            Expr::Singleton(e) => {
                expect_sort(e, &Sort::Int, self)?;
                Ok(Sort::SetInt)
            }
            Expr::Union(a, b) | Expr::Diff(a, b) => {
                expect_sort(a, &Sort::SetInt, self)?;
                expect_sort(b, &Sort::SetInt, self)?;
                Ok(Sort::SetInt)
            }
            Expr::SetMin(s) => {
                expect_sort(s, &Sort::SetInt, self)?;
                Ok(Sort::Int)
            }
        }
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Union(a, b) | Expr::Diff(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Singleton(e) | Expr::SetMin(e) => e.visit_vars(f),
            Expr::Int(_) | Expr::Bool(_) | Expr::Loc(_) | Expr::Tid(_) | Expr::EmptySet => {}
        }
    }

    pub fn visit_threads<'a>(&'a self, f: &mut impl FnMut(&'a ThreadRef)) {
        match self {
            Expr::Tid(t) => f(t),
            Expr::Var(v) => {
                if let Some(t) = v.index() {
                    f(t)
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Union(a, b) | Expr::Diff(a, b) => {
                a.visit_threads(f);
                b.visit_threads(f);
            }
            Expr::Singleton(e) | Expr::SetMin(e) => e.visit_threads(f),
            Expr::Int(_) | Expr::Bool(_) | Expr::Loc(_) | Expr::EmptySet => {}
        }
    }

    pub fn map_threads(&self, f: &impl Fn(&ThreadRef) -> ThreadRef) -> Expr {
        match self {
            Expr::Tid(t) => Expr::Tid(f(t)),
            Expr::Var(v) => Expr::Var(map_var_thread(v, f)),
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_threads(f)), Box::new(b.map_threads(f))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_threads(f)), Box::new(b.map_threads(f))),
            Expr::Union(a, b) => Expr::Union(Box::new(a.map_threads(f)), Box::new(b.map_threads(f))),
            Expr::Diff(a, b) => Expr::Diff(Box::new(a.map_threads(f)), Box::new(b.map_threads(f))),
            Expr::Singleton(e) => Expr::Singleton(Box::new(e.map_threads(f))),
            Expr::SetMin(e) => Expr::SetMin(Box::new(e.map_threads(f))),
            Expr::Int(_) | Expr::Bool(_) | Expr::Loc(_) | Expr::EmptySet => self.clone(),
        }
    }

    /// Replaces every program variable by `f(var)`.
    pub fn map_vars(&self, f: &impl Fn(&VarRef) -> Expr) -> Expr {
        match self {
            Expr::Var(v) => f(v),
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Union(a, b) => Expr::Union(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Diff(a, b) => Expr::Diff(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Singleton(e) => Expr::Singleton(Box::new(e.map_vars(f))),
            Expr::SetMin(e) => Expr::SetMin(Box::new(e.map_vars(f))),
            Expr::Int(_) | Expr::Bool(_) | Expr::Loc(_) | Expr::Tid(_) | Expr::EmptySet => self.clone(),
        }
    }

    pub fn prime(&self) -> Expr {
        self.map_vars(&|v| Expr::Var(v.clone().primed()))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Expr::Int(_) | Expr::Bool(_) | Expr::Loc(_) | Expr::EmptySet)
            || matches!(self, Expr::Tid(ThreadRef::Const(_)))
    }
}

fn map_var_thread(v: &VarRef, f: &impl Fn(&ThreadRef) -> ThreadRef) -> VarRef {
    match &v.scope {
        Scope::Global => v.clone(),
        Scope::Local(t) => VarRef { scope: Scope::Local(f(t)), ..v.clone() },
    }
}

fn expect_sort(e: &Expr, want: &Sort, ctx: &Expr) -> Result<()> {
    let got = e.sort()?;
    if &got == want {
        Ok(())
    } else {
        Err(Error::Sort(format!("`{ctx}`: expected {want} operand, found {got} `{e}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Quantifier-free formula. `Update` and `Frame` are the parametrized
/// (array) forms of effects and frame conditions on local variables; they
/// disappear once every thread index is concrete and [`expand_arrays`] ran.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    /// A Bool-sorted expression used as a formula.
    Atom(Expr),
    Cmp(CmpOp, Expr, Expr),
    Member(Expr, Expr),
    /// `pc(k) ∈ {ℓ₁, ..}`.
    AtLoc(VarRef, BTreeSet<u32>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `var' = var{index ← value}`.
    Update { var: String, sort: Sort, index: ThreadRef, value: Expr },
    /// `var' = var` for a local variable, extensionally over all threads.
    Frame { var: String, sort: Sort },
}

impl Formula {
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::False => {}
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn ne(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(CmpOp::Ne, a, b)
    }

    pub fn at(index: ThreadRef, loc: u32) -> Formula {
        Formula::eq(Expr::Var(VarRef::pc(index)), Expr::Loc(loc))
    }

    /// Checks that every atom is well-sorted.
    pub fn check_sorts(&self) -> Result<()> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Atom(e) => {
                let s = e.sort()?;
                if s == Sort::Bool {
                    Ok(())
                } else {
                    Err(Error::Sort(format!("`{e}` has sort {s}, expected bool")))
                }
            }
            Formula::Cmp(op, a, b) => {
                let (sa, sb) = (a.sort()?, b.sort()?);
                if sa != sb {
                    return Err(Error::Sort(format!("`{self}`: cannot compare {sa} with {sb}")));
                }
                if !op.is_equality() && !matches!(sa, Sort::Int | Sort::Loc | Sort::Tid) {
                    return Err(Error::Sort(format!("`{self}`: ordering is undefined on {sa}")));
                }
                Ok(())
            }
            Formula::Member(e, s) => {
                expect_sort(e, &Sort::Int, e)?;
                let ss = s.sort()?;
                if ss == Sort::SetInt {
                    Ok(())
                } else {
                    Err(Error::Sort(format!("`{self}`: membership needs a set, found {ss}")))
                }
            }
            Formula::AtLoc(v, _) => {
                if v.sort == Sort::Loc {
                    Ok(())
                } else {
                    Err(Error::Sort(format!("`{v}` is not a location")))
                }
            }
            Formula::Not(f) => f.check_sorts(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| f.check_sorts()),
            Formula::Implies(a, b) => {
                a.check_sorts()?;
                b.check_sorts()
            }
            Formula::Update { sort, value, .. } => {
                let vs = value.sort()?;
                if &vs == sort {
                    Ok(())
                } else {
                    Err(Error::Sort(format!("`{self}`: assigning {vs} to {sort}")))
                }
            }
            Formula::Frame { .. } => Ok(()),
        }
    }

    pub fn visit_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Formula::True | Formula::False | Formula::Frame { .. } => {}
            Formula::Atom(e) => f(e),
            Formula::Cmp(_, a, b) | Formula::Member(a, b) => {
                f(a);
                f(b);
            }
            Formula::AtLoc(..) => {}
            Formula::Not(g) => g.visit_exprs(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_exprs(f)),
            Formula::Implies(a, b) => {
                a.visit_exprs(f);
                b.visit_exprs(f);
            }
            Formula::Update { value, .. } => f(value),
        }
    }

    /// Visits every thread reference, including the implicit ones of
    /// `AtLoc` and `Update`.
    pub fn visit_threads<'a>(&'a self, f: &mut impl FnMut(&'a ThreadRef)) {
        match self {
            Formula::AtLoc(v, _) => {
                if let Some(t) = v.index() {
                    f(t)
                }
            }
            Formula::Update { index, value, .. } => {
                f(index);
                value.visit_threads(f);
            }
            Formula::Not(g) => g.visit_threads(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_threads(f)),
            Formula::Implies(a, b) => {
                a.visit_threads(f);
                b.visit_threads(f);
            }
            _ => self.visit_exprs(&mut |e| e.visit_threads(f)),
        }
    }

    /// Every variable reference, including the pc of `AtLoc`.
    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            Formula::AtLoc(v, _) => f(v),
            Formula::Not(g) => g.visit_vars(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_vars(f)),
            Formula::Implies(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            _ => self.visit_exprs(&mut |e| e.visit_vars(f)),
        }
    }

    pub fn map_threads(&self, f: &impl Fn(&ThreadRef) -> ThreadRef) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Frame { .. } => self.clone(),
            Formula::Atom(e) => Formula::Atom(e.map_threads(f)),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.map_threads(f), b.map_threads(f)),
            Formula::Member(a, b) => Formula::Member(a.map_threads(f), b.map_threads(f)),
            Formula::AtLoc(v, locs) => Formula::AtLoc(map_var_thread(v, f), locs.clone()),
            Formula::Not(g) => Formula::Not(Box::new(g.map_threads(f))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_threads(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_threads(f)).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.map_threads(f)), Box::new(b.map_threads(f))),
            Formula::Update { var, sort, index, value } => Formula::Update {
                var: var.clone(),
                sort: sort.clone(),
                index: f(index),
                value: value.map_threads(f),
            },
        }
    }

    pub fn map_exprs(&self, f: &impl Fn(&Expr) -> Expr) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Frame { .. } | Formula::AtLoc(..) => self.clone(),
            Formula::Atom(e) => Formula::Atom(f(e)),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, f(a), f(b)),
            Formula::Member(a, b) => Formula::Member(f(a), f(b)),
            Formula::Not(g) => Formula::Not(Box::new(g.map_exprs(f))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_exprs(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_exprs(f)).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.map_exprs(f)), Box::new(b.map_exprs(f))),
            Formula::Update { var, sort, index, value } => {
                Formula::Update { var: var.clone(), sort: sort.clone(), index: index.clone(), value: f(value) }
            }
        }
    }

    /// Primes every variable (`φ'`).
    pub fn prime(&self) -> Formula {
        match self {
            Formula::AtLoc(v, locs) => Formula::AtLoc(v.clone().primed(), locs.clone()),
            Formula::Not(g) => Formula::Not(Box::new(g.prime())),
            Formula::And(gs) => Formula::And(gs.iter().map(Formula::prime).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(Formula::prime).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.prime()), Box::new(b.prime())),
            _ => self.map_exprs(&Expr::prime),
        }
    }

    /// `Var(φ)`: the tid variables occurring free.
    pub fn free_tids(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_threads(&mut |t| {
            if let ThreadRef::Var(k) = t {
                out.insert(k.clone());
            }
        });
        out
    }

    pub fn index(&self) -> usize {
        self.free_tids().len()
    }

    pub fn const_threads(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.visit_threads(&mut |t| {
            if let ThreadRef::Const(a) = t {
                out.insert(*a);
            }
        });
        out
    }

    /// Variable names read by the formula (thread indices ignored).
    pub fn read_set(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.name.clone());
        });
        out
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            Formula::True => Vec::new(),
            other => vec![other],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        true
    }

    pub fn has_array_terms(&self) -> bool {
        match self {
            Formula::Update { .. } | Formula::Frame { .. } => true,
            Formula::Not(g) => g.has_array_terms(),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().any(Formula::has_array_terms),
            Formula::Implies(a, b) => a.has_array_terms() || b.has_array_terms(),
            _ => {
                let mut found = false;
                self.visit_threads(&mut |t| found |= matches!(t, ThreadRef::Var(_)));
                found
            }
        }
    }
}

/// A substitution of tid variables by tid variables or constants. It need
/// not be injective.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Substitution {
    pub map: BTreeMap<String, ThreadRef>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, ThreadRef)>,
        K: Into<String>,
    {
        Substitution { map: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }

    /// The swap `π_ij` on tid variables.
    pub fn swap(i: &str, j: &str) -> Self {
        Substitution::from_pairs([(i, ThreadRef::var(j)), (j, ThreadRef::var(i))])
    }

    pub fn insert(&mut self, k: impl Into<String>, v: ThreadRef) {
        self.map.insert(k.into(), v);
    }

    pub fn get(&self, k: &str) -> Option<&ThreadRef> {
        self.map.get(k)
    }

    /// Total over `vars` with constant range.
    pub fn is_total_const(&self, vars: &BTreeSet<String>) -> bool {
        vars.iter().all(|v| matches!(self.map.get(v), Some(ThreadRef::Const(_))))
    }

    pub fn apply_thread(&self, t: &ThreadRef) -> ThreadRef {
        match t {
            ThreadRef::Var(k) => self.map.get(k).cloned().unwrap_or_else(|| t.clone()),
            ThreadRef::Const(_) => t.clone(),
        }
    }

    pub fn apply(&self, f: &Formula) -> Formula {
        if self.map.is_empty() {
            return f.clone();
        }
        f.map_threads(&|t| self.apply_thread(t))
    }

    pub fn apply_expr(&self, e: &Expr) -> Expr {
        e.map_threads(&|t| self.apply_thread(t))
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.map.iter().map(|(k, v)| format!("{k}->{}", thread_plain(v))).collect();
        parts.join(",")
    }
}

fn thread_plain(t: &ThreadRef) -> String {
    match t {
        ThreadRef::Var(v) => v.clone(),
        ThreadRef::Const(a) => a.to_string(),
    }
}

/// Simultaneous substitution of free tid variables.
pub fn apply_subst(f: &Formula, s: &Substitution) -> Formula {
    s.apply(f)
}

/// Eliminates `Update` and `Frame` for an instance with threads `0..threads`:
/// `w = v{a ← e}` becomes `w[a] = e ∧ ⋀_{b≠a} w[b] = v[b]`.
/// Array forms whose index is still a variable are left untouched.
pub fn expand_arrays(f: &Formula, threads: u32) -> Formula {
    match f {
        Formula::Update { var, sort, index: ThreadRef::Const(a), value } => {
            let mut parts = Vec::with_capacity(threads as usize);
            for b in 0..threads {
                let post = Expr::Var(VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone()).primed());
                if b == *a {
                    parts.push(Formula::eq(post, value.clone()));
                } else {
                    let pre = Expr::Var(VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone()));
                    parts.push(Formula::eq(post, pre));
                }
            }
            Formula::and(parts)
        }
        Formula::Frame { var, sort } => {
            let parts = (0..threads)
                .map(|b| {
                    let v = VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone());
                    Formula::eq(Expr::Var(v.clone().primed()), Expr::Var(v))
                })
                .collect();
            Formula::and(parts)
        }
        Formula::Not(g) => Formula::Not(Box::new(expand_arrays(g, threads))),
        Formula::And(gs) => Formula::and(gs.iter().map(|g| expand_arrays(g, threads)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| expand_arrays(g, threads)).collect()),
        Formula::Implies(a, b) => {
            Formula::Implies(Box::new(expand_arrays(a, threads)), Box::new(expand_arrays(b, threads)))
        }
        other => other.clone(),
    }
}

/// `α(φ)` for an instance of `threads` threads: substitution followed by
/// array-update expansion.
pub fn concretize_formula(f: &Formula, alpha: &Substitution, threads: u32) -> Formula {
    expand_arrays(&alpha.apply(f), threads)
}

/// Declaration of a global or local program variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    /// `None` leaves the initial value unconstrained.
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assign {
    pub var: VarRef,
    pub value: Expr,
}

/// Statement form a transition was compiled from; used for printing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Skip(Option<String>),
    Assign,
    Await,
    IfThen,
    IfElse,
    Goto,
    Loop,
    EndLoop,
}

/// Identifies a transition: its location and, for conditionals, the arm.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionId {
    pub loc: u32,
    pub arm: u8,
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arm == 0 {
            write!(f, "t{}", self.loc)
        } else {
            write!(f, "t{}.{}", self.loc, self.arm)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: TransitionId,
    /// The tid variable naming the executing thread in guard and effect.
    pub tid_param: String,
    pub guard: Formula,
    /// Simultaneous assignments; right-hand sides read the pre-state.
    pub effect: Vec<Assign>,
    pub next: u32,
    /// Variables left unchanged (the `pres` frame), excluding the pc.
    pub preserved: BTreeSet<String>,
    pub kind: StmtKind,
}

impl Transition {
    pub fn location(&self) -> u32 {
        self.id.loc
    }

    /// Variable names written, including the pc.
    pub fn write_set(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.effect.iter().map(|a| a.var.name.clone()).collect();
        out.insert(PC.to_string());
        out
    }

    /// The parametrized relation `τ_ℓ(k)` for acting thread `k`.
    pub fn relation(&self, program: &ParamProgram, acting: &ThreadRef) -> Formula {
        let me = Substitution::from_pairs([(self.tid_param.clone(), acting.clone())]);
        let mut parts = vec![
            Formula::at(acting.clone(), self.id.loc),
            Formula::Update { var: PC.into(), sort: Sort::Loc, index: acting.clone(), value: Expr::Loc(self.next) },
        ];
        let guard = me.apply(&self.guard);
        if guard != Formula::True {
            parts.push(guard);
        }
        for a in &self.effect {
            let value = me.apply_expr(&a.value);
            match &a.var.scope {
                Scope::Global => {
                    parts.push(Formula::eq(Expr::Var(a.var.clone().primed()), value));
                }
                Scope::Local(_) => parts.push(Formula::Update {
                    var: a.var.name.clone(),
                    sort: a.var.sort.clone(),
                    index: acting.clone(),
                    value,
                }),
            }
        }
        for g in &program.globals {
            if self.preserved.contains(&g.name) {
                let v = VarRef::global(g.name.clone(), g.sort.clone());
                parts.push(Formula::eq(Expr::Var(v.clone().primed()), Expr::Var(v)));
            }
        }
        for l in &program.locals {
            if self.preserved.contains(&l.name) {
                parts.push(Formula::Frame { var: l.name.clone(), sort: l.sort.clone() });
            }
        }
        Formula::And(parts)
    }
}

/// A parametrized program: declarations plus one transition per location
/// (two for conditionals).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamProgram {
    pub name: String,
    pub globals: Vec<VarDecl>,
    /// Locals excluding the pc.
    pub locals: Vec<VarDecl>,
    pub transitions: Vec<Transition>,
    /// Θ_g, over globals only.
    pub theta_global: Formula,
    /// Θ_l, over globals and the locals of thread `tid_param`.
    pub theta_local: Formula,
    pub tid_param: String,
}

impl ParamProgram {
    /// Highest location `L` (locations range over `1..=L`).
    pub fn max_loc(&self) -> u32 {
        self.transitions.iter().flat_map(|t| [t.id.loc, t.next]).max().unwrap_or(1)
    }

    pub fn global(&self, name: &str) -> Option<&VarDecl> {
        self.globals.iter().find(|d| d.name == name)
    }

    pub fn local(&self, name: &str) -> Option<&VarDecl> {
        self.locals.iter().find(|d| d.name == name)
    }

    pub fn is_local(&self, name: &str) -> bool {
        name == PC || self.local(name).is_some()
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        if name == PC {
            return Some(Sort::Loc);
        }
        self.global(name).or_else(|| self.local(name)).map(|d| d.sort.clone())
    }

    pub fn transitions_at(&self, loc: u32) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.id.loc == loc)
    }

    /// Θ_l(k): Θ_l with every local read at thread `k`.
    pub fn theta_local_for(&self, k: &ThreadRef) -> Formula {
        Substitution::from_pairs([(self.tid_param.clone(), k.clone())]).apply(&self.theta_local)
    }

    /// Variables of the instance `S[threads]` in canonical order: globals,
    /// then per thread the pc followed by the locals.
    pub fn instance_vars(&self, threads: u32) -> Vec<ConcreteVar> {
        let mut out: Vec<ConcreteVar> = self.globals.iter().map(|g| ConcreteVar::global(g.name.clone())).collect();
        for a in 0..threads {
            out.push(ConcreteVar::local(PC, a));
            out.extend(self.locals.iter().map(|l| ConcreteVar::local(l.name.clone(), a)));
        }
        out
    }

    pub fn uses_only_core_sorts(&self) -> bool {
        self.globals.iter().chain(self.locals.iter()).all(|d| d.sort.is_core())
    }
}

/// `Θ(X) = Θ_g ∧ ⋀_{k∈X} Θ_l(k)`.
pub fn build_initial(p: &ParamProgram, tids: &[String]) -> Formula {
    let mut parts = vec![p.theta_global.clone()];
    for k in tids {
        parts.push(p.theta_local_for(&ThreadRef::Var(k.clone())));
    }
    Formula::and(parts)
}

fn frame_eq(p: &ParamProgram, name: &str, thread: Option<u32>) -> Result<Formula> {
    let sort = p.sort_of(name).ok_or_else(|| Error::unknown_variable(name.to_string()))?;
    let v = match thread {
        None => VarRef::global(name, sort),
        Some(a) => VarRef::local(name, ThreadRef::Const(a), sort),
    };
    Ok(Formula::eq(Expr::Var(v.clone().primed()), Expr::Var(v)))
}

/// `pres(names)` over the listed threads: `v' = v` for globals and
/// `v'[a] = v[a]` for locals. Globals come first, then locals thread by thread.
pub fn pres_expand(p: &ParamProgram, preserved: &BTreeSet<String>, threads: &[u32]) -> Result<Formula> {
    for n in preserved {
        if p.sort_of(n).is_none() {
            return Err(Error::unknown_variable(n.clone()));
        }
    }
    let mut parts = Vec::new();
    for g in &p.globals {
        if preserved.contains(&g.name) {
            parts.push(frame_eq(p, &g.name, None)?);
        }
    }
    for &a in threads {
        if preserved.contains(PC) {
            parts.push(frame_eq(p, PC, Some(a))?);
        }
        for l in &p.locals {
            if preserved.contains(&l.name) {
                parts.push(frame_eq(p, &l.name, Some(a))?);
            }
        }
    }
    Ok(Formula::and(parts))
}

/// `pres(V ∖ excluded)` for the instance `S[threads]`.
pub fn pres_complement(p: &ParamProgram, threads: u32, excluded: &[ConcreteVar]) -> Result<Formula> {
    for x in excluded {
        if p.sort_of(&x.name).is_none() {
            return Err(Error::unknown_variable(x.to_string()));
        }
    }
    let parts = p
        .instance_vars(threads)
        .into_iter()
        .filter(|v| !excluded.contains(v))
        .map(|v| frame_eq(p, &v.name, v.thread))
        .collect::<Result<Vec<_>>>()?;
    Ok(Formula::and(parts))
}

/// Enumerates all maps `vars → [0, range)` in lexicographic order.
pub fn all_assignments(vars: &[String], range: u32) -> Vec<Substitution> {
    let mut out = Vec::new();
    let n = vars.len();
    if range == 0 && n > 0 {
        return out;
    }
    let mut digits = vec![0u32; n];
    loop {
        out.push(Substitution::from_pairs(
            vars.iter().cloned().zip(digits.iter().map(|d| ThreadRef::Const(*d))),
        ));
        let mut pos = n;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < range {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// All total substitutions `from → to` (variables to variables).
pub fn all_var_maps(from: &[String], to: &[String]) -> Vec<Substitution> {
    let idx = all_assignments(from, to.len() as u32);
    idx.into_iter()
        .map(|s| {
            Substitution::from_pairs(s.map.into_iter().map(|(k, v)| {
                let i = v.as_const().unwrap() as usize;
                (k, ThreadRef::Var(to[i].clone()))
            }))
        })
        .collect()
}

fn needs_parens_expr(e: &Expr) -> bool {
    matches!(e, Expr::Add(..) | Expr::Sub(..) | Expr::Union(..) | Expr::Diff(..))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| {
            write!(f, "{a} {op} ")?;
            if needs_parens_expr(b) {
                write!(f, "({b})")
            } else {
                write!(f, "{b}")
            }
        };
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Loc(l) => write!(f, "{l}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Tid(t) => write!(f, "{t}"),
            Expr::Add(a, b) => bin(f, a, "+", b),
            Expr::Sub(a, b) => bin(f, a, "-", b),
            Expr::Union(a, b) => bin(f, a, "union", b),
            Expr::Diff(a, b) => bin(f, a, "minus", b),
            Expr::EmptySet => f.write_str("{}"),
            Expr::Singleton(e) => write!(f, "{{{e}}}"),
            Expr::SetMin(e) => write!(f, "setmin({e})"),
        }
    }
}

fn is_compound(f: &Formula) -> bool {
    matches!(f, Formula::And(_) | Formula::Or(_) | Formula::Implies(..) | Formula::Update { .. } | Formula::Frame { .. })
}

fn write_locs(f: &mut fmt::Formatter<'_>, locs: &BTreeSet<u32>) -> fmt::Result {
    f.write_str("{")?;
    for (n, l) in locs.iter().enumerate() {
        if n > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{l}")?;
    }
    f.write_str("}")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, g: &Formula| {
            if is_compound(g) {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(e) => write!(f, "{e}"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Member(a, b) => write!(f, "{a} in {b}"),
            Formula::AtLoc(v, locs) => {
                write!(f, "{v} in ")?;
                write_locs(f, locs)
            }
            Formula::Not(g) => match g.as_ref() {
                Formula::True | Formula::False | Formula::Atom(_) | Formula::Not(_) => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Formula::And(gs) | Formula::Or(gs) => {
                if gs.is_empty() {
                    return f.write_str(if matches!(self, Formula::And(_)) { "true" } else { "false" });
                }
                let op = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (n, g) in gs.iter().enumerate() {
                    if n > 0 {
                        f.write_str(op)?;
                    }
                    sub(f, g)?;
                }
                Ok(())
            }
            Formula::Implies(a, b) => {
                sub(f, a)?;
                f.write_str(" -> ")?;
                sub(f, b)
            }
            Formula::Update { var, index, value, .. } => write!(f, "{var}' = {var}{{{index} <- {value}}}"),
            Formula::Frame { var, .. } => write!(f, "{var}' = {var}"),
        }
    }
}
