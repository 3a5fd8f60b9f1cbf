//! Evaluation of concrete formulas under a valuation of concrete variables.
//!
//! `setmin` of the empty set is `+∞`: it absorbs arithmetic, equals only
//! itself, exceeds every integer and belongs to no set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ir::{CmpOp, ConcreteVar, Expr, Formula, Sort, ThreadRef, VarRef};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Loc(u32),
    Tid(u32),
    Set(BTreeSet<i64>),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
            Value::Loc(_) => Sort::Loc,
            Value::Tid(_) => Sort::Tid,
            Value::Set(_) => Sort::SetInt,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(n) => (*n).into(),
            Value::Bool(b) => (*b).into(),
            Value::Loc(l) | Value::Tid(l) => (*l).into(),
            Value::Set(s) => s.iter().copied().collect::<Vec<_>>().into(),
        }
    }

    /// Reads a JSON value at the given sort.
    pub fn from_json(v: &serde_json::Value, sort: &Sort) -> Option<Value> {
        match sort {
            Sort::Int => v.as_i64().map(Value::Int),
            Sort::Bool => v.as_bool().map(Value::Bool),
            Sort::Loc => v.as_u64().and_then(|n| u32::try_from(n).ok()).map(Value::Loc),
            Sort::Tid => v.as_u64().and_then(|n| u32::try_from(n).ok()).map(Value::Tid),
            Sort::SetInt => v.as_array().and_then(|xs| xs.iter().map(|x| x.as_i64()).collect::<Option<BTreeSet<_>>>()).map(Value::Set),
            Sort::Uninterpreted(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Loc(l) => write!(f, "{l}"),
            Value::Tid(t) => write!(f, "@{t}"),
            Value::Set(s) => {
                let xs: Vec<String> = s.iter().map(i64::to_string).collect();
                write!(f, "{{{}}}", xs.join(", "))
            }
        }
    }
}

pub type Valuation = BTreeMap<ConcreteVar, Value>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("free thread variable `{0}`")]
    FreeThread(String),
    #[error("ill-sorted operand in `{0}`")]
    Sort(String),
    #[error("integer overflow in `{0}`")]
    Overflow(String),
}

/// Result of evaluating an expression; `Inf` only arises from `setmin(∅)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EVal {
    Val(Value),
    Inf,
}

fn lookup(v: &VarRef, env: &Valuation) -> Result<Value, EvalError> {
    let key = match &v.scope {
        crate::ir::Scope::Local(ThreadRef::Var(k)) => return Err(EvalError::FreeThread(k.clone())),
        _ => v.concrete().unwrap(),
    };
    env.get(&key).cloned().ok_or_else(|| EvalError::Unbound(key.to_string()))
}

fn int_of(e: &Expr, v: EVal) -> Result<Option<i64>, EvalError> {
    match v {
        EVal::Inf => Ok(None),
        EVal::Val(Value::Int(n)) => Ok(Some(n)),
        _ => Err(EvalError::Sort(e.to_string())),
    }
}

fn set_of(e: &Expr, v: EVal) -> Result<BTreeSet<i64>, EvalError> {
    match v {
        EVal::Val(Value::Set(s)) => Ok(s),
        _ => Err(EvalError::Sort(e.to_string())),
    }
}

pub fn eval_expr(e: &Expr, env: &Valuation) -> Result<EVal, EvalError> {
    let val = |v: Value| Ok(EVal::Val(v));
    match e {
        Expr::Int(n) => val(Value::Int(*n)),
        Expr::Bool(b) => val(Value::Bool(*b)),
        Expr::Loc(l) => val(Value::Loc(*l)),
        Expr::Tid(ThreadRef::Const(a)) => val(Value::Tid(*a)),
        Expr::Tid(ThreadRef::Var(k)) => Err(EvalError::FreeThread(k.clone())),
        Expr::Var(v) => val(lookup(v, env)?),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let x = int_of(a, eval_expr(a, env)?)?;
            let y = int_of(b, eval_expr(b, env)?)?;
            match (x, y) {
                (Some(x), Some(y)) => {
                    let r = if matches!(e, Expr::Add(..)) { x.checked_add(y) } else { x.checked_sub(y) };
                    r.map(|n| EVal::Val(Value::Int(n))).ok_or_else(|| EvalError::Overflow(e.to_string()))
                }
                _ => Ok(EVal::Inf),
            }
        }
        Expr::EmptySet => val(Value::Set(BTreeSet::new())),
        Expr::Singleton(x) => {
            let mut s = BTreeSet::new();
            if let Some(n) = int_of(x, eval_expr(x, env)?)? {
                s.insert(n);
            }
            val(Value::Set(s))
        }
        Expr::Union(a, b) => {
            let mut s = set_of(a, eval_expr(a, env)?)?;
            s.extend(set_of(b, eval_expr(b, env)?)?);
            val(Value::Set(s))
        }
        Expr::Diff(a, b) => {
            let s = set_of(a, eval_expr(a, env)?)?;
            let t = set_of(b, eval_expr(b, env)?)?;
            val(Value::Set(s.difference(&t).copied().collect()))
        }
        Expr::SetMin(x) => {
            let s = set_of(x, eval_expr(x, env)?)?;
            Ok(s.iter().next().map(|n| EVal::Val(Value::Int(*n))).unwrap_or(EVal::Inf))
        }
    }
}

fn compare(op: CmpOp, a: &EVal, b: &EVal, ctx: &Formula) -> Result<bool, EvalError> {
    use EVal::*;
    let lt = |a: &EVal, b: &EVal| -> Result<bool, EvalError> {
        match (a, b) {
            (Inf, _) => Ok(false),
            (Val(_), Inf) => Ok(true),
            (Val(x), Val(y)) => {
                if x.sort() != y.sort() {
                    return Err(EvalError::Sort(ctx.to_string()));
                }
                Ok(x < y)
            }
        }
    };
    let eq = |a: &EVal, b: &EVal| -> Result<bool, EvalError> {
        match (a, b) {
            (Inf, Inf) => Ok(true),
            (Inf, _) | (_, Inf) => Ok(false),
            (Val(x), Val(y)) => {
                if x.sort() != y.sort() {
                    return Err(EvalError::Sort(ctx.to_string()));
                }
                Ok(x == y)
            }
        }
    };
    Ok(match op {
        CmpOp::Eq => eq(a, b)?,
        CmpOp::Ne => !eq(a, b)?,
        CmpOp::Lt => lt(a, b)?,
        CmpOp::Gt => lt(b, a)?,
        CmpOp::Le => !lt(b, a)?,
        CmpOp::Ge => !lt(a, b)?,
    })
}

fn threads_of(env: &Valuation, name: &str) -> Vec<u32> {
    let mut ts: Vec<u32> = env.keys().filter(|k| k.name == name && !k.primed).filter_map(|k| k.thread).collect();
    ts.dedup();
    ts
}

pub fn eval_formula(f: &Formula, env: &Valuation) -> Result<bool, EvalError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Atom(e) => match eval_expr(e, env)? {
            EVal::Val(Value::Bool(b)) => Ok(b),
            _ => Err(EvalError::Sort(f.to_string())),
        },
        Formula::Cmp(op, a, b) => compare(*op, &eval_expr(a, env)?, &eval_expr(b, env)?, f),
        Formula::Member(a, b) => {
            let x = eval_expr(a, env)?;
            let s = set_of(b, eval_expr(b, env)?)?;
            Ok(match x {
                EVal::Inf => false,
                EVal::Val(Value::Int(n)) => s.contains(&n),
                _ => return Err(EvalError::Sort(f.to_string())),
            })
        }
        Formula::AtLoc(v, locs) => match lookup(v, env)? {
            Value::Loc(l) => Ok(locs.contains(&l)),
            _ => Err(EvalError::Sort(f.to_string())),
        },
        Formula::Not(g) => Ok(!eval_formula(g, env)?),
        Formula::And(gs) => {
            for g in gs {
                if !eval_formula(g, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_formula(g, env)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Implies(a, b) => Ok(!eval_formula(a, env)? || eval_formula(b, env)?),
        Formula::Update { var, sort, index, value } => {
            let a = match index {
                ThreadRef::Const(a) => *a,
                ThreadRef::Var(k) => return Err(EvalError::FreeThread(k.clone())),
            };
            let new = eval_expr(value, env)?;
            for b in threads_of(env, var) {
                let post = lookup(&VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone()).primed(), env)?;
                let expected = if b == a {
                    new.clone()
                } else {
                    EVal::Val(lookup(&VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone()), env)?)
                };
                if EVal::Val(post) != expected {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Frame { var, sort } => {
            for b in threads_of(env, var) {
                let r = VarRef::local(var.clone(), ThreadRef::Const(b), sort.clone());
                if lookup(&r.clone().primed(), env)? != lookup(&r, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, Value)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.parse::<ConcreteVar>().unwrap(), v.clone())).collect()
    }

    fn var(name: &str, sort: Sort) -> Expr {
        Expr::Var(VarRef::global(name, sort))
    }

    #[test]
    fn setmin_of_empty_is_infinite() {
        let e = env(&[("bag", Value::Set(BTreeSet::new())), ("x", Value::Int(7))]);
        let m = Expr::SetMin(Box::new(var("bag", Sort::SetInt)));
        assert_eq!(eval_expr(&m, &e).unwrap(), EVal::Inf);
        let eq = Formula::eq(m.clone(), var("x", Sort::Int));
        assert!(!eval_formula(&eq, &e).unwrap());
        let lt = Formula::Cmp(CmpOp::Lt, var("x", Sort::Int), m.clone());
        assert!(eval_formula(&lt, &e).unwrap());
        assert!(eval_formula(&Formula::eq(m.clone(), m.clone()), &e).unwrap());
        let plus = Expr::Add(Box::new(m.clone()), Box::new(Expr::Int(1)));
        assert_eq!(eval_expr(&plus, &e).unwrap(), EVal::Inf);
    }

    #[test]
    fn set_operations() {
        let e = env(&[("bag", Value::Set([3, 5].into())), ("a", Value::Int(1))]);
        let u = Expr::Union(Box::new(var("bag", Sort::SetInt)), Box::new(Expr::Singleton(Box::new(var("a", Sort::Int)))));
        assert_eq!(eval_expr(&Expr::SetMin(Box::new(u.clone())), &e).unwrap(), EVal::Val(Value::Int(1)));
        let d = Expr::Diff(Box::new(u), Box::new(Expr::Singleton(Box::new(Expr::Int(3)))));
        assert_eq!(eval_expr(&d, &e).unwrap(), EVal::Val(Value::Set([1, 5].into())));
    }

    #[test]
    fn unbound_and_free_threads_are_errors() {
        let f = Formula::at(ThreadRef::Const(2), 1);
        assert_eq!(eval_formula(&f, &Valuation::new()), Err(EvalError::Unbound("pc[2]".into())));
        let g = Formula::at(ThreadRef::var("i"), 1);
        assert_eq!(eval_formula(&g, &Valuation::new()), Err(EvalError::FreeThread("i".into())));
    }

    #[test]
    fn update_against_expansion() {
        let e = env(&[("pc[0]", Value::Loc(4)), ("pc[1]", Value::Loc(2)), ("pc'[0]", Value::Loc(5)), ("pc'[1]", Value::Loc(2))]);
        let u = Formula::Update { var: "pc".into(), sort: Sort::Loc, index: ThreadRef::Const(0), value: Expr::Loc(5) };
        assert!(eval_formula(&u, &e).unwrap());
        assert!(eval_formula(&crate::ir::expand_arrays(&u, 2), &e).unwrap());
    }

    #[test]
    fn json_round_trip() {
        for (v, s) in [(Value::Int(-3), Sort::Int), (Value::Loc(4), Sort::Loc), (Value::Set([1, 2].into()), Sort::SetInt)] {
            assert_eq!(Value::from_json(&v.to_json(), &s), Some(v));
        }
    }
}
