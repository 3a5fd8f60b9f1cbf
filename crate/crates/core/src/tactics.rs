//! Support selection strategies and formula simplification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{Invariant, PremiseClass, TacticHint};
use crate::ir::{
    all_var_maps, CmpOp, ConcreteVar, Expr, Formula, ParamProgram, Scope, Sort, Substitution, ThreadRef, Transition, VarRef,
};
use crate::rules::{PremiseKind, RuleOptions, SupportSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TacticMode {
    /// Every support, every substitution, every VC.
    #[serde(rename = "full")]
    FullSupp,
    /// Only supports named by annotations matching the VC.
    #[default]
    Supp,
    /// Only supports relevant to transitions that can break the candidate.
    Offend,
    /// No supports at first; batches are added while the solver finds models.
    Lazy,
}

impl TacticMode {
    pub fn label(self) -> &'static str {
        match self {
            TacticMode::FullSupp => "full",
            TacticMode::Supp => "supp",
            TacticMode::Offend => "offend",
            TacticMode::Lazy => "lazy",
        }
    }
}

impl std::str::FromStr for TacticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(TacticMode::FullSupp),
            "supp" => Ok(TacticMode::Supp),
            "offend" => Ok(TacticMode::Offend),
            "lazy" => Ok(TacticMode::Lazy),
            _ => Err(format!("unknown tactic `{s}` (expected full, supp, offend or lazy)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportTactic {
    pub mode: TacticMode,
    pub simplify: bool,
}

impl Default for SupportTactic {
    fn default() -> Self {
        SupportTactic { mode: TacticMode::Supp, simplify: true }
    }
}

impl SupportTactic {
    /// Applies the recognised tokens of a proof-graph hint; others are logged.
    pub fn with_hint(mut self, hint: Option<&TacticHint>) -> Self {
        let Some(h) = hint else { return self };
        for tok in h.tokens() {
            match tok {
                "full" => self.mode = TacticMode::FullSupp,
                "supp" => self.mode = TacticMode::Supp,
                "offend" => self.mode = TacticMode::Offend,
                "lazy" => self.mode = TacticMode::Lazy,
                "simpl" => self.simplify = true,
                "nosimpl" => self.simplify = false,
                other => log::warn!("ignoring unknown tactic token `{other}` in `{}`", h.raw),
            }
        }
        self
    }
}

/// A support chosen for one premise, with its instantiations.
pub struct SupportPick {
    pub name: String,
    pub body: Formula,
    pub substitutions: Vec<Substitution>,
}

fn substitutions_for(psi: &Invariant, tid_vars: &[String], partial: bool) -> Vec<Substitution> {
    if !partial {
        return all_var_maps(&psi.index_vars, tid_vars);
    }
    // Each variable maps to a VC variable or to a fresh name of its own.
    let mut targets: Vec<String> = tid_vars.to_vec();
    let fresh: Vec<String> = psi.index_vars.iter().map(|v| format!("{}_{}", psi.name, v)).collect();
    targets.extend(fresh.iter().cloned());
    all_var_maps(&psi.index_vars, &targets)
        .into_iter()
        .filter(|s| {
            psi.index_vars.iter().zip(&fresh).all(|(v, f)| match s.get(v) {
                Some(ThreadRef::Var(t)) => !fresh.contains(t) || t == f,
                _ => true,
            })
        })
        .collect()
}

/// Whether `t` writes a variable read by `phi`.
pub fn offends(t: &Transition, phi: &Formula) -> bool {
    !t.write_set().is_disjoint(&phi.read_set())
}

pub fn select_support(
    _p: &ParamProgram,
    phi: &Invariant,
    t: &Transition,
    kind: PremiseKind,
    set: &SupportSet,
    tid_vars: &[String],
    opts: &RuleOptions,
) -> Vec<SupportPick> {
    let class = kind.class().unwrap_or(PremiseClass::All);
    let mut chosen: Vec<&Invariant> = match (opts.tactic.mode, set.annotations) {
        (TacticMode::FullSupp, _) | (_, None) => set.supports.clone(),
        (_, Some(anns)) => {
            let mut names: Vec<&str> = Vec::new();
            for a in anns {
                let class_ok = a.class == PremiseClass::All || a.class == class;
                if a.loc.matches(t.id.loc) && class_ok {
                    for s in &a.supports {
                        if !names.contains(&s.as_str()) {
                            names.push(s);
                        }
                    }
                }
            }
            set.supports.iter().copied().filter(|s| names.contains(&s.name.as_str())).collect()
        }
    };
    if opts.tactic.mode == TacticMode::Offend {
        if !offends(t, &phi.body) {
            chosen.clear();
        } else {
            let w = t.write_set();
            chosen.retain(|s| !s.body.read_set().is_disjoint(&w));
        }
    }
    let mut out = Vec::new();
    if set.self_support && kind == PremiseKind::SameThread {
        out.push(SupportPick {
            name: phi.name.clone(),
            body: phi.body.clone(),
            substitutions: substitutions_for(phi, tid_vars, false),
        });
    }
    for s in chosen {
        out.push(SupportPick {
            name: s.name.clone(),
            body: s.body.clone(),
            substitutions: substitutions_for(s, tid_vars, opts.partial_substitutions),
        });
    }
    out
}

// ---- simplification -------------------------------------------------------

fn fold_expr(e: &Expr) -> Expr {
    match e {
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (a, b) = (fold_expr(a), fold_expr(b));
            match (&a, &b, e) {
                (Expr::Int(x), Expr::Int(y), Expr::Add(..)) => x.checked_add(*y).map(Expr::Int),
                (Expr::Int(x), Expr::Int(y), _) => x.checked_sub(*y).map(Expr::Int),
                _ => None,
            }
            .unwrap_or_else(|| match e {
                Expr::Add(..) => Expr::Add(Box::new(a), Box::new(b)),
                _ => Expr::Sub(Box::new(a), Box::new(b)),
            })
        }
        Expr::Singleton(x) => Expr::Singleton(Box::new(fold_expr(x))),
        Expr::Union(a, b) => Expr::Union(Box::new(fold_expr(a)), Box::new(fold_expr(b))),
        Expr::Diff(a, b) => Expr::Diff(Box::new(fold_expr(a)), Box::new(fold_expr(b))),
        Expr::SetMin(s) => Expr::SetMin(Box::new(fold_expr(s))),
        other => other.clone(),
    }
}

fn literal_cmp(op: CmpOp, a: &Expr, b: &Expr) -> Option<bool> {
    match (a, b) {
        (Expr::Int(x), Expr::Int(y)) => Some(op.holds(x, y)),
        (Expr::Loc(x), Expr::Loc(y)) => Some(op.holds(x, y)),
        (Expr::Bool(x), Expr::Bool(y)) if op.is_equality() => Some(op.holds(x, y)),
        (Expr::Tid(ThreadRef::Const(x)), Expr::Tid(ThreadRef::Const(y))) => Some(op.holds(x, y)),
        _ if a == b => Some(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge)),
        _ => None,
    }
}

fn from_bool(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => *g,
        other => Formula::Not(Box::new(other)),
    }
}

/// One bottom-up pass of constant folding and connective normalization.
fn fold(f: &Formula) -> Formula {
    match f {
        Formula::Atom(e) => match fold_expr(e) {
            Expr::Bool(b) => from_bool(b),
            e => Formula::Atom(e),
        },
        Formula::Cmp(op, a, b) => {
            let (a, b) = (fold_expr(a), fold_expr(b));
            match literal_cmp(*op, &a, &b) {
                Some(v) => from_bool(v),
                None => Formula::Cmp(*op, a, b),
            }
        }
        Formula::Member(a, b) => Formula::Member(fold_expr(a), fold_expr(b)),
        Formula::AtLoc(v, locs) => {
            if locs.is_empty() {
                Formula::False
            } else if locs.len() == 1 {
                Formula::eq(Expr::Var(v.clone()), Expr::Loc(*locs.iter().next().unwrap()))
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => negate(fold(g)),
        Formula::And(gs) => {
            let mut out: Vec<Formula> = Vec::new();
            let mut seen = BTreeSet::new();
            for g in gs {
                let g = fold(g);
                let items = match g {
                    Formula::And(inner) => inner,
                    other => vec![other],
                };
                for h in items {
                    match h {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        h => {
                            if seen.insert(h.clone()) {
                                out.push(h);
                            }
                        }
                    }
                }
            }
            if out.iter().any(|h| seen.contains(&negate(h.clone()))) {
                return Formula::False;
            }
            Formula::and(out)
        }
        Formula::Or(gs) => {
            let mut out: Vec<Formula> = Vec::new();
            let mut seen = BTreeSet::new();
            for g in gs {
                let g = fold(g);
                let items = match g {
                    Formula::Or(inner) => inner,
                    other => vec![other],
                };
                for h in items {
                    match h {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        h => {
                            if seen.insert(h.clone()) {
                                out.push(h);
                            }
                        }
                    }
                }
            }
            if out.iter().any(|h| seen.contains(&negate(h.clone()))) {
                return Formula::True;
            }
            Formula::or(out)
        }
        Formula::Implies(a, b) => match (fold(a), fold(b)) {
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (Formula::True, b) => b,
            (a, Formula::False) => negate(a),
            (a, b) if a == b => Formula::True,
            (a, b) => Formula::implies(a, b),
        },
        other => other.clone(),
    }
}

fn pc_key(e: &Expr) -> Option<ConcreteVar> {
    match e {
        Expr::Var(v) if v.is_pc() => v.concrete(),
        _ => None,
    }
}

/// Facts `pc[a] = ℓ` implied by the top-level conjuncts of `f`, closed under
/// frame equalities `pc'[b] = pc[b]`. `None` signals a contradiction.
fn pc_facts(f: &Formula) -> Option<BTreeMap<ConcreteVar, u32>> {
    let mut known: BTreeMap<ConcreteVar, u32> = BTreeMap::new();
    let mut links: Vec<(ConcreteVar, ConcreteVar)> = Vec::new();
    for c in f.conjuncts() {
        match c {
            Formula::Cmp(CmpOp::Eq, a, b) => match (pc_key(a), pc_key(b), a, b) {
                (Some(v), None, _, Expr::Loc(l)) | (None, Some(v), Expr::Loc(l), _) => {
                    if known.insert(v, *l).is_some_and(|old| old != *l) {
                        return None;
                    }
                }
                (Some(x), Some(y), _, _) => links.push((x, y)),
                _ => {}
            },
            Formula::AtLoc(v, locs) if locs.len() == 1 => {
                if let Some(k) = v.concrete() {
                    let l = *locs.iter().next().unwrap();
                    if known.insert(k, l).is_some_and(|old| old != l) {
                        return None;
                    }
                }
            }
            _ => {}
        }
    }
    loop {
        let mut changed = false;
        for (x, y) in &links {
            match (known.get(x).copied(), known.get(y).copied()) {
                (Some(a), Some(b)) if a != b => return None,
                (Some(a), None) => {
                    known.insert(y.clone(), a);
                    changed = true;
                }
                (None, Some(b)) => {
                    known.insert(x.clone(), b);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Some(known);
        }
    }
}

fn is_fact(c: &Formula, known: &BTreeMap<ConcreteVar, u32>) -> bool {
    match c {
        Formula::Cmp(CmpOp::Eq, a, Expr::Loc(l)) => pc_key(a).is_some_and(|v| known.get(&v) == Some(l)),
        _ => false,
    }
}

fn substitute_pcs(f: &Formula, known: &BTreeMap<ConcreteVar, u32>) -> Formula {
    match f {
        Formula::AtLoc(v, locs) => match v.concrete().and_then(|k| known.get(&k)) {
            Some(l) => from_bool(locs.contains(l)),
            None => f.clone(),
        },
        Formula::Not(g) => Formula::Not(Box::new(substitute_pcs(g, known))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| substitute_pcs(g, known)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| substitute_pcs(g, known)).collect()),
        Formula::Implies(a, b) => Formula::implies(substitute_pcs(a, known), substitute_pcs(b, known)),
        _ => f.map_exprs(&|e| {
            e.map_vars(&|v: &VarRef| match v.concrete().filter(|_| v.is_pc()).and_then(|k| known.get(&k)) {
                Some(l) => Expr::Loc(*l),
                None => Expr::Var(v.clone()),
            })
        }),
    }
}

/// States every known fact once, then rewrites the remaining conjuncts.
fn propagate(f: &Formula, known: &BTreeMap<ConcreteVar, u32>) -> Formula {
    let mut parts: Vec<Formula> = known
        .iter()
        .map(|(v, l)| {
            let r = VarRef { name: v.name.clone(), scope: Scope::Local(ThreadRef::Const(v.thread.unwrap())), primed: v.primed, sort: Sort::Loc };
            Formula::eq(Expr::Var(r), Expr::Loc(*l))
        })
        .collect();
    parts.extend(f.conjuncts().into_iter().filter(|c| !is_fact(c, known)).map(|c| substitute_pcs(c, known)));
    Formula::and(parts)
}

/// Equivalence-preserving simplification: constant folding, flattening,
/// duplicate removal and propagation of program-counter literals.
pub fn simplify(f: &Formula) -> Formula {
    let mut cur = fold(f);
    loop {
        let next = match pc_facts(&cur) {
            None => Formula::False,
            Some(known) if known.is_empty() => cur.clone(),
            Some(known) => fold(&propagate(&cur, &known)),
        };
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplifiedVc {
    pub hypothesis: Formula,
    pub conclusion: Formula,
    /// Hypothesis false or conclusion true.
    pub trivial: bool,
}

/// Simplifies `hyp → concl`, using the hypothesis' pc facts in the conclusion.
pub fn simplify_vc(hyp: &Formula, concl: &Formula) -> SimplifiedVc {
    let h = simplify(hyp);
    let c = match pc_facts(&h) {
        Some(known) if !known.is_empty() => simplify(&fold(&substitute_pcs(concl, &known))),
        _ => simplify(concl),
    };
    let trivial = h == Formula::False || c == Formula::True;
    SimplifiedVc { hypothesis: h, conclusion: c, trivial }
}
