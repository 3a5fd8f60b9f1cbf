//! A decision procedure for the location fragment.
//!
//! Atoms over program counters are interpreted over `1..=max_loc`; every
//! other atom is an opaque proposition. The search looks for a model of
//! `hypothesis ∧ ¬conclusion` by depth-first enumeration with three-valued
//! pruning. No model means the VC is valid; a model proves nothing, since
//! the opaque atoms may be inconsistent in their own theory.

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::{eval_formula, Valuation};
use crate::ir::{CmpOp, ConcreteVar, Expr, Formula};

const NODE_BUDGET: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Pc(usize),
    Loc(u32),
}

#[derive(Debug)]
enum P {
    Lit(bool),
    At(usize, BTreeSet<u32>),
    PcCmp(CmpOp, Side, Side),
    Prop(usize),
    Not(Box<P>),
    And(Vec<P>),
    Or(Vec<P>),
}

#[derive(Default)]
struct Compiler {
    pcs: BTreeMap<ConcreteVar, usize>,
    props: BTreeMap<Formula, usize>,
}

impl Compiler {
    fn pc(&mut self, v: ConcreteVar) -> usize {
        let n = self.pcs.len();
        *self.pcs.entry(v).or_insert(n)
    }

    fn prop(&mut self, f: &Formula) -> P {
        let n = self.props.len();
        P::Prop(*self.props.entry(f.clone()).or_insert(n))
    }

    fn side(&mut self, e: &Expr) -> Option<Side> {
        match e {
            Expr::Loc(l) => Some(Side::Loc(*l)),
            Expr::Var(v) if v.is_pc() => v.concrete().map(|c| Side::Pc(self.pc(c))),
            _ => None,
        }
    }

    fn compile(&mut self, f: &Formula) -> P {
        match f {
            Formula::True => P::Lit(true),
            Formula::False => P::Lit(false),
            Formula::AtLoc(v, locs) => match v.concrete() {
                Some(c) => P::At(self.pc(c), locs.clone()),
                None => self.prop(f),
            },
            Formula::Cmp(op, a, b) => {
                if a.is_literal() && b.is_literal() {
                    if let Ok(r) = eval_formula(f, &Valuation::new()) {
                        return P::Lit(r);
                    }
                }
                if let (Some(x), Some(y)) = (self.side(a), self.side(b)) {
                    return P::PcCmp(*op, x, y);
                }
                if *op == CmpOp::Ne {
                    let eq = Formula::Cmp(CmpOp::Eq, a.clone(), b.clone());
                    return P::Not(Box::new(self.prop(&eq)));
                }
                self.prop(f)
            }
            Formula::Not(g) => P::Not(Box::new(self.compile(g))),
            Formula::And(gs) => P::And(gs.iter().map(|g| self.compile(g)).collect()),
            Formula::Or(gs) => P::Or(gs.iter().map(|g| self.compile(g)).collect()),
            Formula::Implies(a, b) => P::Or(vec![P::Not(Box::new(self.compile(a))), self.compile(b)]),
            Formula::Atom(_) | Formula::Member(..) | Formula::Update { .. } | Formula::Frame { .. } => self.prop(f),
        }
    }
}

struct State {
    pcs: Vec<Option<u32>>,
    props: Vec<Option<bool>>,
}

fn side(s: Side, st: &State) -> Option<u32> {
    match s {
        Side::Loc(l) => Some(l),
        Side::Pc(i) => st.pcs[i],
    }
}

fn eval3(p: &P, st: &State) -> Option<bool> {
    match p {
        P::Lit(b) => Some(*b),
        P::At(i, locs) => st.pcs[*i].map(|l| locs.contains(&l)),
        P::PcCmp(op, a, b) => Some(op.holds(&side(*a, st)?, &side(*b, st)?)),
        P::Prop(i) => st.props[*i],
        P::Not(g) => eval3(g, st).map(|b| !b),
        P::And(gs) => {
            let mut all = true;
            for g in gs {
                match eval3(g, st) {
                    Some(false) => return Some(false),
                    None => all = false,
                    Some(true) => {}
                }
            }
            all.then_some(true)
        }
        P::Or(gs) => {
            let mut none = true;
            for g in gs {
                match eval3(g, st) {
                    Some(true) => return Some(true),
                    None => none = false,
                    Some(false) => {}
                }
            }
            none.then_some(false)
        }
    }
}

struct Search<'a> {
    goal: &'a P,
    max_loc: u32,
    nodes: usize,
}

impl Search<'_> {
    /// `Some(true)` when a model exists, `None` when the budget ran out.
    fn dfs(&mut self, st: &mut State) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return None;
        }
        match eval3(self.goal, st) {
            Some(b) => return Some(b),
            None => {}
        }
        if let Some(i) = st.pcs.iter().position(Option::is_none) {
            for l in 1..=self.max_loc {
                st.pcs[i] = Some(l);
                let r = self.dfs(st);
                if r != Some(false) {
                    st.pcs[i] = None;
                    return r;
                }
            }
            st.pcs[i] = None;
            return Some(false);
        }
        let i = st.props.iter().position(Option::is_none)?;
        for b in [true, false] {
            st.props[i] = Some(b);
            let r = self.dfs(st);
            if r != Some(false) {
                st.props[i] = None;
                return r;
            }
        }
        st.props[i] = None;
        Some(false)
    }
}

/// True when `hypothesis → conclusion` holds under every interpretation of
/// the non-location atoms. `false` means "not established here".
pub fn position_dp(hypothesis: &Formula, conclusion: &Formula, max_loc: u32) -> bool {
    let mut c = Compiler::default();
    let goal = P::And(vec![c.compile(hypothesis), P::Not(Box::new(c.compile(conclusion)))]);
    let mut st = State { pcs: vec![None; c.pcs.len()], props: vec![None; c.props.len()] };
    let mut search = Search { goal: &goal, max_loc: max_loc.max(1), nodes: 0 };
    search.dfs(&mut st) == Some(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Sort, ThreadRef, VarRef};

    fn at(t: u32, l: u32) -> Formula {
        Formula::at(ThreadRef::Const(t), l)
    }

    fn ticket(t: u32) -> Expr {
        Expr::Var(VarRef::local("ticket", ThreadRef::Const(t), Sort::Int))
    }

    #[test]
    fn location_reasoning() {
        let hyp = Formula::and(vec![
            Formula::implies(at(0, 5), Formula::not(at(1, 5))),
            at(0, 5),
        ]);
        assert!(position_dp(&hyp, &Formula::not(at(1, 5)), 6));
        assert!(!position_dp(&hyp, &at(1, 4), 6));
    }

    #[test]
    fn opaque_atoms_are_shared() {
        let p = Formula::eq(ticket(0), ticket(1));
        let hyp = Formula::and(vec![p.clone(), at(0, 1)]);
        assert!(position_dp(&hyp, &p, 3));
        assert!(position_dp(&Formula::not(p.clone()), &Formula::ne(ticket(0), ticket(1)), 3));
        assert!(!position_dp(&Formula::True, &p, 3));
    }

    #[test]
    fn domain_is_bounded() {
        let disj = Formula::or((1..=4).map(|l| at(0, l)).collect());
        assert!(position_dp(&Formula::True, &disj, 4));
        assert!(!position_dp(&Formula::True, &disj, 5));
    }
}
