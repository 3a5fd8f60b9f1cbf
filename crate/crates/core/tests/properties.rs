mod common;

use std::collections::BTreeSet;

use common::*;
use pinv_core::eval::{eval_formula, Valuation, Value};
use pinv_core::frontend::{parse_spec, print_spec, Invariant, SpecFile};
use pinv_core::ir::{apply_subst, concretize_formula, CmpOp, ConcreteVar, Expr, Formula, Sort, Substitution, ThreadRef, VarRef};
use pinv_core::tactics::simplify;
use proptest::prelude::*;

fn tid() -> impl Strategy<Value = ThreadRef> {
    prop_oneof![Just(ThreadRef::var("i")), Just(ThreadRef::var("j"))]
}

fn int_term() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..4).prop_map(Expr::Int),
        Just(Expr::Var(VarRef::global("tick", Sort::Int))),
        Just(Expr::Var(VarRef::global("min", Sort::Int))),
        tid().prop_map(|k| Expr::Var(VarRef::local("ticket", k, Sort::Int))),
    ]
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Ne), Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Gt), Just(CmpOp::Ge)]
}

fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (tid(), prop::collection::btree_set(1u32..=7, 1..4)).prop_map(|(k, locs)| Formula::AtLoc(VarRef::pc(k), locs)),
        (cmp_op(), int_term(), int_term()).prop_map(|(op, a, b)| Formula::Cmp(op, a, b)),
        (tid(), tid()).prop_map(|(a, b)| Formula::ne(Expr::Tid(a), Expr::Tid(b))),
    ]
}

/// Candidate-invariant bodies over the integer ticket protocol.
fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
        ]
    })
}

fn valuation() -> impl Strategy<Value = Valuation> {
    (0i64..4, 0i64..4, [1u32..=7, 1u32..=7], [0i64..4, 0i64..4]).prop_map(|(tick, min, pcs, tickets)| {
        let mut v = Valuation::new();
        v.insert(ConcreteVar::global("tick"), Value::Int(tick));
        v.insert(ConcreteVar::global("min"), Value::Int(min));
        for a in 0..2 {
            v.insert(ConcreteVar::local("pc", a), Value::Loc(pcs[a as usize]));
            v.insert(ConcreteVar::local("ticket", a), Value::Int(tickets[a as usize]));
        }
        v
    })
}

fn spec_of(body: Formula) -> SpecFile {
    let vars: BTreeSet<String> = body.free_tids();
    SpecFile { macros: vec![], invariants: vec![Invariant { name: "cand".into(), index_vars: vars.into_iter().collect(), body }] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn swapping_twice_is_identity(f in formula()) {
        let s = Substitution::swap("i", "j");
        prop_assert_eq!(apply_subst(&apply_subst(&f, &s), &s), f);
    }

    #[test]
    fn printed_specs_parse_back(f in formula()) {
        let p = int_sect().program;
        let first = parse_spec(&print_spec(&spec_of(f)), "gen", &p).unwrap();
        let second = parse_spec(&print_spec(&first), "gen", &p).unwrap();
        prop_assert_eq!(second, first);
    }

    #[test]
    fn simplify_is_idempotent_and_preserves_truth(f in formula(), env in valuation()) {
        let once = simplify(&f);
        prop_assert_eq!(simplify(&once), once.clone());
        let alpha = Substitution::from_pairs([("i", ThreadRef::Const(0)), ("j", ThreadRef::Const(1))]);
        let before = eval_formula(&concretize_formula(&f, &alpha, 2), &env).unwrap();
        let after = eval_formula(&concretize_formula(&once, &alpha, 2), &env).unwrap();
        prop_assert_eq!(before, after);
    }
}
