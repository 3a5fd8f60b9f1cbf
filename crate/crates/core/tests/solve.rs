mod common;

use std::time::Duration;

use common::*;
use pinv_core::eval::{eval_formula, Value};
use pinv_core::ir::{Formula, ThreadRef};
use pinv_core::rules::{g_inv, p_inv, RuleOptions, VerificationCondition};
use pinv_core::solve::decide::smt_text;
use pinv_core::solve::{decide, position_dp, Dp, Status};
use pinv_core::tactics::SupportTactic;

fn corpus_vcs() -> Vec<VerificationCondition> {
    let mut out = Vec::new();
    for pr in [int_sect(), set_sect()] {
        for (_, vcs) in g_inv(&pr.program, &pr.graph, &pr.spec, &RuleOptions::default()).unwrap() {
            out.extend(vcs);
        }
        for inv in &pr.spec.invariants {
            out.extend(p_inv(&pr.program, inv).unwrap());
        }
    }
    out
}

#[test]
fn position_layer_never_contradicts_smt() {
    if !solver_available() {
        return;
    }
    let raw = SupportTactic { simplify: false, ..Default::default() };
    let mut checked = 0;
    for vc in corpus_vcs() {
        if !position_dp(&vc.full_hypothesis(), &vc.conclusion, vc.max_loc) {
            continue;
        }
        let text = smt_text(&vc, vc.lazy.len(), &raw, false).unwrap();
        let out = pinv_core::solve::run_solver(&text, &solver()).unwrap();
        assert_eq!(out, pinv_core::solve::runner::RawOutcome::Unsat, "{}", vc.id);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn invalid_verdicts_carry_checked_models() {
    if !solver_available() {
        return;
    }
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let mut invalid = 0;
    for vc in &vcs {
        let v = decide(vc, &SupportTactic::default(), &solver()).unwrap();
        assert_eq!(v.model.is_some(), v.status == Status::Invalid);
        if let Some(m) = v.model {
            invalid += 1;
            assert_eq!(eval_formula(&vc.full_hypothesis(), &m.assignments), Ok(true));
            assert_eq!(eval_formula(&vc.conclusion, &m.assignments), Ok(false));
            for var in vc.variables().keys() {
                assert!(m.assignments.contains_key(var), "{} lacks {var}", vc.id);
            }
        }
    }
    assert!(invalid > 0);
}

#[test]
fn activelow_is_inductive() {
    if !solver_available() {
        return;
    }
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("activelow").unwrap()).unwrap();
    let verdicts: Vec<_> = vcs.iter().map(|vc| decide(vc, &SupportTactic::default(), &solver()).unwrap()).collect();
    assert!(verdicts.iter().all(|v| v.status == Status::Valid));
    assert!(verdicts.iter().any(|v| v.dp_used == Dp::Smt));
}

#[test]
fn quantified_axiom_keeps_valid_verdicts() {
    if !solver_available() {
        return;
    }
    let pr = set_sect();
    let all: Vec<VerificationCondition> = g_inv(&pr.program, &pr.graph, &pr.spec, &RuleOptions::default())
        .unwrap()
        .into_iter()
        .flat_map(|(_, v)| v)
        .collect();
    let mut q = solver();
    q.quantified_min = true;
    for vc in all.iter().filter(|vc| vc.hypothesis.to_string().contains("setmin")) {
        let a = decide(vc, &SupportTactic::default(), &solver()).unwrap();
        if a.status == Status::Valid {
            assert_eq!(decide(vc, &SupportTactic::default(), &q).unwrap().status, Status::Valid, "{}", vc.id);
        }
    }
}

#[test]
fn emitted_scripts_are_deterministic() {
    let vcs = corpus_vcs();
    for vc in vcs.iter().step_by(7) {
        let a = smt_text(vc, vc.lazy.len(), &SupportTactic::default(), false).unwrap();
        let b = smt_text(&vc.clone(), vc.lazy.len(), &SupportTactic::default(), false).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn contradictory_hypothesis_needs_no_solver() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let mut vc = vcs.iter().find(|v| v.id == "mutex__P2-i__t4__a1").unwrap().clone();
    vc.hypothesis = Formula::and(vec![vc.hypothesis.clone(), Formula::at(ThreadRef::Const(0), 1)]);
    let missing = pinv_core::solve::SolverConfig::from_command("/nonexistent/solver");
    let v = decide(&vc, &SupportTactic::default(), &missing).unwrap();
    assert_eq!((v.status, v.dp_used), (Status::Valid, Dp::Position));
}

#[test]
fn hand_written_sat_answer_round_trips() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let vc = vcs.iter().find(|v| v.id == "mutex__P2-i__t4__a1").unwrap();
    let reply = "sat\n((define-fun pc!1 () Int 5) (define-fun pc!0 () Int 4) (define-fun pc!0!next () Int 5) \
                 (define-fun pc!1!next () Int 5) (define-fun ticket!0 () Int 1) (define-fun ticket!1 () Int 1) \
                 (define-fun ticket!0!next () Int 1) (define-fun ticket!1!next () Int 1) \
                 (define-fun |min| () Int 1) (define-fun min!next () Int 1) (define-fun tick () Int (- 2)) \
                 (define-fun tick!next () Int (- 2)))";
    let v = decide(vc, &SupportTactic::default(), &fake_solver(reply)).unwrap();
    assert_eq!(v.status, Status::Invalid);
    let m = v.model.unwrap();
    assert_eq!(m.get("pc[1]"), Some(&Value::Loc(5)));
    assert_eq!(m.get("tick"), Some(&Value::Int(-2)));
    let json = m.to_json();
    assert_eq!(json["pc[1]"], 5);
}

#[test]
fn models_that_do_not_refute_are_not_reported() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let vc = vcs.iter().find(|v| v.id == "mutex__P2-i__t4__a1").unwrap();
    let v = decide(vc, &SupportTactic::default(), &fake_solver("sat\n((define-fun pc!0 () Int 1))")).unwrap();
    assert_eq!(v.status, Status::Unknown);
    assert!(v.model.is_none());
}

#[test]
fn solver_timeouts() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let vc = vcs.iter().find(|v| v.id == "mutex__P2-i__t4__a1").unwrap();
    let mut slow = solver();
    slow.command = vec!["sh".into(), "-c".into(), "exec sleep 10".into()];
    slow.timeout = Duration::from_secs(1);
    let v = decide(vc, &SupportTactic::default(), &slow).unwrap();
    assert_eq!(v.status, Status::Timeout);
    assert!(v.elapsed_ms < 5000);
}

#[test]
fn missing_solver_is_an_error_only_when_needed() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let vc = vcs.iter().find(|v| v.id == "mutex__P2-i__t4__a1").unwrap();
    let missing = pinv_core::solve::SolverConfig::from_command("/nonexistent/solver");
    assert!(matches!(
        decide(vc, &SupportTactic::default(), &missing),
        Err(pinv_core::Error::SolverNotFound(_))
    ));
}
