mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use pinv_core::cli::{run, EXIT_OK};
use pinv_core::engine::{generate, solve_all, strip_elapsed, Request, Target};
use pinv_core::eval::{eval_formula, Valuation, Value};
use pinv_core::ir::{
    apply_subst, concretize_formula, pres_complement, CmpOp, ConcreteVar, Expr, Formula, Sort, Substitution,
    ThreadRef, VarRef, PC,
};
use pinv_core::oracle::{check_invariant, classify_counter_model, explore, model_from_json, swap_state, OracleConfig, Reachability};
use pinv_core::rules::{param_premises, Rule, RuleOptions, SupportSet, VerificationCondition};
use pinv_core::solve::{decide, position_dp, CounterModel, Status};
use pinv_core::tactics::SupportTactic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pinv(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("pinv").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err))
}

fn path(name: &str) -> String {
    corpus(name).display().to_string()
}

fn need_solver() {
    assert!(solver_available(), "no SMT solver available");
}

fn oracle(threads: u32, int_bound: i64) -> OracleConfig {
    OracleConfig { threads, int_bound, max_states: 2_000_000 }
}

/// 1 + 2*7 + 7 premises for mutexS under p-inv.
fn count_law() {
    let pr = set_sect();
    let none = SupportSet { supports: Vec::new(), annotations: None, self_support: false };
    let prem = param_premises(&pr.program, pr.spec.get("mutexS").unwrap(), Rule::PInv, &none, &RuleOptions::default());
    assert_eq!(pr.program.transitions.len(), 7);
    assert_eq!(prem.len(), 22);
}

fn graph_proof(stem: &str) {
    need_solver();
    let (code, out) = pinv(&[
        "verify", "--program", &path(&format!("{stem}.prg")), "--spec", &path(&format!("{stem}.inv")),
        "--graph", &path(&format!("{stem}.graph")), "--jobs", "4",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
}

fn int(m: &CounterModel, var: &str) -> i64 {
    match m.get(var) {
        Some(Value::Int(n)) => *n,
        other => panic!("{var} = {other:?}"),
    }
}

fn loc(m: &CounterModel, var: &str) -> u32 {
    match m.get(var) {
        Some(Value::Loc(l)) => *l,
        other => panic!("{var} = {other:?}"),
    }
}

/// The acting thread `a` takes t4 into the critical section while `b` is
/// already there. Shape A: equal tickets. Shape B: `min` differs from the
/// ticket of the thread already inside.
fn shape(m: &CounterModel, a: u32, b: u32) -> Option<char> {
    let in_crit = |l: u32| l == 5 || l == 6;
    let step = loc(m, &format!("pc[{a}]")) == 4
        && loc(m, &format!("pc'[{a}]")) == 5
        && in_crit(loc(m, &format!("pc[{b}]")))
        && loc(m, &format!("pc'[{b}]")) == loc(m, &format!("pc[{b}]"));
    if !step {
        return None;
    }
    if int(m, &format!("ticket[{a}]")) == int(m, &format!("ticket[{b}]")) {
        Some('A')
    } else if int(m, "min") != int(m, &format!("ticket[{b}]")) {
        Some('B')
    } else {
        None
    }
}

fn ticket(t: u32) -> Expr {
    Expr::Var(VarRef::local("ticket", ThreadRef::Const(t), Sort::Int))
}

fn with_extra(vc: &VerificationCondition, extra: Formula) -> VerificationCondition {
    let mut vc = vc.clone();
    vc.hypothesis = Formula::and(vec![vc.hypothesis, extra]);
    vc
}

fn failure_at_t4() {
    need_solver();
    let pr = int_sect();
    let req = Request {
        target: Target::Single { invariant: "mutex".into(), rule: Rule::PInv, supports: vec![] },
        tactic: SupportTactic::default(),
        partial_substitutions: false,
    };
    let jobs = generate(&pr.program, &pr.spec, &req).unwrap();
    let rows = solve_all(&jobs, &solver(), 4).unwrap();
    assert!(rows.iter().all(|r| matches!(r.status, Status::Valid | Status::Invalid)), "inconclusive rows");
    let failed: Vec<_> = rows.iter().filter(|r| r.status == Status::Invalid).collect();
    assert!(!failed.is_empty());
    for r in &failed {
        let p = &r.provenance;
        assert!(p.premise.starts_with("P2-") && p.transition.as_deref() == Some("t4"), "unexpected failure {}", r.id);
        let a = p.acting_thread.unwrap();
        let m = r.model.as_ref().unwrap();
        assert!(shape(m, a, 1 - a).is_some(), "{}: {}", r.id, m.to_json());
    }

    let tactic = SupportTactic::default();
    let job = jobs.iter().find(|j| j.vc.id == failed[0].id).unwrap();
    let a = job.vc.provenance.acting_thread.unwrap();
    for (extra, want) in [
        (Formula::eq(ticket(0), ticket(1)), 'A'),
        (Formula::Cmp(CmpOp::Ne, ticket(0), ticket(1)), 'B'),
    ] {
        let v = decide(&with_extra(&job.vc, extra), &tactic, &solver()).unwrap();
        assert_eq!(v.status, Status::Invalid, "shape {want} not satisfiable");
        assert_eq!(shape(v.model.as_ref().unwrap(), a, 1 - a), Some(want));
    }
}

fn oracle_agreement() {
    for (stem, names) in [
        ("critical_int", ["activelow", "notsame", "minticket", "mutex"]),
        ("critical_sect", ["activelowS", "notsameS", "minticketS", "mutexS"]),
    ] {
        let pr = protocol(stem);
        for threads in [2, 3] {
            let ex = explore(&pr.program, &oracle(threads, 5)).unwrap();
            for name in names {
                let c = check_invariant(&ex, pr.spec.get(name).unwrap());
                assert!(c.holds, "{stem} N={threads}: {name} violated: {:?}", c.witness);
            }
        }
    }
}

fn spurious_models() {
    let pr = int_sect();
    let ex = explore(&pr.program, &oracle(2, 4)).unwrap();
    for file in ["cm1.json", "cm2.json"] {
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(corpus(file)).unwrap()).unwrap();
        let cm = model_from_json(&pr.program, &json).unwrap();
        let c = classify_counter_model(&pr.program, &cm, &ex).unwrap();
        assert!(!c.bound_too_small, "{file} exceeds the bound");
        assert_eq!(c.verdict, Reachability::Spurious, "{file}");
    }
}

fn pc(t: u32, primed: bool) -> VarRef {
    let v = VarRef::pc(ThreadRef::Const(t));
    if primed {
        v.primed()
    } else {
        v
    }
}

fn random_loc_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        let v = pc(rng.gen_range(0..2), rng.gen_bool(0.5));
        return match rng.gen_range(0..4) {
            0 => {
                let locs: BTreeSet<u32> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..=7)).collect();
                Formula::AtLoc(v, locs)
            }
            1 => Formula::eq(Expr::Var(v), Expr::Loc(rng.gen_range(1..=7))),
            2 => Formula::ne(Expr::Var(v), Expr::Loc(rng.gen_range(1..=7))),
            _ => Formula::eq(Expr::Var(v), Expr::Var(pc(rng.gen_range(0..2), rng.gen_bool(0.5)))),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_loc_formula(rng, depth - 1);
    match rng.gen_range(0..4) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(vec![sub(rng), sub(rng)]),
        2 => Formula::or(vec![sub(rng), sub(rng)]),
        _ => Formula::implies(sub(rng), sub(rng)),
    }
}

fn pc_valuations() -> Vec<Valuation> {
    let vars: Vec<ConcreteVar> =
        [false, true].iter().flat_map(|&p| (0..2).map(move |t| pc(t, p).concrete().unwrap())).collect();
    let mut out = Vec::new();
    for code in 0..7u32.pow(4) {
        let mut env = Valuation::new();
        let mut c = code;
        for v in &vars {
            env.insert(v.clone(), Value::Loc(c % 7 + 1));
            c /= 7;
        }
        out.push(env);
    }
    out
}

fn solver_free_properties() {
    let pr = set_sect();

    let swap = Substitution::swap("i", "j");
    for inv in &pr.spec.invariants {
        assert_eq!(apply_subst(&apply_subst(&inv.body, &swap), &swap), inv.body);
    }

    let excluded: [ConcreteVar; 2] = ["bag".parse().unwrap(), "pc[0]".parse().unwrap()];
    assert_eq!(
        pres_complement(&pr.program, 2, &excluded).unwrap().to_string(),
        "avail' = avail && ticket'[0] = ticket[0] && pc'[1] = pc[1] && ticket'[1] = ticket[1]"
    );

    let upd = Formula::Update { var: PC.into(), sort: Sort::Loc, index: ThreadRef::var("i"), value: Expr::Loc(5) };
    let alpha = Substitution::from_pairs([("i", ThreadRef::Const(0))]);
    assert_eq!(concretize_formula(&upd, &alpha, 2).to_string(), "pc'[0] = 5 && pc'[1] = pc[1]");

    let ex = explore(&pr.program, &oracle(3, 4)).unwrap();
    for s in &ex.states {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(&swap_state(&ex, &swap_state(&ex, s, i, j), i, j), s);
        }
    }

    let envs = pc_valuations();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut proved = 0;
    for _ in 0..1000 {
        let hyp = random_loc_formula(&mut rng, 3);
        let concl = random_loc_formula(&mut rng, 3);
        let valid = envs.iter().all(|env| {
            !eval_formula(&hyp, env).unwrap() || eval_formula(&concl, env).unwrap()
        });
        let dp = position_dp(&hyp, &concl, 7);
        assert!(!dp || valid, "position procedure proved an invalid VC: {hyp} => {concl}");
        assert_eq!(dp, valid, "location-only VC left unproved: {hyp} => {concl}");
        proved += dp as usize;
    }
    assert!(proved > 0);
}

fn deterministic_reports() {
    need_solver();
    let dir = tempfile::tempdir().unwrap();
    let (prg, inv, graph) = (path("critical_int.prg"), path("critical_int.inv"), path("critical_int.graph"));
    let inputs: [Vec<&str>; 2] =
        [vec!["--graph", &graph], vec!["--invariant", "mutex", "--rule", "pinv"]];
    for (n, input) in inputs.iter().enumerate() {
        let mut reports = Vec::new();
        for jobs in ["1", "4"] {
            let report = dir.path().join(format!("{n}-{jobs}.json"));
            let mut args = vec!["verify", "--program", &prg, "--spec", &inv];
            args.extend_from_slice(input);
            args.extend_from_slice(&["--jobs", jobs, "--report", report.to_str().unwrap()]);
            pinv(&args);
            let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
            strip_elapsed(&mut json);
            reports.push(serde_json::to_string_pretty(&json).unwrap());
        }
        assert_eq!(reports[0], reports[1]);
    }
}

fn criterion(n: u32, name: &str, limit: Duration, f: fn()) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (ok, why) = match result {
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, msg)
        }
        Ok(()) if took > limit => (false, format!("exceeded {limit:?}")),
        Ok(()) => (true, String::new()),
    };
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {n}: {name} ({:.2}s){}", took.as_secs_f64(), if ok { String::new() } else { format!(": {why}") });
    ok
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "premise count law", s(1), count_law),
        criterion(2, "integer ticket proof graph", s(60), || graph_proof("critical_int")),
        criterion(3, "set ticket proof graph", s(120), || graph_proof("critical_sect")),
        criterion(4, "mutex alone fails at t4 with the two model shapes", s(30), failure_at_t4),
        criterion(5, "certified invariants hold in the oracle", s(120), oracle_agreement),
        criterion(6, "published counter-models are spurious", s(30), spurious_models),
        criterion(7, "solver-free property suites", s(60), solver_free_properties),
        criterion(8, "reports independent of job count", s(120), deterministic_reports),
    ];
    assert!(results.iter().all(|ok| *ok), "acceptance criteria failed");
}
