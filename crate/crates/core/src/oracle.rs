//! Bounded explicit-state exploration of a concrete instance `S[N]`:
//! reachability, invariant checking, counter-model classification and an
//! empirical check of full symmetry.
//!
//! Integers range over `0..B` and sets over subsets of `0..B`. Transitions
//! that would leave the bound are disabled and the run is marked bounded.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{eval_expr, eval_formula, EVal, Valuation, Value};
use crate::frontend::{Invariant, SpecFile};
use crate::ir::{all_assignments, ConcreteVar, Formula, ParamProgram, Sort, Substitution, ThreadRef, TransitionId, PC};
use crate::solve::CounterModel;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub threads: u32,
    pub int_bound: i64,
    pub max_states: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { threads: 2, int_bound: 4, max_states: 1_000_000 }
    }
}

/// Values in `ParamProgram::instance_vars` order.
pub type State = Vec<Value>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub from: usize,
    pub transition: TransitionId,
    pub thread: u32,
    pub to: usize,
}

pub struct Exploration {
    pub vars: Vec<ConcreteVar>,
    pub sorts: Vec<Sort>,
    index: HashMap<ConcreteVar, usize>,
    pub states: Vec<State>,
    /// The first `initial` states are the initial ones.
    pub initial: usize,
    pub parent: Vec<Option<usize>>,
    pub steps: Vec<Step>,
    /// Some transition was disabled by the bound.
    pub bounded: bool,
    pub cfg: OracleConfig,
}

fn domain(sort: &Sort, cfg: &OracleConfig, max_loc: u32) -> Result<Vec<Value>> {
    Ok(match sort {
        Sort::Int => (0..cfg.int_bound).map(Value::Int).collect(),
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Loc => (1..=max_loc).map(Value::Loc).collect(),
        Sort::Tid => (0..cfg.threads).map(Value::Tid).collect(),
        Sort::SetInt => {
            let n = cfg.int_bound.clamp(0, 16) as u32;
            (0..1u32 << n).map(|mask| Value::Set((0..n as i64).filter(|i| mask >> i & 1 == 1).collect())).collect()
        }
        Sort::Uninterpreted(s) => return Err(Error::UnsupportedTheory(format!("cannot enumerate sort {s}"))),
    })
}

fn in_bound(v: &Value, cfg: &OracleConfig) -> bool {
    let ok = |n: i64| (0..cfg.int_bound).contains(&n);
    match v {
        Value::Int(n) => ok(*n),
        Value::Set(s) => s.iter().all(|n| ok(*n)),
        Value::Tid(t) => *t < cfg.threads,
        Value::Bool(_) | Value::Loc(_) => true,
    }
}

impl Exploration {
    pub fn index_of(&self, v: &ConcreteVar) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn valuation(&self, s: &State) -> Valuation {
        self.vars.iter().cloned().zip(s.iter().cloned()).collect()
    }

    /// Pre-state and post-state variables, for one-step checks.
    pub fn step_valuation(&self, s: &State, t: &State) -> Valuation {
        let mut env = self.valuation(s);
        env.extend(self.vars.iter().map(|v| v.clone().primed()).zip(t.iter().cloned()));
        env
    }

    pub fn state_json(&self, s: &State) -> serde_json::Value {
        let m = self.vars.iter().zip(s).map(|(k, v)| (k.to_string(), v.to_json())).collect();
        serde_json::Value::Object(m)
    }

    /// Transitions from the initial state to state `i`.
    pub fn trace(&self, mut i: usize) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(p) = self.parent[i] {
            let st = self.steps.iter().find(|s| s.from == p && s.to == i).unwrap();
            out.push(format!("{}[{}]", st.transition, st.thread));
            i = p;
        }
        out.reverse();
        out
    }
}

/// Successors of `s` by thread `a`. `None` entries were cut by the bound.
pub fn successors(p: &ParamProgram, ex: &Exploration, s: &State, a: u32) -> Vec<(TransitionId, Option<State>)> {
    let env = ex.valuation(s);
    let pc_ix = ex.index_of(&ConcreteVar::local(PC, a)).unwrap();
    let Value::Loc(pc) = s[pc_ix] else { return Vec::new() };
    let me = Substitution::from_pairs([(p.tid_param.clone(), ThreadRef::Const(a))]);
    let mut out = Vec::new();
    for t in p.transitions_at(pc) {
        if !matches!(eval_formula(&me.apply(&t.guard), &env), Ok(true)) {
            continue;
        }
        let mut next = s.clone();
        next[pc_ix] = Value::Loc(t.next);
        let mut ok = true;
        for asg in &t.effect {
            let target = me.apply_expr(&crate::ir::Expr::Var(asg.var.clone()));
            let crate::ir::Expr::Var(v) = target else { unreachable!() };
            let ix = v.concrete().and_then(|c| ex.index_of(&c));
            match (ix, eval_expr(&me.apply_expr(&asg.value), &env)) {
                (Some(ix), Ok(EVal::Val(val))) if in_bound(&val, &ex.cfg) => next[ix] = val,
                (Some(_), Ok(_)) => ok = false,
                (_, r) => {
                    log::warn!("{}[{a}]: cannot execute `{} := {}`: {r:?}", t.id, asg.var, asg.value);
                    ok = false;
                }
            }
        }
        out.push((t.id.clone(), ok.then_some(next)));
    }
    out
}

fn initial_states(p: &ParamProgram, ex: &Exploration) -> Result<Vec<State>> {
    let max_loc = p.max_loc();
    let mut partial: Vec<Valuation> = vec![Valuation::new()];
    let mut slots: Vec<(ConcreteVar, Sort, Option<crate::ir::Expr>)> = Vec::new();
    for g in &p.globals {
        slots.push((ConcreteVar::global(g.name.clone()), g.sort.clone(), g.init.clone()));
    }
    for a in 0..ex.cfg.threads {
        let me = Substitution::from_pairs([(p.tid_param.clone(), ThreadRef::Const(a))]);
        slots.push((ConcreteVar::local(PC, a), Sort::Loc, Some(crate::ir::Expr::Loc(1))));
        for l in &p.locals {
            let init = l.init.as_ref().map(|e| me.apply_expr(e));
            slots.push((ConcreteVar::local(l.name.clone(), a), l.sort.clone(), init));
        }
    }
    for (var, sort, init) in slots {
        let mut next = Vec::new();
        for env in partial {
            let values = match &init {
                Some(e) => match eval_expr(e, &env) {
                    Ok(EVal::Val(v)) if in_bound(&v, &ex.cfg) => vec![v],
                    Ok(_) => Vec::new(),
                    Err(err) => return Err(Error::Config(format!("initial value of `{var}`: {err}"))),
                },
                None => domain(&sort, &ex.cfg, max_loc)?,
            };
            for v in values {
                let mut e = env.clone();
                e.insert(var.clone(), v);
                next.push(e);
            }
        }
        partial = next;
    }
    Ok(partial.into_iter().map(|env| ex.vars.iter().map(|v| env[v].clone()).collect()).collect())
}

/// Breadth-first closure from the initial states.
pub fn explore(p: &ParamProgram, cfg: &OracleConfig) -> Result<Exploration> {
    if !p.uses_only_core_sorts() {
        return Err(Error::UnsupportedTheory("the oracle handles only core sorts".into()));
    }
    if cfg.threads == 0 {
        return Err(Error::Config("at least one thread is required".into()));
    }
    let vars = p.instance_vars(cfg.threads);
    let sorts = vars.iter().map(|v| p.sort_of(&v.name).unwrap()).collect();
    let index = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut ex = Exploration {
        vars,
        sorts,
        index,
        states: Vec::new(),
        initial: 0,
        parent: Vec::new(),
        steps: Vec::new(),
        bounded: false,
        cfg: cfg.clone(),
    };
    let mut seen: HashMap<State, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in initial_states(p, &ex)? {
        if !seen.contains_key(&s) {
            seen.insert(s.clone(), ex.states.len());
            queue.push_back(ex.states.len());
            ex.states.push(s);
            ex.parent.push(None);
        }
    }
    ex.initial = ex.states.len();
    while let Some(i) = queue.pop_front() {
        let s = ex.states[i].clone();
        for a in 0..cfg.threads {
            for (tid, next) in successors(p, &ex, &s, a) {
                let Some(next) = next else {
                    ex.bounded = true;
                    continue;
                };
                let j = match seen.get(&next) {
                    Some(&j) => j,
                    None => {
                        if ex.states.len() >= cfg.max_states {
                            return Err(Error::StateExplosion(cfg.max_states));
                        }
                        let j = ex.states.len();
                        seen.insert(next.clone(), j);
                        ex.states.push(next);
                        ex.parent.push(Some(i));
                        queue.push_back(j);
                        j
                    }
                };
                ex.steps.push(Step { from: i, transition: tid, thread: a, to: j });
            }
        }
    }
    Ok(ex)
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub state: serde_json::Value,
    pub assignment: String,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub invariant: String,
    pub holds: bool,
    pub states: usize,
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Violation>,
}

/// Evaluates every instantiation of `inv` over `[N]` at every reachable state.
pub fn check_invariant(ex: &Exploration, inv: &Invariant) -> InvariantCheck {
    let alphas = all_assignments(&inv.index_vars, ex.cfg.threads);
    let bodies: Vec<(String, Formula)> = alphas.iter().map(|a| (a.describe(), a.apply(&inv.body))).collect();
    for (i, s) in ex.states.iter().enumerate() {
        let env = ex.valuation(s);
        for (desc, f) in &bodies {
            if !matches!(eval_formula(f, &env), Ok(true)) {
                return InvariantCheck {
                    invariant: inv.name.clone(),
                    holds: false,
                    states: ex.states.len(),
                    bounded: ex.bounded,
                    witness: Some(Violation { state: ex.state_json(s), assignment: desc.clone(), trace: ex.trace(i) }),
                };
            }
        }
    }
    InvariantCheck { invariant: inv.name.clone(), holds: true, states: ex.states.len(), bounded: ex.bounded, witness: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Reachability {
    Reachable,
    Spurious,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub verdict: Reachability,
    /// The model mentions values the bound cannot represent.
    pub bound_too_small: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching_state: Option<serde_json::Value>,
    /// For reachable pre-states with a primed part: whether some single
    /// step from the matching state produces it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_confirmed: Option<bool>,
}

/// Reads a counter-model from a JSON object such as `{"pc[0]": 4, "min": 1}`.
pub fn model_from_json(p: &ParamProgram, v: &serde_json::Value) -> Result<CounterModel> {
    let obj = v.as_object().ok_or_else(|| Error::Config("a counter-model must be a JSON object".into()))?;
    let mut cm = CounterModel::default();
    for (k, val) in obj {
        let var: ConcreteVar = k.parse().map_err(Error::Config)?;
        let sort = p.sort_of(&var.name).ok_or_else(|| Error::unknown_variable(var.name.clone()))?;
        let value = Value::from_json(val, &sort)
            .ok_or_else(|| Error::Config(format!("`{k}`: {val} is not a value of sort {sort}")))?;
        cm.assignments.insert(var, value);
    }
    Ok(cm)
}

/// Reachable when some explored state agrees with the model's unprimed part.
pub fn classify_counter_model(p: &ParamProgram, cm: &CounterModel, ex: &Exploration) -> Result<Classification> {
    let pre = cm.pre_state();
    let mut fixed = Vec::new();
    let mut bound_too_small = false;
    for (var, val) in &pre {
        if !in_bound(val, &ex.cfg) {
            bound_too_small = true;
        }
        match ex.index_of(var) {
            Some(ix) => fixed.push((ix, val)),
            None if var.thread.is_some_and(|t| t >= ex.cfg.threads) => bound_too_small = true,
            None => return Err(Error::unknown_variable(var.to_string())),
        }
    }
    if bound_too_small {
        log::warn!("counter-model exceeds the exploration bound; classification is inconclusive");
    }
    let found = ex.states.iter().position(|s| fixed.iter().all(|(ix, v)| s[*ix] == **v));
    let Some(i) = found.filter(|_| !bound_too_small) else {
        return Ok(Classification { verdict: Reachability::Spurious, bound_too_small, matching_state: None, step_confirmed: None });
    };
    let s = &ex.states[i];
    let post: Vec<(usize, &Value)> = cm
        .assignments
        .iter()
        .filter(|(k, _)| k.primed)
        .filter_map(|(k, v)| ex.index_of(&k.unprimed()).map(|ix| (ix, v)))
        .collect();
    let step_confirmed = (!post.is_empty()).then(|| {
        (0..ex.cfg.threads).any(|a| {
            successors(p, ex, s, a)
                .into_iter()
                .filter_map(|(_, n)| n)
                .any(|n| post.iter().all(|(ix, v)| n[*ix] == **v))
        })
    });
    Ok(Classification {
        verdict: Reachability::Reachable,
        bound_too_small,
        matching_state: Some(ex.state_json(s)),
        step_confirmed,
    })
}

fn swap_tid(t: u32, i: u32, j: u32) -> u32 {
    if t == i {
        j
    } else if t == j {
        i
    } else {
        t
    }
}

/// The state swap `π_ij`: exchanges the locals of threads `i` and `j` and
/// renames tid values. Ints, Booleans, locations and sets are fixed.
pub fn swap_state(ex: &Exploration, s: &State, i: u32, j: u32) -> State {
    ex.vars
        .iter()
        .map(|v| {
            let src = match v.thread {
                Some(t) => ConcreteVar { thread: Some(swap_tid(t, i, j)), ..v.clone() },
                None => v.clone(),
            };
            match &s[ex.index_of(&src).unwrap()] {
                Value::Tid(t) => Value::Tid(swap_tid(*t, i, j)),
                other => other.clone(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    pub ok: bool,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

/// Checks, on sampled explored steps and every thread pair, that the step
/// commutes with the swap, that initial states are closed under the swap,
/// and that guards and invariant instances agree on swapped states.
pub fn check_symmetry(
    p: &ParamProgram,
    spec: Option<&SpecFile>,
    ex: &Exploration,
    samples: usize,
    seed: u64,
) -> SymmetryCheck {
    let n = ex.cfg.threads;
    let pairs: Vec<(u32, u32)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut steps: Vec<&Step> = ex.steps.iter().collect();
    if samples < steps.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        steps.shuffle(&mut rng);
        steps.truncate(samples);
    }
    let lookup: HashMap<&State, usize> = ex.states.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let initial: BTreeSet<usize> = (0..ex.initial).collect();
    let fail = |checked, msg: String| SymmetryCheck { ok: false, checked, counterexample: Some(msg) };
    let mut checked = 0;

    for &(i, j) in &pairs {
        for k in 0..ex.initial {
            let t = swap_state(ex, &ex.states[k], i, j);
            if !lookup.get(&t).is_some_and(|x| initial.contains(x)) {
                return fail(checked, format!("swap ({i} {j}) of an initial state is not initial"));
            }
        }
    }

    let formulas: Vec<(String, Vec<String>, Formula)> = spec
        .map(|s| s.invariants.iter().map(|inv| (inv.name.clone(), inv.index_vars.clone(), inv.body.clone())).collect())
        .unwrap_or_default();
    for st in steps {
        let s = &ex.states[st.from];
        let s2 = &ex.states[st.to];
        for &(i, j) in &pairs {
            checked += 1;
            let ps = swap_state(ex, s, i, j);
            let ps2 = swap_state(ex, s2, i, j);
            let b = swap_tid(st.thread, i, j);
            let ok = successors(p, ex, &ps, b)
                .into_iter()
                .any(|(tid, next)| tid == st.transition && next.as_ref() == Some(&ps2));
            if !ok {
                return fail(
                    checked,
                    format!("{}[{}] from state {} does not commute with swap ({i} {j})", st.transition, st.thread, st.from),
                );
            }
            let env = ex.valuation(s);
            let penv = ex.valuation(&ps);
            for t in &p.transitions {
                for a in 0..n {
                    let g = Substitution::from_pairs([(p.tid_param.clone(), ThreadRef::Const(a))]).apply(&t.guard);
                    let pg = Substitution::from_pairs([(p.tid_param.clone(), ThreadRef::Const(swap_tid(a, i, j)))])
                        .apply(&t.guard);
                    if eval_formula(&g, &env).ok() != eval_formula(&pg, &penv).ok() {
                        return fail(checked, format!("guard of {} at thread {a} is not symmetric under ({i} {j})", t.id));
                    }
                }
            }
            for (name, vars, body) in &formulas {
                for alpha in all_assignments(vars, n) {
                    let swapped = Substitution::from_pairs(vars.iter().map(|v| {
                        let a = alpha.get(v).and_then(ThreadRef::as_const).unwrap();
                        (v.clone(), ThreadRef::Const(swap_tid(a, i, j)))
                    }));
                    if eval_formula(&alpha.apply(body), &env).ok() != eval_formula(&swapped.apply(body), &penv).ok() {
                        return fail(checked, format!("`{name}` under {} is not symmetric under ({i} {j})", alpha.describe()));
                    }
                }
            }
        }
    }
    SymmetryCheck { ok: true, checked, counterexample: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, parse_spec};

    const PRG: &str = "global\n  int x := 0\nprocedure main()\nlocal\n  int t := 0\nbegin\n  1: loop\n  2: { t := x; x := x + 1 }\n  3: endloop\nend\n";

    #[test]
    fn bounded_exploration_is_marked() {
        let p = parse_program(PRG, "t.prg").unwrap();
        let ex = explore(&p, &OracleConfig { threads: 2, int_bound: 3, max_states: 1000 }).unwrap();
        assert!(ex.bounded);
        assert_eq!(ex.initial, 1);
        let x = ex.index_of(&"x".parse().unwrap()).unwrap();
        assert!(ex.states.iter().all(|s| matches!(s[x], Value::Int(n) if n < 3)));
    }

    #[test]
    fn state_cap() {
        let p = parse_program(PRG, "t.prg").unwrap();
        let r = explore(&p, &OracleConfig { threads: 2, int_bound: 50, max_states: 10 });
        assert!(matches!(r, Err(Error::StateExplosion(10))));
    }

    #[test]
    fn violation_has_trace() {
        let p = parse_program(PRG, "t.prg").unwrap();
        let spec = parse_spec("invariant low(i) := t(i) < 1", "t.inv", &p).unwrap();
        let ex = explore(&p, &OracleConfig { threads: 2, int_bound: 4, max_states: 1000 }).unwrap();
        let c = check_invariant(&ex, spec.get("low").unwrap());
        assert!(!c.holds);
        assert!(!c.witness.unwrap().trace.is_empty());
    }

    #[test]
    fn swap_is_an_involution() {
        let p = parse_program(PRG, "t.prg").unwrap();
        let ex = explore(&p, &OracleConfig { threads: 3, int_bound: 4, max_states: 10_000 }).unwrap();
        for s in &ex.states {
            assert_eq!(&swap_state(&ex, &swap_state(&ex, s, 0, 2), 0, 2), s);
            assert_eq!(&swap_state(&ex, s, 1, 1), s);
        }
        assert!(check_symmetry(&p, None, &ex, 100, 7).ok);
    }
}
