//! The invariance rules p-inv, sp-inv and g-inv, and concretization of
//! their parametrized premises into closed verification conditions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{check_full_symmetry, Annotation, Invariant, PremiseClass, ProofGraph, SpecFile};
use crate::ir::{
    all_assignments, build_initial, expand_arrays, ConcreteVar, CmpOp, Expr, Formula, ParamProgram, Sort, Substitution,
    ThreadRef, Transition,
};
use crate::tactics::{select_support, SupportTactic, TacticMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    PInv,
    SpInv,
    GInv,
}

impl Rule {
    fn letter(self) -> char {
        match self {
            Rule::PInv => 'P',
            Rule::SpInv => 'S',
            Rule::GInv => 'G',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PremiseKind {
    Initiation,
    /// The acting thread is one of the formula's index variables.
    SameThread,
    /// The acting thread is fresh.
    FreshThread,
}

impl PremiseKind {
    pub fn class(self) -> Option<PremiseClass> {
        match self {
            PremiseKind::Initiation => None,
            PremiseKind::SameThread => Some(PremiseClass::N),
            PremiseKind::FreshThread => Some(PremiseClass::E),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoryClass {
    PositionOnly,
    IntAndSets,
    Unsupported,
}

/// One support invariant together with the instantiations used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportUse {
    pub name: String,
    pub substitutions: Vec<String>,
}

/// A premise before concretization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamPremise {
    pub invariant: String,
    pub rule: Rule,
    pub kind: PremiseKind,
    /// `P1`, `P2-i`, `S3`, ...
    pub label: String,
    pub transition: Option<Transition>,
    pub acting: Option<String>,
    /// Ordered tid variables: the candidate's, then the fresh one, then any
    /// introduced by partial support instantiation.
    pub tid_vars: Vec<String>,
    pub hypothesis: Vec<Formula>,
    /// Support batches added one at a time by the lazy tactic.
    pub lazy: Vec<Formula>,
    pub conclusion: Formula,
    pub supports: Vec<SupportUse>,
}

impl ParamPremise {
    pub fn transition_tag(&self) -> String {
        match &self.transition {
            Some(t) => t.id.to_string(),
            None => "tinit".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub invariant: String,
    pub rule: Rule,
    pub premise: String,
    pub kind: PremiseKind,
    pub transition: Option<String>,
    pub acting_thread: Option<u32>,
    pub assignment: String,
    pub supports: Vec<SupportUse>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationCondition {
    pub id: String,
    pub hypothesis: Formula,
    /// Extra support conjuncts, tried in order under the lazy tactic.
    pub lazy: Vec<Formula>,
    pub conclusion: Formula,
    pub provenance: Provenance,
    pub theory: TheoryClass,
    /// Size of the concrete instance: thread ids are `0..threads`.
    pub threads: u32,
    /// Set when the hypothesis contains a contradictory tid (dis)equality.
    pub trivial: bool,
    /// Highest program location, for range constraints.
    pub max_loc: u32,
}

impl VerificationCondition {
    /// Hypothesis including every lazy batch.
    pub fn full_hypothesis(&self) -> Formula {
        self.hypothesis_with(self.lazy.len())
    }

    pub fn hypothesis_with(&self, batches: usize) -> Formula {
        let mut parts = vec![self.hypothesis.clone()];
        parts.extend(self.lazy.iter().take(batches).cloned());
        Formula::and(parts)
    }

    /// Every concrete variable occurring in the VC, sorted.
    pub fn variables(&self) -> BTreeMap<ConcreteVar, Sort> {
        let mut out = BTreeMap::new();
        let mut add = |f: &Formula| {
            f.visit_vars(&mut |v| {
                if let Some(c) = v.concrete() {
                    out.insert(c, v.sort.clone());
                }
            })
        };
        add(&self.hypothesis);
        self.lazy.iter().for_each(&mut add);
        add(&self.conclusion);
        out
    }
}

/// Options shared by every rule.
#[derive(Clone, Debug, Default)]
pub struct RuleOptions {
    pub tactic: SupportTactic,
    /// Allow support instantiations that leave variables free.
    pub partial_substitutions: bool,
}

fn fresh_name(taken: &BTreeSet<String>) -> String {
    for c in ["j", "k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w"] {
        if !taken.contains(c) {
            return c.to_string();
        }
    }
    (0..).map(|n| format!("t{n}")).find(|c| !taken.contains(c)).unwrap()
}

fn ensure_symmetric(p: &ParamProgram, spec_invs: &[&Invariant]) -> Result<()> {
    let spec = SpecFile { macros: Vec::new(), invariants: spec_invs.iter().map(|i| (*i).clone()).collect() };
    let r = check_full_symmetry(p, &spec);
    if r.symmetric {
        Ok(())
    } else {
        Err(Error::NotSymmetric(r.witness.unwrap_or_default()))
    }
}

/// Support context for one candidate: which invariants may be instantiated,
/// and the annotations restricting them.
pub struct SupportSet<'a> {
    pub supports: Vec<&'a Invariant>,
    pub annotations: Option<&'a [Annotation]>,
    /// Whether the candidate itself is among its supports (g-inv).
    pub self_support: bool,
}

/// Parametrized premises of a rule, in (premise, transition) order.
pub fn param_premises(
    p: &ParamProgram,
    phi: &Invariant,
    rule: Rule,
    support: &SupportSet,
    opts: &RuleOptions,
) -> Vec<ParamPremise> {
    let letter = rule.letter();
    let vars = phi.index_vars.clone();
    let mut out = Vec::new();

    out.push(ParamPremise {
        invariant: phi.name.clone(),
        rule,
        kind: PremiseKind::Initiation,
        label: format!("{letter}1"),
        transition: None,
        acting: None,
        tid_vars: vars.clone(),
        hypothesis: vec![build_initial(p, &vars)],
        lazy: Vec::new(),
        conclusion: phi.body.clone(),
        supports: Vec::new(),
    });

    let primed = phi.body.prime();
    let mut consecution = |kind: PremiseKind, acting: &str, label: String, tid_vars: Vec<String>, t: &Transition| {
        let mut hyp = vec![phi.body.clone()];
        if kind == PremiseKind::FreshThread {
            for sigma in crate::ir::all_var_maps(&vars, &tid_vars) {
                hyp.push(sigma.apply(&phi.body));
            }
            for k in &vars {
                hyp.push(Formula::ne(Expr::Tid(ThreadRef::var(acting)), Expr::Tid(ThreadRef::var(k.clone()))));
            }
        }
        let picks = select_support(p, phi, t, kind, support, &tid_vars, opts);
        let mut lazy = Vec::new();
        let mut uses = Vec::new();
        let mut extra_vars: Vec<String> = Vec::new();
        for pick in picks {
            let inst: Vec<Formula> = pick.substitutions.iter().map(|s| s.apply(&pick.body)).collect();
            for f in &inst {
                for v in f.free_tids() {
                    if !tid_vars.contains(&v) && !extra_vars.contains(&v) {
                        extra_vars.push(v);
                    }
                }
            }
            uses.push(SupportUse {
                name: pick.name.clone(),
                substitutions: pick.substitutions.iter().map(Substitution::describe).collect(),
            });
            if opts.tactic.mode == TacticMode::Lazy {
                lazy.push(Formula::and(inst));
            } else {
                hyp.extend(inst);
            }
        }
        hyp.push(t.relation(p, &ThreadRef::var(acting)));
        let mut all_vars = tid_vars.clone();
        all_vars.extend(extra_vars);
        out.push(ParamPremise {
            invariant: phi.name.clone(),
            rule,
            kind,
            label,
            transition: Some(t.clone()),
            acting: Some(acting.to_string()),
            tid_vars: all_vars,
            hypothesis: dedup(hyp),
            lazy,
            conclusion: primed.clone(),
            supports: uses,
        });
    };

    for k in &vars {
        for t in &p.transitions {
            consecution(PremiseKind::SameThread, k, format!("{letter}2-{k}"), vars.clone(), t);
        }
    }
    let taken: BTreeSet<String> = vars.iter().cloned().collect();
    let fresh = fresh_name(&taken);
    let mut with_fresh = vars.clone();
    with_fresh.push(fresh.clone());
    for t in &p.transitions {
        consecution(PremiseKind::FreshThread, &fresh, format!("{letter}3"), with_fresh.clone(), t);
    }
    out
}

fn dedup(fs: Vec<Formula>) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    fs.into_iter().filter(|f| *f != Formula::True && seen.insert(f.clone())).collect()
}

/// Renames thread constants to `0..` in order of first occurrence.
fn canonical_renaming(parts: &[&Formula], threads: u32) -> Substitution {
    let mut order: Vec<u32> = Vec::new();
    for f in parts {
        f.visit_threads(&mut |t| {
            if let ThreadRef::Const(a) = t {
                if !order.contains(a) {
                    order.push(*a);
                }
            }
        });
    }
    for a in 0..threads {
        if !order.contains(&a) {
            order.push(a);
        }
    }
    // Constants are renamed through placeholder variables to keep the map simultaneous.
    let map: BTreeMap<u32, u32> = order.iter().enumerate().map(|(new, old)| (*old, new as u32)).collect();
    let mut s = Substitution::new();
    for (old, new) in map {
        s.insert(format!("#{old}"), ThreadRef::Const(new));
    }
    s
}

fn rename_consts(f: &Formula, s: &Substitution) -> Formula {
    f.map_threads(&|t| match t {
        ThreadRef::Const(a) => s.get(&format!("#{a}")).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    })
}

fn contradictory_tids(f: &Formula) -> bool {
    f.conjuncts().iter().any(|c| match c {
        Formula::Cmp(CmpOp::Ne, Expr::Tid(ThreadRef::Const(a)), Expr::Tid(ThreadRef::Const(b))) => a == b,
        Formula::Cmp(CmpOp::Eq, Expr::Tid(ThreadRef::Const(a)), Expr::Tid(ThreadRef::Const(b))) => a != b,
        _ => false,
    })
}

pub fn theory_class(p: &ParamProgram, parts: &[&Formula]) -> TheoryClass {
    let mut unsupported = !p.uses_only_core_sorts();
    let mut position = true;
    for f in parts {
        f.visit_vars(&mut |v| {
            if !v.sort.is_core() {
                unsupported = true;
            }
            if !matches!(v.sort, Sort::Loc | Sort::Tid) {
                position = false;
            }
        });
    }
    if unsupported {
        TheoryClass::Unsupported
    } else if position {
        TheoryClass::PositionOnly
    } else {
        TheoryClass::IntAndSets
    }
}

/// Concretizes one parametrized premise over every assignment
/// `tid_vars → [m]`, dropping duplicates up to thread renaming.
pub fn concretize(p: &ParamProgram, prem: &ParamPremise) -> Vec<VerificationCondition> {
    let m = prem.tid_vars.len() as u32;
    let hyp = Formula::and(prem.hypothesis.clone());
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (idx, alpha) in all_assignments(&prem.tid_vars, m).into_iter().enumerate() {
        let h = alpha.apply(&hyp);
        let lz: Vec<Formula> = prem.lazy.iter().map(|f| alpha.apply(f)).collect();
        let c = alpha.apply(&prem.conclusion);
        let mut parts: Vec<&Formula> = vec![&h];
        parts.extend(lz.iter());
        parts.push(&c);
        let ren = canonical_renaming(&parts, m);
        let h = expand_arrays(&rename_consts(&h, &ren), m);
        let lz: Vec<Formula> = lz.iter().map(|f| expand_arrays(&rename_consts(f, &ren), m)).collect();
        let c = expand_arrays(&rename_consts(&c, &ren), m);
        if !seen.insert((h.clone(), lz.clone(), c.clone())) {
            continue;
        }
        let acting = prem.acting.as_ref().map(|k| {
            let a = alpha.get(k).and_then(ThreadRef::as_const).unwrap();
            ren.get(&format!("#{a}")).and_then(ThreadRef::as_const).unwrap()
        });
        let assignment = {
            let renamed: Vec<String> = prem
                .tid_vars
                .iter()
                .map(|k| {
                    let a = alpha.get(k).and_then(ThreadRef::as_const).unwrap();
                    let b = ren.get(&format!("#{a}")).and_then(ThreadRef::as_const).unwrap();
                    format!("{k}->{b}")
                })
                .collect();
            renamed.join(",")
        };
        let mut tparts: Vec<&Formula> = vec![&h, &c];
        tparts.extend(lz.iter());
        let theory = theory_class(p, &tparts);
        out.push(VerificationCondition {
            id: format!("{}__{}__{}__a{}", prem.invariant, prem.label, prem.transition_tag(), idx),
            trivial: contradictory_tids(&h),
            hypothesis: h,
            lazy: lz,
            conclusion: c,
            provenance: Provenance {
                invariant: prem.invariant.clone(),
                rule: prem.rule,
                premise: prem.label.clone(),
                kind: prem.kind,
                transition: prem.transition.as_ref().map(|t| t.id.to_string()),
                acting_thread: acting,
                assignment,
                supports: prem.supports.clone(),
            },
            theory,
            threads: m,
            max_loc: p.max_loc(),
        });
    }
    out
}

fn concretize_all(p: &ParamProgram, premises: &[ParamPremise]) -> Vec<VerificationCondition> {
    premises.iter().flat_map(|pr| concretize(p, pr)).collect()
}

pub fn p_inv(p: &ParamProgram, phi: &Invariant) -> Result<Vec<VerificationCondition>> {
    p_inv_with(p, phi, &RuleOptions::default())
}

pub fn p_inv_with(p: &ParamProgram, phi: &Invariant, opts: &RuleOptions) -> Result<Vec<VerificationCondition>> {
    ensure_symmetric(p, &[phi])?;
    let none = SupportSet { supports: Vec::new(), annotations: None, self_support: false };
    Ok(concretize_all(p, &param_premises(p, phi, Rule::PInv, &none, opts)))
}

pub fn sp_inv(
    p: &ParamProgram,
    phi: &Invariant,
    supports: &[&Invariant],
    opts: &RuleOptions,
) -> Result<Vec<VerificationCondition>> {
    if supports.is_empty() {
        log::warn!("sp-inv for `{}` without supports degenerates to p-inv", phi.name);
        return p_inv_with(p, phi, opts);
    }
    let mut all = vec![phi];
    all.extend(supports.iter().copied());
    ensure_symmetric(p, &all)?;
    let set = SupportSet { supports: supports.to_vec(), annotations: None, self_support: false };
    Ok(concretize_all(p, &param_premises(p, phi, Rule::SpInv, &set, opts)))
}

/// g-inv over a proof graph; one entry per node in file order.
pub fn g_inv(
    p: &ParamProgram,
    graph: &ProofGraph,
    spec: &SpecFile,
    opts: &RuleOptions,
) -> Result<Vec<(String, Vec<VerificationCondition>)>> {
    let mut invs = Vec::new();
    for n in &graph.nodes {
        invs.push(spec.get(&n.name)?);
        for s in n.supports() {
            if graph.node(&s).is_none() {
                return Err(Error::DanglingSupportName(s));
            }
        }
    }
    ensure_symmetric(p, &invs)?;
    let mut out = Vec::new();
    for n in &graph.nodes {
        let phi = spec.get(&n.name)?;
        let opts = &RuleOptions { tactic: opts.tactic.clone().with_hint(n.hint.as_ref()), ..opts.clone() };
        let names = n.supports();
        let vcs = if names.is_empty() {
            concretize_all(p, &param_premises(p, phi, Rule::PInv, &SupportSet { supports: vec![], annotations: None, self_support: false }, opts))
        } else {
            let supports = names.iter().filter(|s| **s != n.name).map(|s| spec.get(s)).collect::<Result<Vec<_>>>()?;
            let set = SupportSet { supports, annotations: Some(&n.annotations), self_support: true };
            concretize_all(p, &param_premises(p, phi, Rule::GInv, &set, opts))
        };
        out.push((n.name.clone(), vcs));
    }
    Ok(out)
}
