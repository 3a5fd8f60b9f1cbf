mod common;

use std::collections::BTreeSet;

use common::*;
use pinv_core::frontend::{parse_proof_graph, parse_spec};
use pinv_core::rules::{
    g_inv, p_inv, p_inv_with, param_premises, sp_inv, PremiseKind, Rule, RuleOptions, SupportSet,
};
use pinv_core::tactics::{SupportTactic, TacticMode};
use pinv_core::Error;

fn no_support<'a>() -> SupportSet<'a> {
    SupportSet { supports: Vec::new(), annotations: None, self_support: false }
}

#[test]
fn premise_count_law() {
    let pr = set_sect();
    let mutex = pr.spec.get("mutexS").unwrap();
    let prem = param_premises(&pr.program, mutex, Rule::PInv, &no_support(), &RuleOptions::default());
    assert_eq!(prem.len(), 1 + 2 * 7 + 7);
    let labels: BTreeSet<&str> = prem.iter().map(|p| p.label.as_str()).collect();
    assert_eq!(labels, BTreeSet::from(["P1", "P2-i", "P2-j", "P3"]));
    let fresh = prem.iter().filter(|p| p.kind == PremiseKind::FreshThread).count();
    assert_eq!(fresh, 7);
}

#[test]
fn zero_index_invariant() {
    let pr = int_sect();
    let spec = parse_spec("invariant pos := tick >= min", "z.inv", &pr.program).unwrap();
    let inv = spec.get("pos").unwrap();
    let prem = param_premises(&pr.program, inv, Rule::PInv, &no_support(), &RuleOptions::default());
    assert_eq!(prem.len(), 1 + 7);
    let vcs = p_inv(&pr.program, inv).unwrap();
    // One thread suffices for the fresh-thread premises.
    assert!(vcs.iter().all(|vc| vc.threads <= 1));
}

#[test]
fn concretization_ids_and_dedup() {
    let pr = int_sect();
    let vcs = p_inv(&pr.program, pr.spec.get("mutex").unwrap()).unwrap();
    let ids: BTreeSet<&str> = vcs.iter().map(|v| v.id.as_str()).collect();
    assert_eq!(ids.len(), vcs.len());
    assert!(ids.contains("mutex__P1__tinit__a0"));
    assert!(ids.contains("mutex__P3__t4__a0"));
    // P1 over (i, j) in [2]: (0,0) and (0,1) survive renaming; (1,0), (1,1) collapse.
    assert_eq!(vcs.iter().filter(|v| v.provenance.premise == "P1").count(), 2);
    for vc in &vcs {
        assert!(!vc.hypothesis.has_array_terms() && !vc.conclusion.has_array_terms(), "{}", vc.id);
        assert!(vc.hypothesis.free_tids().is_empty(), "{}", vc.id);
        let used: BTreeSet<u32> = vc.hypothesis.const_threads().union(&vc.conclusion.const_threads()).copied().collect();
        assert!(used.iter().all(|t| *t < vc.threads));
    }
}

#[test]
fn support_instances_cover_all_substitutions() {
    let pr = int_sect();
    let mutex = pr.spec.get("mutex").unwrap();
    let sup = [pr.spec.get("minticket").unwrap(), pr.spec.get("notsame").unwrap()];
    let opts = RuleOptions { tactic: SupportTactic { mode: TacticMode::FullSupp, simplify: true }, ..Default::default() };
    let set = SupportSet { supports: sup.to_vec(), annotations: None, self_support: false };
    let prem = param_premises(&pr.program, mutex, Rule::SpInv, &set, &opts);
    let p3 = prem.iter().find(|p| p.label == "S3").unwrap();
    assert_eq!(p3.tid_vars, ["i", "j", "k"]);
    let minticket = p3.supports.iter().find(|s| s.name == "minticket").unwrap();
    assert_eq!(minticket.substitutions.len(), 3);
    let notsame = p3.supports.iter().find(|s| s.name == "notsame").unwrap();
    assert_eq!(notsame.substitutions.len(), 9);
}

#[test]
fn sp_inv_without_supports_is_p_inv() {
    let pr = int_sect();
    let inv = pr.spec.get("activelow").unwrap();
    let a = sp_inv(&pr.program, inv, &[], &RuleOptions::default()).unwrap();
    let b = p_inv_with(&pr.program, inv, &RuleOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn graph_sources_use_plain_labels() {
    let pr = int_sect();
    let out = g_inv(&pr.program, &pr.graph, &pr.spec, &RuleOptions::default()).unwrap();
    let names: Vec<&str> = out.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["activelow", "notsame", "minticket", "mutex"]);
    assert!(out[0].1.iter().all(|vc| vc.provenance.rule == Rule::PInv));
    assert!(out[3].1.iter().all(|vc| vc.provenance.rule == Rule::GInv));
    let self_used = out[1].1.iter().any(|vc| {
        vc.provenance.premise == "G2-i" && vc.provenance.supports.iter().any(|s| s.name == "notsame")
    });
    assert!(self_used);
}

#[test]
fn graph_errors() {
    let pr = int_sect();
    let g = parse_proof_graph("-> mutex\n-> nosuch", "g").unwrap();
    assert!(matches!(g_inv(&pr.program, &g, &pr.spec, &RuleOptions::default()), Err(Error::UnknownInvariant(_))));
    assert!(matches!(parse_proof_graph("-> mutex [*:ghost]", "g"), Err(Error::DanglingSupportName(_))));
}

#[test]
fn asymmetric_candidates_are_rejected() {
    let pr = int_sect();
    let spec = parse_spec("invariant first(i) := i = @0 -> ticket(i) >= 0", "a.inv", &pr.program).unwrap();
    assert!(matches!(p_inv(&pr.program, spec.get("first").unwrap()), Err(Error::NotSymmetric(_))));
}
