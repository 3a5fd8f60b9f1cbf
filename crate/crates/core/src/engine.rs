//! Orchestration: VC generation for a request, parallel solving, reports
//! and on-disk VC dumps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontend::{ProofGraph, SpecFile};
use crate::ir::ParamProgram;
use crate::rules::{g_inv, p_inv_with, sp_inv, Provenance, Rule, RuleOptions, TheoryClass, VerificationCondition};
use crate::solve::decide::smt_text;
use crate::solve::{decide, CounterModel, Dp, SolverConfig, Status};
use crate::tactics::SupportTactic;

pub const REPORT_SCHEMA: u32 = 1;
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug)]
pub enum Target {
    Single { invariant: String, rule: Rule, supports: Vec<String> },
    Graph(ProofGraph),
}

/// What to verify and how.
#[derive(Clone, Debug)]
pub struct Request {
    pub target: Target,
    pub tactic: SupportTactic,
    pub partial_substitutions: bool,
}

/// A generated VC with the tactic that applies to it.
#[derive(Clone, Debug)]
pub struct Job {
    pub vc: VerificationCondition,
    pub tactic: SupportTactic,
}

pub fn generate(p: &ParamProgram, spec: &SpecFile, req: &Request) -> Result<Vec<Job>> {
    let opts = RuleOptions { tactic: req.tactic, partial_substitutions: req.partial_substitutions };
    let tag = |vcs: Vec<VerificationCondition>, tactic: SupportTactic| {
        vcs.into_iter().map(|vc| Job { vc, tactic }).collect::<Vec<_>>()
    };
    match &req.target {
        Target::Single { invariant, rule, supports } => {
            let phi = spec.get(invariant)?;
            let vcs = match rule {
                Rule::PInv => p_inv_with(p, phi, &opts)?,
                Rule::SpInv => {
                    let sup = supports.iter().map(|s| spec.get(s)).collect::<Result<Vec<_>>>()?;
                    for s in supports {
                        log::warn!("support `{s}` is assumed, not proven by this run");
                    }
                    sp_inv(p, phi, &sup, &opts)?
                }
                Rule::GInv => return Err(Error::Config("g-inv needs a proof graph".into())),
            };
            Ok(tag(vcs, req.tactic))
        }
        Target::Graph(graph) => {
            let mut out = Vec::new();
            for (name, vcs) in g_inv(p, graph, spec, &opts)? {
                let hint = graph.node(&name).and_then(|n| n.hint.as_ref());
                out.extend(tag(vcs, req.tactic.with_hint(hint)));
            }
            Ok(out)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: String,
    pub provenance: Provenance,
    pub dp_used: Dp,
    pub status: Status,
    pub elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<CounterModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub lazy_rounds: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub generated: usize,
    pub proved_by_position: usize,
    pub remaining: usize,
    pub valid_by_smt: usize,
    pub invalid: usize,
    pub unknown: usize,
    pub timeout: usize,
    /// All valid VCs, by either procedure.
    pub valid: usize,
}

impl Totals {
    pub fn from_rows(rows: &[Row]) -> Totals {
        let mut t = Totals { generated: rows.len(), ..Default::default() };
        for r in rows {
            match (r.status, r.dp_used) {
                (Status::Valid, Dp::Position) => t.proved_by_position += 1,
                (Status::Valid, Dp::Smt) => t.valid_by_smt += 1,
                (Status::Invalid, _) => t.invalid += 1,
                (Status::Unknown, _) => t.unknown += 1,
                (Status::Timeout, _) => t.timeout += 1,
            }
        }
        t.remaining = t.generated - t.proved_by_position;
        t.valid = t.proved_by_position + t.valid_by_smt;
        t
    }

    pub fn is_consistent(&self) -> bool {
        self.generated == self.proved_by_position + self.remaining
            && self.remaining == self.valid_by_smt + self.invalid + self.unknown + self.timeout
    }
}

/// Echo of the settings that determine the verdicts. The job count is left
/// out on purpose: reports must not depend on it.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub program: String,
    pub spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<String>,
    pub rule: Rule,
    pub supports: Vec<String>,
    pub tactic: String,
    pub simplify: bool,
    pub solver: String,
    pub timeout_s: u64,
    pub quantified_min: bool,
    pub partial_substitutions: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub totals: Totals,
    pub rows: Vec<Row>,
    pub elapsed_ms: u64,
}

impl RunReport {
    /// 0 all valid, 1 some invalid, 2 unknown or timeout left.
    pub fn exit_code(&self) -> i32 {
        if self.totals.invalid > 0 {
            1
        } else if self.totals.unknown + self.totals.timeout > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut per: BTreeMap<(&str, &str), [usize; 5]> = BTreeMap::new();
        for r in &self.rows {
            let e = per.entry((&r.provenance.invariant, &r.provenance.premise)).or_default();
            let i = match (r.status, r.dp_used) {
                (Status::Valid, Dp::Position) => 0,
                (Status::Valid, Dp::Smt) => 1,
                (Status::Invalid, _) => 2,
                (Status::Unknown, _) => 3,
                (Status::Timeout, _) => 4,
            };
            e[i] += 1;
        }
        out.push_str(&format!(
            "{:<16} {:<8} {:>6} {:>6} {:>6} {:>7} {:>7}\n",
            "invariant", "premise", "pos", "smt", "inv", "unknown", "timeout"
        ));
        for ((inv, prem), c) in per {
            out.push_str(&format!("{inv:<16} {prem:<8} {:>6} {:>6} {:>6} {:>7} {:>7}\n", c[0], c[1], c[2], c[3], c[4]));
        }
        let t = &self.totals;
        out.push_str(&format!(
            "generated {}, by position {}, remaining {} (valid {}, invalid {}, unknown {}, timeout {}) in {} ms\n",
            t.generated, t.proved_by_position, t.remaining, t.valid_by_smt, t.invalid, t.unknown, t.timeout, self.elapsed_ms
        ));
        for r in self.rows.iter().filter(|r| r.status == Status::Invalid) {
            let model = r.model.as_ref().map(|m| m.to_json().to_string()).unwrap_or_default();
            out.push_str(&format!("FAILED {} {model}\n", r.id));
        }
        out
    }
}

/// Decides every job on a pool of `jobs` threads; rows keep job order.
pub fn solve_all(jobs: &[Job], cfg: &SolverConfig, threads: usize) -> Result<Vec<Row>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let v = decide(&j.vc, &j.tactic, cfg)?;
                log::info!("{}: {:?} ({:?}, {} ms)", j.vc.id, v.status, v.dp_used, v.elapsed_ms);
                Ok(Row {
                    id: j.vc.id.clone(),
                    provenance: j.vc.provenance.clone(),
                    dp_used: v.dp_used,
                    status: v.status,
                    elapsed_ms: v.elapsed_ms,
                    model: v.model,
                    note: v.note,
                    lazy_rounds: v.lazy_rounds,
                })
            })
            .collect()
    })
}

pub fn verify(jobs: &[Job], cfg: &SolverConfig, threads: usize, config: ConfigEcho) -> Result<RunReport> {
    let start = Instant::now();
    let rows = solve_all(jobs, cfg, threads)?;
    let totals = Totals::from_rows(&rows);
    Ok(RunReport { schema_version: REPORT_SCHEMA, config, totals, rows, elapsed_ms: start.elapsed().as_millis() as u64 })
}

/// Removes every `elapsed_ms` field, for comparing reports across runs.
pub fn strip_elapsed(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_elapsed);
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestPremise {
    pub invariant: String,
    pub rule: Rule,
    pub premise: String,
    pub transition: Option<String>,
    pub vcs: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestVc {
    pub id: String,
    /// `None` when the VC lies outside the SMT fragment.
    pub file: Option<String>,
    pub theory: TheoryClass,
    pub threads: u32,
    pub trivial: bool,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub premises: Vec<ManifestPremise>,
    pub vcs: Vec<ManifestVc>,
}

pub fn manifest(jobs: &[Job], files: &BTreeMap<String, String>) -> Manifest {
    let mut premises: Vec<ManifestPremise> = Vec::new();
    for j in jobs {
        let pr = &j.vc.provenance;
        let same = |m: &ManifestPremise| {
            m.invariant == pr.invariant && m.premise == pr.premise && m.transition == pr.transition
        };
        match premises.iter_mut().find(|m| same(m)) {
            Some(m) => m.vcs.push(j.vc.id.clone()),
            None => premises.push(ManifestPremise {
                invariant: pr.invariant.clone(),
                rule: pr.rule,
                premise: pr.premise.clone(),
                transition: pr.transition.clone(),
                vcs: vec![j.vc.id.clone()],
            }),
        }
    }
    let vcs = jobs
        .iter()
        .map(|j| ManifestVc {
            id: j.vc.id.clone(),
            file: files.get(&j.vc.id).cloned(),
            theory: j.vc.theory,
            threads: j.vc.threads,
            trivial: j.vc.trivial,
            provenance: j.vc.provenance.clone(),
        })
        .collect();
    Manifest { schema_version: MANIFEST_SCHEMA, premises, vcs }
}

/// Writes `<id>.smt2` per VC (with every lazy batch) and `manifest.json`.
pub fn write_vcs(dir: &Path, jobs: &[Job], quantified_min: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for j in jobs {
        let text = match smt_text(&j.vc, j.vc.lazy.len(), &j.tactic, quantified_min) {
            Ok(t) => t,
            Err(Error::UnsupportedTheory(m)) => {
                log::warn!("{}: not dumped, {m}", j.vc.id);
                continue;
            }
            Err(e) => return Err(e),
        };
        let name = format!("{}.smt2", j.vc.id);
        let path = dir.join(&name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        files.insert(j.vc.id.clone(), name);
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest(jobs, &files))? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
