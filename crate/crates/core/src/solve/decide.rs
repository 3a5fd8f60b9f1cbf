//! The decision pipeline: simplification, the location procedure, then SMT.

use std::time::Instant;

use super::model::extract_model;
use super::runner::{run_solver, RawOutcome};
use super::smt::{emit_smt, SmtOptions};
use super::{position_dp, CounterModel, Dp, SolverConfig, SolverVerdict, Status};
use crate::error::{Error, Result};
use crate::eval::{eval_formula, Valuation};
use crate::ir::Formula;
use crate::rules::{TheoryClass, VerificationCondition};
use crate::tactics::{simplify_vc, SupportTactic, TacticMode};

/// The query actually sent to the back ends for one lazy round.
pub fn query(vc: &VerificationCondition, batches: usize, tactic: &SupportTactic) -> (Formula, Formula, bool) {
    let hyp = vc.hypothesis_with(batches);
    if tactic.simplify {
        let s = simplify_vc(&hyp, &vc.conclusion);
        (s.hypothesis, s.conclusion, s.trivial)
    } else {
        (hyp, vc.conclusion.clone(), false)
    }
}

/// SMT-LIB2 text for one round, as written by `--dump-smt`.
pub fn smt_text(
    vc: &VerificationCondition,
    batches: usize,
    tactic: &SupportTactic,
    quantified_min: bool,
) -> Result<String> {
    let (h, c, _) = query(vc, batches, tactic);
    Ok(emit_smt(&h, &c, &vc.variables(), &smt_options(vc, quantified_min))?.text)
}

fn smt_options(vc: &VerificationCondition, quantified_min: bool) -> SmtOptions {
    SmtOptions { quantified_min, threads: vc.threads, max_loc: vc.max_loc, comment: Some(vc.id.clone()) }
}

fn confirms(vc: &VerificationCondition, batches: usize, env: &Valuation) -> bool {
    matches!(eval_formula(&vc.hypothesis_with(batches), env), Ok(true))
        && matches!(eval_formula(&vc.conclusion, env), Ok(false))
}

fn smt_round(
    vc: &VerificationCondition,
    batches: usize,
    h: &Formula,
    c: &Formula,
    cfg: &SolverConfig,
) -> Result<SolverVerdict> {
    let unknown = |note: String| Ok(SolverVerdict::new(Status::Unknown, Dp::Smt).with_note(note));
    let mut quantified = cfg.quantified_min;
    loop {
        let script = match emit_smt(h, c, &vc.variables(), &smt_options(vc, quantified)) {
            Ok(s) => s,
            Err(Error::UnsupportedTheory(m)) => return unknown(format!("unsupported theory: {m}")),
            Err(e) => return Err(e),
        };
        let outcome = match run_solver(&script.text, cfg) {
            Ok(o) => o,
            Err(Error::Protocol(m)) => return unknown(format!("solver protocol error: {m}")),
            Err(e) => return Err(e),
        };
        match outcome {
            RawOutcome::Unsat => return Ok(SolverVerdict::new(Status::Valid, Dp::Smt)),
            RawOutcome::Timeout => return Ok(SolverVerdict::new(Status::Timeout, Dp::Smt)),
            RawOutcome::Unknown(m) => return unknown(m),
            RawOutcome::Sat(out) => {
                let env = match extract_model(&out, &script) {
                    Ok(env) => env,
                    Err(m) => return unknown(format!("unreadable model: {m}")),
                };
                if confirms(vc, batches, &env) {
                    let mut v = SolverVerdict::new(Status::Invalid, Dp::Smt);
                    v.model = Some(CounterModel { assignments: env });
                    return Ok(v);
                }
                if quantified {
                    return unknown("model does not refute the VC under exact setmin semantics".into());
                }
                log::debug!("{}: spurious model, retrying with the quantified setmin axiom", vc.id);
                quantified = true;
            }
        }
    }
}

fn round(
    vc: &VerificationCondition,
    batches: usize,
    tactic: &SupportTactic,
    cfg: &SolverConfig,
) -> Result<SolverVerdict> {
    if vc.trivial {
        return Ok(SolverVerdict::new(Status::Valid, Dp::Position));
    }
    let (h, c, trivial) = query(vc, batches, tactic);
    if trivial || position_dp(&h, &c, vc.max_loc) {
        return Ok(SolverVerdict::new(Status::Valid, Dp::Position));
    }
    if vc.theory == TheoryClass::Unsupported {
        return Ok(SolverVerdict::new(Status::Unknown, Dp::Position).with_note("unsupported theory"));
    }
    smt_round(vc, batches, &h, &c, cfg)
}

/// Decides one VC. Under the lazy tactic, support batches are added one at
/// a time while the solver keeps finding counter-models.
pub fn decide(vc: &VerificationCondition, tactic: &SupportTactic, cfg: &SolverConfig) -> Result<SolverVerdict> {
    let start = Instant::now();
    let mut batches = if tactic.mode == TacticMode::Lazy { 0 } else { vc.lazy.len() };
    let mut verdict = loop {
        let v = round(vc, batches, tactic, cfg)?;
        if v.status == Status::Invalid && batches < vc.lazy.len() {
            batches += 1;
            continue;
        }
        break v;
    };
    verdict.lazy_rounds = batches;
    verdict.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(verdict)
}
