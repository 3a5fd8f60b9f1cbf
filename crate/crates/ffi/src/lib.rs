//! C ABI for pinv.
//!
//! Objects are opaque handles created by `*_parse`/`*_new` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`PinvStatus`]; on failure `pinv_last_error` describes the problem.
//! Strings returned to the caller are owned by it and must be released
//! with `pinv_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use pinv_core::engine::{self, ConfigEcho, Job, Request, Target};
use pinv_core::frontend::{parse_program, parse_proof_graph, parse_spec, ProofGraph, SpecFile};
use pinv_core::ir::ParamProgram;
use pinv_core::rules::Rule;
use pinv_core::solve::decide::smt_text;
use pinv_core::solve::SolverConfig;
use pinv_core::tactics::SupportTactic;
use pinv_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Sort = 4,
    NotSymmetric = 5,
    UnknownName = 6,
    UnsupportedTheory = 7,
    Solver = 8,
    Io = 9,
    OutOfRange = 10,
    Internal = 11,
}

/// A parsed program.
pub struct PinvProgram(ParamProgram);

/// A parsed specification, bound to the program it was parsed against.
pub struct PinvSpec(SpecFile);

/// A parsed proof graph.
pub struct PinvGraph(ProofGraph);

/// Generated verification conditions.
pub struct PinvVcSet(Vec<Job>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PinvStatus {
    match e {
        Error::Parse { .. } | Error::DuplicateLocation(_) | Error::Arity { .. } | Error::Json(_) => PinvStatus::Parse,
        Error::Sort(_) => PinvStatus::Sort,
        Error::NotSymmetric(_) => PinvStatus::NotSymmetric,
        Error::UnknownVariable { .. } | Error::UnknownInvariant(_) | Error::DanglingSupportName(_) => {
            PinvStatus::UnknownName
        }
        Error::UnsupportedTheory(_) => PinvStatus::UnsupportedTheory,
        Error::SolverNotFound(_) | Error::Protocol(_) => PinvStatus::Solver,
        Error::Io { .. } => PinvStatus::Io,
        Error::StateExplosion(_) | Error::Config(_) => PinvStatus::OutOfRange,
    }
}

struct Fail(PinvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PinvStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            PinvStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PinvStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(PinvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(PinvStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(out: *mut T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        Err(Fail(PinvStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap().into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn pinv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `src` and `origin` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_program_parse(
    src: *const c_char,
    origin: *const c_char,
    out: *mut *mut PinvProgram,
) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let src = str_arg(src, "src")?;
        let origin = opt_str_arg(origin, "origin")?.unwrap_or("<program>");
        let p = parse_program(src, origin)?;
        *out = Box::into_raw(Box::new(PinvProgram(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from `pinv_program_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pinv_program_free(p: *mut PinvProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of transitions of the program.
///
/// # Safety
/// `p` must be a live program handle.
#[no_mangle]
pub unsafe extern "C" fn pinv_program_transition_count(p: *const PinvProgram, out: *mut usize) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = handle(p, "program")?.0.transitions.len();
        Ok(())
    })
}

/// # Safety
/// `program` must be a live handle; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_spec_parse(
    program: *const PinvProgram,
    src: *const c_char,
    origin: *const c_char,
    out: *mut *mut PinvSpec,
) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let p = handle(program, "program")?;
        let src = str_arg(src, "src")?;
        let origin = opt_str_arg(origin, "origin")?.unwrap_or("<spec>");
        let s = parse_spec(src, origin, &p.0)?;
        *out = Box::into_raw(Box::new(PinvSpec(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from `pinv_spec_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pinv_spec_free(s: *mut PinvSpec) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// Strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_graph_parse(
    src: *const c_char,
    origin: *const c_char,
    out: *mut *mut PinvGraph,
) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let src = str_arg(src, "src")?;
        let origin = opt_str_arg(origin, "origin")?.unwrap_or("<graph>");
        let g = parse_proof_graph(src, origin)?;
        *out = Box::into_raw(Box::new(PinvGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from `pinv_graph_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pinv_graph_free(g: *mut PinvGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn request(graph: *const PinvGraph, invariant: *const c_char) -> Result<Request, Fail> {
    let target = match (graph.as_ref(), opt_str_arg(invariant, "invariant")?) {
        (Some(g), _) => Target::Graph(g.0.clone()),
        (None, Some(name)) => Target::Single { invariant: name.to_string(), rule: Rule::PInv, supports: Vec::new() },
        (None, None) => return Err(Fail(PinvStatus::NullPointer, "need a graph or an invariant name".into())),
    };
    Ok(Request { target, tactic: SupportTactic::default(), partial_substitutions: false })
}

/// Generates VCs for a proof graph, or for `invariant` under p-inv when
/// `graph` is null.
///
/// # Safety
/// Handles must be live; `invariant` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_generate(
    program: *const PinvProgram,
    spec: *const PinvSpec,
    graph: *const PinvGraph,
    invariant: *const c_char,
    out: *mut *mut PinvVcSet,
) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let p = handle(program, "program")?;
        let s = handle(spec, "spec")?;
        let jobs = engine::generate(&p.0, &s.0, &request(graph, invariant)?)?;
        *out = Box::into_raw(Box::new(PinvVcSet(jobs)));
        Ok(())
    })
}

/// # Safety
/// `v` must be null or a handle from `pinv_vcs_generate`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_free(v: *mut PinvVcSet) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `v` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_len(v: *const PinvVcSet, out: *mut usize) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = handle(v, "vcs")?.0.len();
        Ok(())
    })
}

unsafe fn job<'a>(v: *const PinvVcSet, i: usize) -> Result<&'a Job, Fail> {
    let set = handle(v, "vcs")?;
    set.0.get(i).ok_or_else(|| Fail(PinvStatus::OutOfRange, format!("index {i} out of range ({})", set.0.len())))
}

/// Identifier of VC `i`; release with `pinv_string_free`.
///
/// # Safety
/// `v` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_id(v: *const PinvVcSet, i: usize, out: *mut *mut c_char) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = c_string(job(v, i)?.vc.id.clone());
        Ok(())
    })
}

/// SMT-LIB2 script of VC `i`; release with `pinv_string_free`.
///
/// # Safety
/// `v` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_smt(v: *const PinvVcSet, i: usize, out: *mut *mut c_char) -> PinvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let j = job(v, i)?;
        *out = c_string(smt_text(&j.vc, j.vc.lazy.len(), &j.tactic, false)?);
        Ok(())
    })
}

/// Decides every VC and returns the JSON report. `solver_cmd` may be null
/// for the default; `exit_code` receives 0 (all valid), 1 (some invalid)
/// or 2 (unknown or timeout left).
///
/// # Safety
/// `v` must be a live handle; `solver_cmd` null or NUL-terminated;
/// `report` and `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn pinv_vcs_verify(
    v: *const PinvVcSet,
    solver_cmd: *const c_char,
    timeout_s: u64,
    jobs: usize,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> PinvStatus {
    guard(|| {
        out_ptr(report, "report")?;
        out_ptr(exit_code, "exit_code")?;
        let set = handle(v, "vcs")?;
        let mut cfg = match opt_str_arg(solver_cmd, "solver_cmd")? {
            Some(c) => SolverConfig::from_command(c),
            None => SolverConfig::from_env(),
        };
        if timeout_s > 0 {
            cfg.timeout = Duration::from_secs(timeout_s);
        }
        let echo = ConfigEcho {
            program: String::new(),
            spec: String::new(),
            graph: None,
            invariant: None,
            rule: set.0.first().map_or(Rule::PInv, |j| j.vc.provenance.rule),
            supports: Vec::new(),
            tactic: SupportTactic::default().mode.label().to_string(),
            simplify: true,
            solver: cfg.command.join(" "),
            timeout_s: cfg.timeout.as_secs(),
            quantified_min: cfg.quantified_min,
            partial_substitutions: false,
        };
        let r = engine::verify(&set.0, &cfg, jobs.max(1), echo)?;
        *report = c_string(r.to_json()?);
        *exit_code = r.exit_code();
        Ok(())
    })
}
