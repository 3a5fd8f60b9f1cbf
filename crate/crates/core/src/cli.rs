//! The `pinv` command line: `verify`, `vcs` and `oracle`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{self, ConfigEcho, Request, Target};
use crate::error::{Error, Result};
use crate::frontend::{load_graph, load_program, load_spec, read_source, SpecFile};
use crate::ir::ParamProgram;
use crate::oracle::{self, OracleConfig};
use crate::rules::Rule;
use crate::solve::{SolverConfig, DEFAULT_SOLVER, SOLVER_ENV};
use crate::tactics::{SupportTactic, TacticMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pinv", version, about = "Parametrized invariance checking for symmetric concurrent programs")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate and decide all VCs.
    Verify(VerifyArgs),
    /// Write the VCs as SMT-LIB2 files with a manifest, without solving.
    Vcs(VcsArgs),
    /// Bounded explicit-state checks on a concrete instance.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    Pinv,
    Spinv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TacticArg {
    Full,
    Supp,
    Offend,
    Lazy,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Program source (.prg).
    #[arg(long)]
    pub program: PathBuf,
    /// Invariant file (.inv).
    #[arg(long)]
    pub spec: PathBuf,
    /// Candidate invariant (with --rule).
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
    pub invariant: Option<String>,
    #[arg(long, value_enum, default_value = "pinv", requires = "invariant")]
    pub rule: RuleArg,
    /// Support invariant for spinv (repeatable).
    #[arg(long = "support", requires = "invariant")]
    pub supports: Vec<String>,
    /// Proof graph for g-inv.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "supp")]
    pub tactic: TacticArg,
    /// Skip formula simplification before solving.
    #[arg(long)]
    pub no_simplify: bool,
    /// Allow support instantiations that leave thread variables free.
    #[arg(long)]
    pub partial_substitutions: bool,
    /// Add the quantified minimality axiom for setmin.
    #[arg(long)]
    pub quantified_min: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Solver command; the script is passed on stdin.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Per-VC timeout in seconds.
    #[arg(long, default_value_t = 1800)]
    pub timeout: u64,
    /// Solver processes run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the VCs as SMT-LIB2 files.
    #[arg(long)]
    pub dump_vcs: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VcsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Program source (.prg).
    #[arg(long)]
    pub program: PathBuf,
    /// Invariant file (.inv).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Invariants to check (default: every invariant of `--spec`).
    #[arg(long = "invariant")]
    pub invariants: Vec<String>,
    /// Number of threads N.
    #[arg(long, default_value_t = 2)]
    pub threads: u32,
    /// Integer bound; larger values are pruned.
    #[arg(long, default_value_t = 4)]
    pub bound: i64,
    /// Give up after this many states.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    /// Counter-model (JSON object) to classify as reachable or spurious.
    #[arg(long)]
    pub classify: Vec<PathBuf>,
    /// Sampled steps for the symmetry check; 0 disables it.
    #[arg(long, default_value_t = 0)]
    pub symmetry_samples: usize,
    /// Seed for sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write reachable states as line-delimited JSON.
    #[arg(long)]
    pub dump_states: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

struct Loaded {
    program: ParamProgram,
    spec: SpecFile,
    request: Request,
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let program = load_program(&input.program)?;
    let spec = load_spec(&input.spec, &program)?;
    let target = match (&input.graph, &input.invariant) {
        (Some(g), _) => Target::Graph(load_graph(g)?),
        (None, Some(inv)) => {
            let rule = match input.rule {
                RuleArg::Pinv => Rule::PInv,
                RuleArg::Spinv => Rule::SpInv,
            };
            Target::Single { invariant: inv.clone(), rule, supports: input.supports.clone() }
        }
        (None, None) => return Err(Error::Config("either --invariant or --graph is required".into())),
    };
    let mode = match input.tactic {
        TacticArg::Full => TacticMode::FullSupp,
        TacticArg::Supp => TacticMode::Supp,
        TacticArg::Offend => TacticMode::Offend,
        TacticArg::Lazy => TacticMode::Lazy,
    };
    let request = Request {
        target,
        tactic: SupportTactic { mode, simplify: !input.no_simplify },
        partial_substitutions: input.partial_substitutions,
    };
    Ok(Loaded { program, spec, request })
}

fn echo(input: &InputArgs, req: &Request, solver: &SolverConfig) -> ConfigEcho {
    let (invariant, rule, supports) = match &req.target {
        Target::Single { invariant, rule, supports } => (Some(invariant.clone()), *rule, supports.clone()),
        Target::Graph(_) => (None, Rule::GInv, Vec::new()),
    };
    ConfigEcho {
        program: input.program.display().to_string(),
        spec: input.spec.display().to_string(),
        graph: input.graph.as_ref().map(|g| g.display().to_string()),
        invariant,
        rule,
        supports,
        tactic: req.tactic.mode.label().to_string(),
        simplify: req.tactic.simplify,
        solver: solver.command.join(" "),
        timeout_s: solver.timeout.as_secs(),
        quantified_min: solver.quantified_min,
        partial_substitutions: req.partial_substitutions,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn solver_config(cmd: Option<&str>, timeout: u64, quantified_min: bool) -> SolverConfig {
    let env = std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty());
    let cmd = cmd.map(String::from).or(env).unwrap_or_else(|| DEFAULT_SOLVER.to_string());
    SolverConfig { timeout: Duration::from_secs(timeout), quantified_min, ..SolverConfig::from_command(&cmd) }
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let l = load(&args.input)?;
    let solver = solver_config(args.solver_cmd.as_deref(), args.timeout, args.input.quantified_min);
    let jobs = engine::generate(&l.program, &l.spec, &l.request)?;
    if let Some(dir) = &args.dump_vcs {
        engine::write_vcs(dir, &jobs, solver.quantified_min)?;
    }
    let report = engine::verify(&jobs, &solver, args.jobs, echo(&args.input, &l.request, &solver))?;
    if let Some(path) = &args.report {
        write_file(path, &report.to_json()?)?;
    }
    let _ = out.write_all(report.summary().as_bytes());
    Ok(report.exit_code())
}

pub fn cmd_vcs(args: &VcsArgs, out: &mut dyn Write) -> Result<i32> {
    let l = load(&args.input)?;
    let jobs = engine::generate(&l.program, &l.spec, &l.request)?;
    let path = engine::write_vcs(&args.out, &jobs, args.input.quantified_min)?;
    let _ = writeln!(out, "wrote {} VCs and {}", jobs.len(), path.display());
    Ok(EXIT_OK)
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32> {
    let program = load_program(&args.program)?;
    let spec = args.spec.as_ref().map(|s| load_spec(s, &program)).transpose()?;
    let cfg = OracleConfig { threads: args.threads, int_bound: args.bound, max_states: args.max_states };
    let ex = match oracle::explore(&program, &cfg) {
        Ok(ex) => ex,
        Err(e @ Error::StateExplosion(_)) => {
            let _ = writeln!(out, "inconclusive: {e}");
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(e),
    };
    let _ = writeln!(
        out,
        "{} reachable states ({} initial){}",
        ex.states.len(),
        ex.initial,
        if ex.bounded { ", bounded" } else { "" }
    );
    if let Some(path) = &args.dump_states {
        let text: String = ex.states.iter().map(|s| ex.state_json(s).to_string() + "\n").collect();
        write_file(path, &text)?;
    }

    let mut code = EXIT_OK;
    let mut report = serde_json::Map::new();
    report.insert("states".into(), ex.states.len().into());
    report.insert("bounded".into(), ex.bounded.into());

    let names: Vec<String> = match (&spec, args.invariants.is_empty()) {
        (Some(s), true) => s.invariants.iter().map(|i| i.name.clone()).collect(),
        _ => args.invariants.clone(),
    };
    let mut checks = Vec::new();
    for name in &names {
        let spec = spec.as_ref().ok_or_else(|| Error::Config("--invariant needs --spec".into()))?;
        let c = oracle::check_invariant(&ex, spec.get(name)?);
        match &c.witness {
            None => {
                let _ = writeln!(out, "{name}: holds");
            }
            Some(w) => {
                code = EXIT_FAILED;
                let _ = writeln!(out, "{name}: violated under {} after [{}]", w.assignment, w.trace.join(", "));
                let _ = writeln!(out, "  state {}", w.state);
            }
        }
        checks.push(c);
    }
    report.insert("invariants".into(), serde_json::to_value(&checks)?);

    let mut classes = Vec::new();
    for path in &args.classify {
        let json: serde_json::Value = serde_json::from_str(&read_source(path)?)?;
        let cm = oracle::model_from_json(&program, &json)?;
        let c = oracle::classify_counter_model(&program, &cm, &ex)?;
        let _ = writeln!(
            out,
            "{}: {:?}{}",
            path.display(),
            c.verdict,
            if c.bound_too_small { " (bound too small)" } else { "" }
        );
        if c.bound_too_small && code == EXIT_OK {
            code = EXIT_INCONCLUSIVE;
        }
        classes.push(serde_json::json!({ "model": path.display().to_string(), "result": c }));
    }
    report.insert("classifications".into(), classes.into());

    if args.symmetry_samples > 0 {
        let s = oracle::check_symmetry(&program, spec.as_ref(), &ex, args.symmetry_samples, args.seed);
        let _ = writeln!(out, "symmetry: {} ({} checks)", if s.ok { "ok" } else { "violated" }, s.checked);
        if let Some(c) = &s.counterexample {
            let _ = writeln!(out, "  {c}");
            code = EXIT_FAILED;
        }
        report.insert("symmetry".into(), serde_json::to_value(&s)?);
    }
    if code == EXIT_OK && ex.bounded {
        let _ = writeln!(out, "note: exploration was cut by the integer bound; results are bounded evidence");
    }
    if let Some(path) = &args.report {
        write_file(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(code)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("PINV_LOG").try_init();
    let r = match &cli.command {
        Command::Verify(a) => cmd_verify(a, out),
        Command::Vcs(a) => cmd_vcs(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
