//! Running an external SMT solver on a script.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;

use wait_timeout::ChildExt;

use super::SolverConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawOutcome {
    /// Full solver output, model included.
    Sat(String),
    Unsat,
    Unknown(String),
    Timeout,
}

/// Feeds `script` to the solver on stdin and classifies its answer.
/// A solver that dies without answering yields `Unknown`.
pub fn run_solver(script: &str, cfg: &SolverConfig) -> Result<RawOutcome> {
    let (prog, args) = cfg.command.split_first().ok_or_else(|| Error::Config("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                Error::SolverNotFound(cfg.command.join(" "))
            }
            _ => Error::Protocol(format!("cannot start `{prog}`: {e}")),
        })?;

    let mut stdin = child.stdin.take().unwrap();
    let input = script.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().unwrap();
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().unwrap();
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let status = child.wait_timeout(cfg.timeout).map_err(|e| Error::Protocol(e.to_string()))?;
    let status = match status {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            // Grandchildren may still hold the pipes; leave the readers behind.
            return Ok(RawOutcome::Timeout);
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();

    let first = out.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    match first {
        "sat" => Ok(RawOutcome::Sat(out)),
        "unsat" => Ok(RawOutcome::Unsat),
        "unknown" => Ok(RawOutcome::Unknown("solver answered unknown".into())),
        "timeout" => Ok(RawOutcome::Timeout),
        "" => Ok(RawOutcome::Unknown(format!("solver exited ({status}) without an answer: {}", err.trim()))),
        other if other.starts_with("(error") => Err(Error::Protocol(other.to_string())),
        other => Err(Error::Protocol(format!("unexpected solver output `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_solver() {
        let cfg = SolverConfig::from_command("/nonexistent/solver -in");
        assert!(matches!(run_solver("(check-sat)", &cfg), Err(Error::SolverNotFound(_))));
    }

    #[test]
    fn scripted_answers() {
        let sh = |body: &str| SolverConfig {
            command: vec!["sh".into(), "-c".into(), body.into()],
            ..SolverConfig::from_command("sh")
        };
        let cfg = sh("cat >/dev/null; echo unsat");
        assert_eq!(run_solver("(check-sat)", &cfg).unwrap(), RawOutcome::Unsat);
        let cfg = sh("cat >/dev/null; exit 3");
        assert!(matches!(run_solver("(check-sat)", &cfg).unwrap(), RawOutcome::Unknown(_)));
    }

    #[test]
    fn timeout_kills_the_solver() {
        let cfg = SolverConfig {
            command: vec!["sh".into(), "-c".into(), "sleep 5".into()],
            timeout: std::time::Duration::from_millis(100),
            quantified_min: false,
        };
        assert_eq!(run_solver("", &cfg).unwrap(), RawOutcome::Timeout);
    }
}
