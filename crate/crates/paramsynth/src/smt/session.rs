//! Incremental solver session over a subprocess pipe.
//!
//! The base problem is asserted once below the first backtrack point, guarded
//! by two boolean selectors (`accepting`, `rejecting`); each region check is
//! a `push` / assert-selector-and-box / `check-sat` / optional `get-model` /
//! `pop` round trip. A wall-clock deadline guards every read; on timeout the
//! child is killed and the session reports itself dead.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::models::Instantiation;
use crate::ratfunc::{Rational, Var};
use crate::regions::Region;

use super::script::formula_sexp;
use super::{region_formula, Query, SmtError, SmtProblem};

/// Solver process configuration. The command is taken from the
/// `PARAMSYNTH_SMT_CMD` environment variable (whitespace-split) unless given
/// explicitly; the default expects a Z3-compatible `z3 -in` on PATH.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub command: Vec<String>,
    pub timeout_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: default_command(),
            timeout_ms: 10_000,
        }
    }
}

fn default_command() -> Vec<String> {
    match std::env::var(super::SMT_CMD_ENV) {
        Ok(cmd) if !cmd.trim().is_empty() => {
            cmd.split_whitespace().map(str::to_string).collect()
        }
        _ => vec!["z3".to_string(), "-in".to_string()],
    }
}

impl SolverConfig {
    pub fn from_env() -> Self {
        Self::default()
    }

    pub fn with_command(cmd: &str) -> Self {
        SolverConfig {
            command: cmd.split_whitespace().map(str::to_string).collect(),
            timeout_ms: 10_000,
        }
    }
}

/// Result of one region query.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Unsat,
    /// Satisfiable; the parameter assignment when every value parsed as a
    /// rational (irrational witnesses still refute, but are not reusable).
    Sat(Option<Instantiation>),
    UnknownTimeout,
}

pub struct SolverSession {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    timeout: Duration,
    depth: usize,
    dead: bool,
    params: Vec<Var>,
}

impl SolverSession {
    /// Spawns the solver and asserts the base problem with its selectors.
    pub fn start(config: &SolverConfig, problem: &SmtProblem) -> Result<SolverSession, SmtError> {
        let (head, rest) = config
            .command
            .split_first()
            .ok_or_else(|| SmtError::SolverSpawnFailure {
                cmd: String::new(),
                reason: "empty solver command".to_string(),
            })?;
        let mut child = Command::new(head)
            .args(rest)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::SolverSpawnFailure {
                cmd: config.command.join(" "),
                reason: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = channel();
        thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut session = SolverSession {
            child,
            stdin,
            lines: rx,
            timeout: Duration::from_millis(config.timeout_ms),
            depth: 0,
            dead: false,
            params: problem.params.clone(),
        };
        session.send("(set-option :print-success false)")?;
        session.send("(set-logic QF_NRA)")?;
        session.send(&format!("(set-option :timeout {})", config.timeout_ms))?;
        let mut decls: Vec<Var> = problem.params.clone();
        decls.extend_from_slice(&problem.aux_vars);
        decls.sort();
        decls.dedup();
        for v in decls {
            session.send(&format!("(declare-const {} Real)", v.name()))?;
        }
        session.send("(declare-const accepting Bool)")?;
        session.send("(declare-const rejecting Bool)")?;
        if problem.base != super::Formula::True {
            session.send(&format!("(assert {})", formula_sexp(&problem.base)))?;
        }
        session.send(&format!(
            "(assert (=> accepting {}))",
            formula_sexp(&problem.accept_assert)
        ))?;
        session.send(&format!(
            "(assert (=> rejecting {}))",
            formula_sexp(&problem.reject_assert)
        ))?;
        Ok(session)
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    fn send(&mut self, cmd: &str) -> Result<(), SmtError> {
        if self.dead {
            return Err(SmtError::SessionDead);
        }
        writeln!(self.stdin, "{}", cmd).and_then(|_| self.stdin.flush()).map_err(|e| {
            self.dead = true;
            SmtError::ProtocolParseError(format!("write failed: {}", e))
        })
    }

    fn read_line(&mut self) -> Result<Option<String>, SmtError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => Ok(Some(line)),
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Ok(None)
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                Err(SmtError::ProtocolParseError(
                    "solver closed its output".to_string(),
                ))
            }
        }
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.dead = true;
    }

    /// One incremental query: `push`, selector + box constraints,
    /// `check-sat`, `get-model` on sat, `pop`.
    pub fn check_region(
        &mut self,
        query: Query,
        region: &Region,
    ) -> Result<CheckOutcome, SmtError> {
        if self.dead {
            return Ok(CheckOutcome::UnknownTimeout);
        }
        self.send("(push 1)")?;
        self.depth += 1;
        let selector = match query {
            Query::Accepting => "accepting",
            Query::Rejecting => "rejecting",
        };
        self.send(&format!("(assert {})", selector))?;
        self.send(&format!(
            "(assert {})",
            formula_sexp(&region_formula(region))
        ))?;
        self.send("(check-sat)")?;
        let answer = loop {
            match self.read_line()? {
                None => return Ok(CheckOutcome::UnknownTimeout),
                Some(line) => {
                    let line = line.trim().to_string();
                    if line.is_empty() {
                        continue;
                    }
                    break line;
                }
            }
        };
        let outcome = match answer.as_str() {
            "unsat" => CheckOutcome::Unsat,
            "sat" => {
                let model = self.read_model()?;
                CheckOutcome::Sat(model)
            }
            "unknown" => CheckOutcome::UnknownTimeout,
            other => {
                self.kill();
                return Err(SmtError::ProtocolParseError(format!(
                    "unexpected check-sat answer `{}`",
                    other
                )));
            }
        };
        if !self.dead {
            self.send("(pop 1)")?;
            self.depth -= 1;
        }
        Ok(outcome)
    }

    /// Reads a `(get-model)` response and extracts rational parameter values.
    fn read_model(&mut self) -> Result<Option<Instantiation>, SmtError> {
        self.send("(get-model)")?;
        let mut text = String::new();
        let mut depth: i64 = 0;
        let mut started = false;
        loop {
            let line = match self.read_line()? {
                None => return Ok(None),
                Some(l) => l,
            };
            for c in line.chars() {
                if c == '(' {
                    depth += 1;
                    started = true;
                }
                if c == ')' {
                    depth -= 1;
                }
            }
            text.push_str(&line);
            text.push(' ');
            if started && depth <= 0 {
                break;
            }
        }
        Ok(parse_model_values(&text, &self.params))
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        if !self.dead {
            let _ = self.send("(exit)");
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Minimal s-expression reader for model responses.
#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize_sexp(src: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for c in src.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

fn parse_sexp(toks: &[String], pos: &mut usize) -> Option<Sexp> {
    match toks.get(*pos)?.as_str() {
        "(" => {
            *pos += 1;
            let mut items = Vec::new();
            while toks.get(*pos)? != ")" {
                items.push(parse_sexp(toks, pos)?);
            }
            *pos += 1;
            Some(Sexp::List(items))
        }
        ")" => None,
        atom => {
            *pos += 1;
            Some(Sexp::Atom(atom.to_string()))
        }
    }
}

/// Accepts integer, decimal, `(/ a b)`, and `(- x)` forms; anything else
/// (e.g. `root-obj` algebraic numbers) yields `None`.
fn sexp_to_rational(s: &Sexp) -> Option<Rational> {
    match s {
        Sexp::Atom(a) => {
            if let Some(stripped) = a.strip_suffix('?') {
                // z3 prints imprecise decimals as `0.5?`; reject them.
                let _ = stripped;
                return None;
            }
            if a.contains('.') {
                let (int_part, frac_part) = a.split_once('.')?;
                let digits = format!("{}{}", int_part, frac_part);
                let num: BigInt = digits.parse().ok()?;
                let den = BigInt::from(10u32).pow(frac_part.len() as u32);
                Some(Rational::new(num, den))
            } else {
                let num: BigInt = a.parse().ok()?;
                Some(Rational::from_integer(num))
            }
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), a] if op == "-" => Some(-sexp_to_rational(a)?),
            [Sexp::Atom(op), a, b] if op == "/" => {
                let num = sexp_to_rational(a)?;
                let den = sexp_to_rational(b)?;
                if den.is_zero() {
                    None
                } else {
                    Some(num / den)
                }
            }
            _ => None,
        },
    }
}

/// Extracts parameter assignments from a model response. Returns `None` when
/// any parameter value fails to parse as a rational.
fn parse_model_values(text: &str, params: &[Var]) -> Option<Instantiation> {
    let toks = tokenize_sexp(text);
    let mut pos = 0;
    let top = parse_sexp(&toks, &mut pos)?;
    let entries = match top {
        Sexp::List(items) => items,
        _ => return None,
    };
    let mut values: BTreeMap<Var, Rational> = BTreeMap::new();
    for entry in entries {
        if let Sexp::List(parts) = entry {
            // (define-fun NAME () Real VALUE)
            if parts.len() == 5 {
                if let (Sexp::Atom(kw), Sexp::Atom(name)) = (&parts[0], &parts[1]) {
                    if kw == "define-fun" {
                        if let Some(v) = sexp_to_rational(&parts[4]) {
                            for &p in params {
                                if p.name() == *name {
                                    values.insert(p, v.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if params.iter().all(|p| values.contains_key(p)) {
        Some(Instantiation::new(values))
    } else {
        None
    }
}

/// Checks a list of regions against one problem in a single session,
/// re-using the base assertions across queries.
pub fn session_check(
    session: &mut SolverSession,
    queries: &[(Query, Region)],
) -> Result<Vec<CheckOutcome>, SmtError> {
    let mut outcomes = Vec::with_capacity(queries.len());
    for (query, region) in queries {
        outcomes.push(session.check_region(*query, region)?);
    }
    Ok(outcomes)
}
