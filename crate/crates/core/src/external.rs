//! External solvers: any executable that reads a topology file and a demand
//! file and writes its routing decisions to an output file.
//!
//! Solvers are described in a specs file of `key = value` lines:
//!
//! ```text
//! // general information about the solver
//! name = randomTunnels
//! optimization objective = 'undefined'
//!
//! run command = python external_solvers/getRandomPaths.py
//! $TOPOFILE $DEMANDFILE $OUTFILE
//!
//! optimization effect = setExplicitPaths
//! field separator = '; '
//! key field = 0
//! value field = 2
//!
//! gettime command = cat $OUTFILE | grep 'execution time'
//! | awk -v FS=': ' '{print $2}'
//! ```
//!
//! Lines starting with `//` are comments. A line whose text before the first
//! `=` is not a plain key continues the previous value. Every `name` line
//! opens a new solver block. Values wrapped in single quotes are unquoted.

use std::fmt;
use std::fs;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::io::{write_demands, write_topology};
use crate::model::{RoutingConfiguration, RunStatus, Setting};
use crate::solvers::{Budget, Limit, Solver, SolverError, SolverOutput};

pub const DEFAULT_SPECS_PATH: &str = "external_solvers/solvers-specs.txt";
pub const SPECS_ENV: &str = "REPETITA_SOLVERS_SPECS";

pub const TOPOFILE: &str = "$TOPOFILE";
pub const DEMANDFILE: &str = "$DEMANDFILE";
pub const OUTFILE: &str = "$OUTFILE";

/// Grace period between the polite and the forced termination of a solver.
const KILL_GRACE: Duration = Duration::from_millis(200);
const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizationEffect {
    SetExplicitPaths,
    SetLinkWeights,
    SetSegments,
}

impl FromStr for OptimizationEffect {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "setExplicitPaths" => Ok(OptimizationEffect::SetExplicitPaths),
            "setLinkWeights" => Ok(OptimizationEffect::SetLinkWeights),
            "setSegments" => Ok(OptimizationEffect::SetSegments),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolverSpec {
    pub name: String,
    pub optimization_objective: String,
    pub run_command: String,
    pub effect: OptimizationEffect,
    pub field_separator: String,
    pub key_field: usize,
    pub value_field: usize,
    pub gettime_command: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("line {line}: value continuation before any key")]
    DanglingContinuation { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} repeated in the same block")]
    DuplicateKey { line: usize, key: String },
    #[error("solver block {block}: missing key {key:?}")]
    MissingKey { block: String, key: &'static str },
    #[error("solver {block}: unknown optimization effect {value:?}")]
    UnknownEffect { block: String, value: String },
    #[error("solver {block}: {key} is not a non-negative integer: {value:?}")]
    BadIndex { block: String, key: &'static str, value: String },
    #[error("solver {block}: key field and value field coincide")]
    SameFields { block: String },
    #[error("solver {block}: {key} must contain {placeholder}")]
    Placeholder { block: String, key: &'static str, placeholder: &'static str },
    #[error("solver {block}: empty field separator")]
    EmptySeparator { block: String },
}

const KEYS: [&str; 8] = [
    "name",
    "optimization objective",
    "run command",
    "optimization effect",
    "field separator",
    "key field",
    "value field",
    "gettime command",
];

fn unquote(value: &str) -> String {
    let v = value.trim();
    if v.len() >= 2 && v.starts_with('\'') && v.ends_with('\'') {
        v[1..v.len() - 1].to_string()
    } else {
        v.to_string()
    }
}

fn looks_like_key(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == ' ' || c == '_')
}

struct Block {
    /// Raw values by key, with the line each key appeared on.
    entries: Vec<(&'static str, String, usize)>,
}

impl Block {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    fn name(&self) -> String {
        self.get("name").map_or_else(|| format!("at line {}", self.entries[0].2), unquote)
    }

    fn into_spec(self) -> Result<ExternalSolverSpec, SpecError> {
        let block = self.name();
        let need = |key: &'static str| -> Result<String, SpecError> {
            self.get(key).map(unquote).ok_or(SpecError::MissingKey { block: block.clone(), key })
        };
        let index = |key: &'static str| -> Result<usize, SpecError> {
            let v = need(key)?;
            v.parse().map_err(|_| SpecError::BadIndex { block: block.clone(), key, value: v })
        };
        let name = need("name")?;
        let run_command = need("run command")?;
        let effect_text = need("optimization effect")?;
        let effect = effect_text
            .parse()
            .map_err(|_| SpecError::UnknownEffect { block: block.clone(), value: effect_text })?;
        let field_separator = need("field separator")?;
        if field_separator.is_empty() {
            return Err(SpecError::EmptySeparator { block });
        }
        let key_field = index("key field")?;
        let value_field = index("value field")?;
        if key_field == value_field {
            return Err(SpecError::SameFields { block });
        }
        for placeholder in [TOPOFILE, DEMANDFILE, OUTFILE] {
            if !run_command.contains(placeholder) {
                return Err(SpecError::Placeholder { block, key: "run command", placeholder });
            }
        }
        let gettime_command = self.get("gettime command").map(unquote);
        if gettime_command.as_ref().is_some_and(|g| !g.contains(OUTFILE)) {
            return Err(SpecError::Placeholder { block, key: "gettime command", placeholder: OUTFILE });
        }
        Ok(ExternalSolverSpec {
            name,
            optimization_objective: self.get("optimization objective").map(unquote).unwrap_or_default(),
            run_command,
            effect,
            field_separator,
            key_field,
            value_field,
            gettime_command,
        })
    }
}

/// Parses a specs file into one spec per solver block, in file order.
pub fn parse_solver_specs(text: &str) -> Result<Vec<ExternalSolverSpec>, SpecError> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        let key_value = trimmed.split_once('=').filter(|(k, _)| looks_like_key(k));
        match key_value {
            Some((k, v)) => {
                let k = k.trim().to_ascii_lowercase();
                let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
                    return Err(SpecError::UnknownKey { line, key: k });
                };
                if key == "name" || blocks.is_empty() {
                    blocks.push(Block { entries: Vec::new() });
                }
                let block = blocks.last_mut().unwrap();
                if block.get(key).is_some() {
                    return Err(SpecError::DuplicateKey { line, key: key.to_string() });
                }
                block.entries.push((key, v.trim().to_string(), line));
            }
            None => {
                let entry = blocks
                    .last_mut()
                    .and_then(|b| b.entries.last_mut())
                    .ok_or(SpecError::DanglingContinuation { line })?;
                entry.1.push(' ');
                entry.1.push_str(trimmed);
            }
        }
    }
    blocks.into_iter().map(Block::into_spec).collect()
}

/// Specs from `REPETITA_SOLVERS_SPECS`, or the default path. A missing file
/// yields no specs.
pub fn load_solver_specs() -> Result<Vec<ExternalSolverSpec>, ExternalError> {
    let path = std::env::var_os(SPECS_ENV).map_or_else(|| PathBuf::from(DEFAULT_SPECS_PATH), PathBuf::from);
    load_solver_specs_from(&path)
}

pub fn load_solver_specs_from(path: &Path) -> Result<Vec<ExternalSolverSpec>, ExternalError> {
    match fs::read_to_string(path) {
        Ok(text) => parse_solver_specs(&text).map_err(|e| ExternalError::Spec { path: path.to_path_buf(), source: e }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(ExternalError::Io(e)),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("{}: {source}", path.display())]
    Spec { path: PathBuf, source: SpecError },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited with {status}: {stderr}")]
    Exit { status: ExitDescription, stderr: String },
    #[error("solver produced no output file")]
    NoOutput,
    #[error("output line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("output line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitDescription {
    Code(i32),
    Signal(i32),
}

impl fmt::Display for ExitDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitDescription::Code(c) => write!(f, "exit code {c}"),
            ExitDescription::Signal(s) => write!(f, "signal {s}"),
        }
    }
}

/// What an external run changed, applied on top of the input routing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRun {
    pub routing: RoutingConfiguration,
    pub time_ms: u64,
    pub truncated: bool,
    /// Whether the time came from the solver's own gettime command.
    pub reported: bool,
}

fn node_list(text: &str, n: usize) -> Result<Vec<usize>, String> {
    let nodes: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad node index {:?}", t.trim())))
        .collect::<Result<_, _>>()?;
    if let Some(bad) = nodes.iter().find(|&&v| v >= n) {
        return Err(format!("node index {bad} out of range"));
    }
    if nodes.len() < 2 {
        return Err("path needs at least two nodes".to_string());
    }
    Ok(nodes)
}

/// Applies the solver output `text` to `base`. When `partial` is set, a
/// malformed unterminated last line is ignored.
pub fn parse_solver_output(
    spec: &ExternalSolverSpec,
    setting: &Setting,
    text: &str,
    partial: bool,
) -> Result<RoutingConfiguration, ExternalError> {
    let mut routing = setting.routing.clone();
    let topology = &setting.topology;
    let n = topology.node_count();
    let mut seen_paths = std::collections::BTreeSet::new();
    let lines: Vec<&str> = text.lines().collect();
    let unterminated = partial && !text.is_empty() && !text.ends_with('\n');
    for (i, raw) in lines.iter().enumerate() {
        let line = i + 1;
        let result = (|| -> Result<(), ExternalError> {
            let fields: Vec<&str> = raw.split(spec.field_separator.as_str()).collect();
            if raw.trim().is_empty() || fields.len() <= spec.key_field.max(spec.value_field) {
                // Not a data line, e.g. the execution time.
                return Ok(());
            }
            let key = fields[spec.key_field].trim();
            let value = fields[spec.value_field].trim();
            let bad = |reason: String| ExternalError::Line { line, reason };
            let unknown = || ExternalError::UnknownLabel { line, label: key.to_string() };
            match spec.effect {
                OptimizationEffect::SetLinkWeights => {
                    let e = topology.edge_by_label(key).ok_or_else(unknown)?;
                    let w: u32 = value.parse().map_err(|_| bad(format!("bad weight {value:?}")))?;
                    if w == 0 {
                        return Err(bad("weight must be positive".to_string()));
                    }
                    routing.weights[e] = w;
                }
                OptimizationEffect::SetSegments => {
                    let d = setting.traffic.demands.iter().position(|d| d.label == key).ok_or_else(unknown)?;
                    routing.sr_segments.insert(d, node_list(value, n).map_err(bad)?);
                }
                OptimizationEffect::SetExplicitPaths => {
                    let d = setting.traffic.demands.iter().position(|d| d.label == key).ok_or_else(unknown)?;
                    let nodes = node_list(value, n).map_err(bad)?;
                    let path = nodes
                        .windows(2)
                        .map(|w| topology.edge_between(w[0], w[1]).ok_or_else(|| bad(format!("no edge {} -> {}", w[0], w[1]))))
                        .collect::<Result<Vec<usize>, _>>()?;
                    // Repeated keys add paths; the first one replaces the input's.
                    let paths = routing.explicit_paths.entry(d).or_default();
                    if seen_paths.insert(d) {
                        paths.clear();
                    }
                    paths.push(path);
                }
            }
            Ok(())
        })();
        match result {
            Err(_) if unterminated && i + 1 == lines.len() => {}
            r => r?,
        }
    }
    Ok(routing)
}

fn terminate_group(pgid: i32) {
    // SAFETY: plain syscalls on a process group we created.
    unsafe {
        libc::killpg(pgid, libc::SIGTERM);
    }
}

fn kill_group(pgid: i32) {
    // SAFETY: as above.
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
}

fn shell(command: &str) -> Command {
    let mut c = Command::new("sh");
    c.arg("-c").arg(command);
    c
}

/// Runs `spec` on `setting` in a fresh temporary directory, stopping the
/// whole process group when a wall-clock budget runs out.
pub fn run_external_solver(
    spec: &ExternalSolverSpec,
    setting: &Setting,
    budget: &Budget,
) -> Result<ExternalRun, ExternalError> {
    let dir = tempfile::Builder::new().prefix("tebench-ext-").tempdir()?;
    let topo = dir.path().join("topology.graph");
    let demands = dir.path().join("traffic.demands");
    let out = dir.path().join("solver.out");
    let err = dir.path().join("solver.err");
    fs::write(&topo, write_topology(&setting.topology))?;
    fs::write(&demands, write_demands(&setting.traffic))?;
    let outfile = out.display().to_string();
    let command = spec
        .run_command
        .replace(TOPOFILE, &topo.display().to_string())
        .replace(DEMANDFILE, &demands.display().to_string())
        .replace(OUTFILE, &outfile);

    let started = Instant::now();
    let mut child = shell(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(fs::File::create(&err)?)
        .process_group(0)
        .spawn()?;
    let pgid = child.id() as i32;
    let limit = match budget.limit {
        Limit::WallClock(d) => Some(d),
        Limit::Iterations(_) => None,
    };
    let mut truncated = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if limit.is_some_and(|l| started.elapsed() >= l) {
            truncated = true;
            terminate_group(pgid);
            let stop = Instant::now();
            let status = loop {
                if let Some(s) = child.try_wait()? {
                    break s;
                }
                if stop.elapsed() >= KILL_GRACE {
                    kill_group(pgid);
                    break child.wait()?;
                }
                std::thread::sleep(POLL);
            };
            break status;
        }
        std::thread::sleep(POLL);
    };
    // Stray descendants must not outlive the run.
    kill_group(pgid);
    let measured = started.elapsed().as_millis() as u64;
    if !truncated && !status.success() {
        let stderr = fs::read_to_string(&err).unwrap_or_default().trim().to_string();
        let status = match (status.code(), status.signal()) {
            (Some(c), _) => ExitDescription::Code(c),
            (None, Some(s)) => ExitDescription::Signal(s),
            (None, None) => ExitDescription::Code(-1),
        };
        return Err(ExternalError::Exit { status, stderr });
    }
    let text = match fs::read_to_string(&out) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ExternalError::NoOutput),
        Err(e) => return Err(e.into()),
    };
    let routing = parse_solver_output(spec, setting, &text, truncated)?;
    let reported = spec.gettime_command.as_ref().and_then(|g| solver_time_ms(&g.replace(OUTFILE, &outfile)));
    Ok(ExternalRun { routing, time_ms: reported.unwrap_or(measured), truncated, reported: reported.is_some() })
}

/// Output of the gettime command, in seconds, converted to milliseconds.
fn solver_time_ms(command: &str) -> Option<u64> {
    let output = shell(command).stdin(Stdio::null()).stderr(Stdio::null()).output().ok()?;
    if !output.status.success() {
        return None;
    }
    let seconds: f64 = String::from_utf8(output.stdout).ok()?.trim().parse().ok()?;
    (seconds.is_finite() && seconds >= 0.0).then(|| (seconds * 1000.0).round() as u64)
}

/// An external solver usable wherever a built-in one is.
pub struct ExternalSolver {
    pub spec: ExternalSolverSpec,
}

impl Solver for ExternalSolver {
    fn name(&self) -> &str {
        &self.spec.name
    }

    fn solve(&self, setting: &Setting, budget: &Budget) -> Result<SolverOutput, SolverError> {
        let run = run_external_solver(&self.spec, setting, budget).map_err(|e| SolverError::External(e.to_string()))?;
        Ok(SolverOutput {
            routing: run.routing,
            status: if run.truncated { RunStatus::Truncated } else { RunStatus::Ok },
            reported_time_ms: Some(run.time_ms),
        })
    }
}
