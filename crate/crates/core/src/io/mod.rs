//! Text formats for topologies, demands and scenario reports, plus topology
//! preprocessing and IGP weight heuristics.
//!
//! Topology files:
//!
//! ```text
//! NODES <n>
//! label x y
//! <label> <x> <y>            (n lines)
//! EDGES <m>
//! label src dest weight bw delay
//! <label> <src> <dst> <weight> <bw> <delay>   (m lines)
//! ```
//!
//! Demand files:
//!
//! ```text
//! DEMANDS <k>
//! label src dest bw
//! <label> <src> <dst> <bw>   (k lines)
//! ```
//!
//! Tokens are whitespace separated, blank lines are ignored and a line whose
//! first non-blank character is `#` is a comment. In raw topologies a
//! capacity of `-` marks a link whose capacity is unknown.

mod preprocess;
mod report;
mod weights;

pub use preprocess::{preprocess_topology, Preprocessed, RawEdge, RawTopology, DEFAULT_CAPACITY};
pub use report::{parse_report, write_report, ReportWriter, REPORT_HEADER};
pub use weights::{assign_weights, WeightHeuristic};

use std::fmt::Write as _;

use crate::model::{Demand, Edge, Node, Topology, TrafficMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("malformed header, expected `{expected}`")]
    MalformedHeader { expected: String },
    #[error("count mismatch in {section}: header announces {expected} lines")]
    CountMismatch { section: &'static str, expected: usize },
    #[error("field `{field}` is not numeric: `{value}`")]
    NotNumeric { field: &'static str, value: String },
    #[error("node index {index} does not exist ({nodes} nodes)")]
    DanglingNode { index: usize, nodes: usize },
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: &'static str, reason: String },
    #[error("edge has no capacity")]
    MissingCapacity,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Non-blank, non-comment lines with 1-based line numbers.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    /// Line number just past the last line read, used for end-of-input errors.
    fn eof_line(&self) -> usize {
        self.last + 1
    }
}

impl<'a> Iterator for Lines<'a> {
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some((i + 1, trimmed.split_whitespace().collect()));
        }
        None
    }
}

pub(crate) fn number<T: std::str::FromStr>(
    line: usize,
    field: &'static str,
    value: &str,
) -> Result<T, ParseError> {
    value
        .parse()
        .map_err(|_| err(line, ParseErrorKind::NotNumeric { field, value: value.to_string() }))
}

fn section_count(
    lines: &mut Lines<'_>,
    keyword: &'static str,
) -> Result<(usize, usize), ParseError> {
    let expected = format!("{keyword} <count>");
    let Some((line, tokens)) = lines.next() else {
        return Err(err(lines.eof_line(), ParseErrorKind::MalformedHeader { expected }));
    };
    if tokens.len() != 2 || tokens[0] != keyword {
        return Err(err(line, ParseErrorKind::MalformedHeader { expected }));
    }
    Ok((line, number(line, "count", tokens[1])?))
}

fn column_header(lines: &mut Lines<'_>, columns: &[&str]) -> Result<(), ParseError> {
    let expected = columns.join(" ");
    match lines.next() {
        Some((_, tokens)) if tokens == columns => Ok(()),
        Some((line, _)) => Err(err(line, ParseErrorKind::MalformedHeader { expected })),
        None => Err(err(lines.eof_line(), ParseErrorKind::MalformedHeader { expected })),
    }
}

/// Reads `count` data lines of `section`, each with exactly `fields` tokens.
/// A keyword line found early is reported as a count mismatch.
fn data_lines<'a>(
    lines: &mut Lines<'a>,
    section: &'static str,
    count: usize,
    fields: usize,
    next_keyword: Option<&str>,
) -> Result<Vec<(usize, Vec<&'a str>)>, ParseError> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let Some((line, tokens)) = lines.next() else {
            return Err(err(lines.eof_line(), ParseErrorKind::CountMismatch { section, expected: count }));
        };
        if next_keyword.is_some_and(|k| tokens[0] == k) {
            return Err(err(line, ParseErrorKind::CountMismatch { section, expected: count }));
        }
        if tokens.len() != fields {
            return Err(err(line, ParseErrorKind::FieldCount { expected: fields, found: tokens.len() }));
        }
        out.push((line, tokens));
    }
    Ok(out)
}

const NODE_COLUMNS: [&str; 3] = ["label", "x", "y"];
const EDGE_COLUMNS: [&str; 6] = ["label", "src", "dest", "weight", "bw", "delay"];
const DEMAND_COLUMNS: [&str; 4] = ["label", "src", "dest", "bw"];

/// Parses a topology file whose capacities may be unknown (`-`).
pub fn parse_raw_topology(text: &str) -> Result<RawTopology, ParseError> {
    let mut lines = Lines::new(text);

    let (_, node_count) = section_count(&mut lines, "NODES")?;
    column_header(&mut lines, &NODE_COLUMNS)?;
    let mut nodes = Vec::with_capacity(node_count);
    for (line, t) in data_lines(&mut lines, "NODES", node_count, 3, Some("EDGES"))? {
        nodes.push(Node {
            label: t[0].to_string(),
            x: number(line, "x", t[1])?,
            y: number(line, "y", t[2])?,
        });
    }

    let (_, edge_count) = section_count(&mut lines, "EDGES")?;
    column_header(&mut lines, &EDGE_COLUMNS)?;
    let mut edges = Vec::with_capacity(edge_count);
    for (line, t) in data_lines(&mut lines, "EDGES", edge_count, 6, None)? {
        let src: usize = number(line, "src", t[1])?;
        let dst: usize = number(line, "dest", t[2])?;
        for index in [src, dst] {
            if index >= node_count {
                return Err(err(line, ParseErrorKind::DanglingNode { index, nodes: node_count }));
            }
        }
        if src == dst {
            return Err(err(line, ParseErrorKind::InvalidValue {
                field: "dest",
                reason: "self loop".into(),
            }));
        }
        let weight: u32 = number(line, "weight", t[3])?;
        if weight < 1 {
            return Err(err(line, ParseErrorKind::InvalidValue {
                field: "weight",
                reason: "must be at least 1".into(),
            }));
        }
        let capacity = if t[4] == "-" {
            None
        } else {
            let c: f64 = number(line, "bw", t[4])?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(err(line, ParseErrorKind::InvalidValue {
                    field: "bw",
                    reason: "must be positive".into(),
                }));
            }
            Some(c)
        };
        let delay: f64 = number(line, "delay", t[5])?;
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(err(line, ParseErrorKind::InvalidValue {
                field: "delay",
                reason: "must be non-negative".into(),
            }));
        }
        edges.push(RawEdge { label: t[0].to_string(), src, dst, weight, capacity, delay });
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, ParseErrorKind::CountMismatch { section: "EDGES", expected: edge_count }));
    }
    Ok(RawTopology { nodes, edges })
}

/// Parses a topology file in which every edge has a capacity.
pub fn parse_topology(text: &str) -> Result<Topology, ParseError> {
    let raw = parse_raw_topology(text)?;
    raw.into_complete().map_err(|edge| {
        let line = Lines::new(text)
            .skip_while(|(_, t)| t[0] != "EDGES")
            .nth(edge + 2)
            .map_or(0, |(l, _)| l);
        err(line, ParseErrorKind::MissingCapacity)
    })
}

/// Parses a demand file. Rows sharing the same (src, dst) pair are summed
/// into the first of them.
pub fn parse_demands(text: &str) -> Result<TrafficMatrix, ParseError> {
    let mut lines = Lines::new(text);
    let (_, count) = section_count(&mut lines, "DEMANDS")?;
    column_header(&mut lines, &DEMAND_COLUMNS)?;
    let mut demands: Vec<Demand> = Vec::with_capacity(count);
    for (line, t) in data_lines(&mut lines, "DEMANDS", count, 4, None)? {
        let src: usize = number(line, "src", t[1])?;
        let dst: usize = number(line, "dest", t[2])?;
        if src == dst {
            return Err(err(line, ParseErrorKind::InvalidValue {
                field: "dest",
                reason: "source equals destination".into(),
            }));
        }
        let volume: f64 = number(line, "bw", t[3])?;
        if !(volume >= 0.0 && volume.is_finite()) {
            return Err(err(line, ParseErrorKind::InvalidValue {
                field: "bw",
                reason: "must be non-negative".into(),
            }));
        }
        match demands.iter_mut().find(|d| d.src == src && d.dst == dst) {
            Some(existing) => existing.volume += volume,
            None => demands.push(Demand { label: t[0].to_string(), src, dst, volume }),
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, ParseErrorKind::CountMismatch { section: "DEMANDS", expected: count }));
    }
    Ok(TrafficMatrix { demands })
}

pub fn write_topology(topology: &Topology) -> String {
    let mut out = String::new();
    writeln!(out, "NODES {}", topology.nodes.len()).unwrap();
    writeln!(out, "{}", NODE_COLUMNS.join(" ")).unwrap();
    for n in &topology.nodes {
        writeln!(out, "{} {} {}", n.label, n.x, n.y).unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "EDGES {}", topology.edges.len()).unwrap();
    writeln!(out, "{}", EDGE_COLUMNS.join(" ")).unwrap();
    for Edge { label, src, dst, weight, capacity, delay } in &topology.edges {
        writeln!(out, "{label} {src} {dst} {weight} {capacity} {delay}").unwrap();
    }
    out
}

pub fn write_demands(traffic: &TrafficMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "DEMANDS {}", traffic.demands.len()).unwrap();
    writeln!(out, "{}", DEMAND_COLUMNS.join(" ")).unwrap();
    for d in &traffic.demands {
        writeln!(out, "{} {} {} {}", d.label, d.src, d.dst, d.volume).unwrap();
    }
    out
}
