//! Scenario report format.
//!
//! One header line, then one line per record with fields separated by `, `.
//! Absent optional fields are written as `-`. Per-failure details follow
//! their record as `# failure, ...` lines and aggregate statistics are
//! written last as `# summary, <metric>, key=value, ...` lines.

use std::fmt::Write as _;
use std::io;

use super::{err, number, ParseError, ParseErrorKind};
use crate::model::{FailureRecord, OverheadCounters, RunStatus, ScenarioRecord, ScenarioReport, SummaryLine};

pub const REPORT_HEADER: &str = "scenario, solver, setting, pre_max_util, post_max_util, lower_bound, \
solve_time_ms, status, changed_weights, rerouted_sr_demands, rerouted_sr_fraction, \
modified_explicit_paths, failures_evaluated, failures_congested";

const SEP: &str = ", ";
const FAILURE_PREFIX: &str = "# failure";
const SUMMARY_PREFIX: &str = "# summary";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn record_lines(r: &ScenarioRecord) -> String {
    let mut out = String::new();
    let o = r.overhead.as_ref();
    let failures = r.failures.as_ref();
    let fields = [
        r.scenario.clone(),
        r.solver.clone(),
        r.setting.clone(),
        r.pre_max_utilization.to_string(),
        r.post_max_utilization.to_string(),
        r.lower_bound.to_string(),
        r.solve_time_ms.to_string(),
        r.status.as_str().to_string(),
        opt(o.map(|o| o.changed_weights)),
        opt(o.map(|o| o.rerouted_sr_demands)),
        opt(o.map(|o| o.rerouted_sr_fraction)),
        opt(o.map(|o| o.modified_explicit_paths)),
        opt(failures.map(|f| f.len())),
        opt(failures.map(|f| f.iter().filter(|f| f.congested).count())),
    ];
    writeln!(out, "{}", fields.join(SEP)).unwrap();
    for f in failures.into_iter().flatten() {
        writeln!(
            out,
            "{FAILURE_PREFIX}{SEP}{}{SEP}{}{SEP}{}{SEP}{}{SEP}{}",
            r.setting, f.link, f.post_failure_utilization, f.post_failure_bound, f.congested
        )
        .unwrap();
    }
    out
}

fn summary_line(s: &SummaryLine) -> String {
    let mut out = format!("{SUMMARY_PREFIX}{SEP}{}", s.metric);
    for (k, v) in &s.values {
        write!(out, "{SEP}{k}={v}").unwrap();
    }
    out.push('\n');
    out
}

/// Streams records to a writer, flushing after each one.
pub struct ReportWriter<W: io::Write> {
    out: W,
    header_written: bool,
}

impl<W: io::Write> ReportWriter<W> {
    pub fn new(out: W) -> Self {
        ReportWriter { out, header_written: false }
    }

    fn header(&mut self) -> io::Result<()> {
        if !self.header_written {
            writeln!(self.out, "{REPORT_HEADER}")?;
            self.header_written = true;
        }
        Ok(())
    }

    pub fn write_record(&mut self, record: &ScenarioRecord) -> io::Result<()> {
        self.header()?;
        self.out.write_all(record_lines(record).as_bytes())?;
        self.out.flush()
    }

    pub fn write_summary(&mut self, summary: &SummaryLine) -> io::Result<()> {
        self.header()?;
        self.out.write_all(summary_line(summary).as_bytes())?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_report(report: &ScenarioReport) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in &report.records {
        out.push_str(&record_lines(r));
    }
    for s in &report.summaries {
        out.push_str(&summary_line(s));
    }
    out
}

fn invalid(line: usize, field: &'static str, reason: &str) -> ParseError {
    err(line, ParseErrorKind::InvalidValue { field, reason: reason.to_string() })
}

fn opt_number<T: std::str::FromStr>(line: usize, field: &'static str, v: &str) -> Result<Option<T>, ParseError> {
    if v == "-" {
        Ok(None)
    } else {
        number(line, field, v).map(Some)
    }
}

fn parse_record(line: usize, f: &[&str]) -> Result<(ScenarioRecord, Option<usize>), ParseError> {
    if f.len() != 14 {
        return Err(err(line, ParseErrorKind::FieldCount { expected: 14, found: f.len() }));
    }
    let status = match f[7] {
        "ok" => RunStatus::Ok,
        "truncated" => RunStatus::Truncated,
        "failed" => RunStatus::Failed,
        _ => return Err(invalid(line, "status", "unknown status")),
    };
    let overhead = match (
        opt_number::<usize>(line, "changed_weights", f[8])?,
        opt_number::<usize>(line, "rerouted_sr_demands", f[9])?,
        opt_number::<f64>(line, "rerouted_sr_fraction", f[10])?,
        opt_number::<usize>(line, "modified_explicit_paths", f[11])?,
    ) {
        (Some(a), Some(b), Some(c), Some(d)) => Some(OverheadCounters {
            changed_weights: a,
            rerouted_sr_demands: b,
            rerouted_sr_fraction: c,
            modified_explicit_paths: d,
        }),
        (None, None, None, None) => None,
        _ => return Err(invalid(line, "changed_weights", "overhead columns partially filled")),
    };
    let evaluated = opt_number::<usize>(line, "failures_evaluated", f[12])?;
    let record = ScenarioRecord {
        scenario: f[0].to_string(),
        solver: f[1].to_string(),
        setting: f[2].to_string(),
        pre_max_utilization: number(line, "pre_max_util", f[3])?,
        post_max_utilization: number(line, "post_max_util", f[4])?,
        lower_bound: number(line, "lower_bound", f[5])?,
        solve_time_ms: number(line, "solve_time_ms", f[6])?,
        status,
        overhead,
        failures: evaluated.map(Vec::with_capacity),
    };
    Ok((record, evaluated))
}

/// Parses the output of [`write_report`].
pub fn parse_report(text: &str) -> Result<ScenarioReport, ParseError> {
    let mut report = ScenarioReport::default();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == REPORT_HEADER => {}
        Some((i, _)) => {
            return Err(err(i + 1, ParseErrorKind::MalformedHeader { expected: REPORT_HEADER.into() }))
        }
        None => return Ok(report),
    }
    let mut expected_failures: Vec<Option<usize>> = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let fields: Vec<&str> = raw.trim().split(SEP).collect();
        match fields[0] {
            FAILURE_PREFIX => {
                if fields.len() != 6 {
                    return Err(err(line, ParseErrorKind::FieldCount { expected: 6, found: fields.len() }));
                }
                let record = report
                    .records
                    .last_mut()
                    .filter(|r| r.setting == fields[1])
                    .ok_or_else(|| invalid(line, "setting", "failure line without matching record"))?;
                let congested = match fields[5] {
                    "true" => true,
                    "false" => false,
                    _ => return Err(invalid(line, "congested", "expected true or false")),
                };
                record
                    .failures
                    .as_mut()
                    .ok_or_else(|| invalid(line, "failures_evaluated", "record has no failure column"))?
                    .push(FailureRecord {
                        link: fields[2].to_string(),
                        post_failure_utilization: number(line, "post_failure_util", fields[3])?,
                        post_failure_bound: number(line, "post_failure_bound", fields[4])?,
                        congested,
                    });
            }
            SUMMARY_PREFIX => {
                if fields.len() < 2 {
                    return Err(err(line, ParseErrorKind::FieldCount { expected: 2, found: fields.len() }));
                }
                let mut values = Vec::new();
                for kv in &fields[2..] {
                    let (k, v) = kv.split_once('=').ok_or_else(|| invalid(line, "summary", "expected key=value"))?;
                    values.push((k.to_string(), number(line, "summary", v)?));
                }
                report.summaries.push(SummaryLine { metric: fields[1].to_string(), values });
            }
            _ => {
                let (record, evaluated) = parse_record(line, &fields)?;
                report.records.push(record);
                expected_failures.push(evaluated);
            }
        }
    }
    for (r, expected) in report.records.iter().zip(expected_failures) {
        if r.failures.as_ref().map(|f| f.len()) != expected {
            return Err(invalid(0, "failures_evaluated", "failure line count differs from record"));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(setting: &str) -> ScenarioRecord {
        ScenarioRecord {
            scenario: "Robustness".into(),
            solver: "srlns".into(),
            setting: setting.into(),
            pre_max_utilization: 1.8,
            post_max_utilization: 0.9,
            lower_bound: 0.9000000000000001,
            solve_time_ms: 12,
            status: RunStatus::Truncated,
            overhead: Some(OverheadCounters {
                changed_weights: 0,
                rerouted_sr_demands: 1,
                rerouted_sr_fraction: 0.5,
                modified_explicit_paths: 0,
            }),
            failures: Some(vec![FailureRecord {
                link: "e0/e1".into(),
                post_failure_utilization: 1.8,
                post_failure_bound: 0.9,
                congested: true,
            }]),
        }
    }

    #[test]
    fn one_line_per_record() {
        let mut plain = record("tri");
        plain.failures = None;
        plain.overhead = None;
        let text = write_report(&ScenarioReport { records: vec![plain.clone()], summaries: vec![] });
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec![REPORT_HEADER, "Robustness, srlns, tri, 1.8, 0.9, 0.9000000000000001, 12, truncated, -, -, -, -, -, -"]);
    }

    #[test]
    fn round_trip_with_failures_and_summary() {
        let report = ScenarioReport {
            records: vec![record("a"), record("b")],
            summaries: vec![SummaryLine {
                metric: "post_max_util".into(),
                values: vec![("min".into(), 0.9), ("median".into(), 1.05)],
            }],
        };
        let text = write_report(&report);
        assert!(text.contains("# failure, a, e0/e1, 1.8, 0.9, true\n"));
        assert!(text.ends_with("# summary, post_max_util, min=0.9, median=1.05\n"));
        assert_eq!(parse_report(&text).unwrap(), report);
    }

    #[test]
    fn writer_streams_same_bytes() {
        let report = ScenarioReport { records: vec![record("a")], summaries: vec![] };
        let mut w = ReportWriter::new(Vec::new());
        w.write_record(&report.records[0]).unwrap();
        assert_eq!(String::from_utf8(w.into_inner()).unwrap(), write_report(&report));
    }
}
