mod common;

use tebench::io::ReportWriter;
use tebench::model::{Setting, Topology};
use tebench::scenarios::{run_robustness, run_scenario, ScenarioKind, ScenarioSpec};
use tebench::solvers::{builtin, Budget};

fn max_util(t: &Topology, loads: &[f64]) -> f64 {
    loads.iter().zip(&t.edges).map(|(l, e)| l / e.capacity).fold(0.0, f64::max)
}

#[test]
fn failures_match_rebuilt_topologies() {
    for (name, t, tms) in common::corpus() {
        let s = Setting::new(name.clone(), t.clone(), tms[0].clone());
        let spec = ScenarioSpec::new(ScenarioKind::Robustness, "noop", Budget::iterations(1, 0));
        let report = run_robustness(&spec, builtin("noop").unwrap().as_ref(), &s);
        let failures = report.records[0].failures.as_ref().unwrap();
        assert_eq!(failures.len(), t.physical_links().len() - common::disconnecting_links(&t), "{name}");
        for f in failures {
            let labels: Vec<&str> = f.link.split('/').collect();
            let mut rebuilt = t.clone();
            rebuilt.edges.retain(|e| !labels.contains(&e.label.as_str()));
            let expected = max_util(&rebuilt, &common::ecmp_loads(&rebuilt, &s.traffic));
            assert!((f.post_failure_utilization - expected).abs() <= 1e-9 * expected.max(1.0), "{name} {}", f.link);
            assert_eq!(f.congested, expected > 1.0);
        }
    }
}

#[test]
fn record_order_follows_input_order() {
    let corpus = common::corpus();
    let (_, t, tms) = &corpus[0];
    let settings: Vec<Setting> =
        tms.iter().enumerate().map(|(i, tm)| Setting::new(format!("s{i}"), t.clone(), tm.clone())).collect();
    let solver = builtin("sr2seg-heur").unwrap();
    let mut spec = ScenarioSpec::new(ScenarioKind::MaxCongestion, "sr2seg-heur", Budget::iterations(50, 3));
    let serial = run_scenario(&spec, solver.as_ref(), &settings, &mut ReportWriter::new(Vec::new())).unwrap();
    spec.jobs = 3;
    let mut buf = ReportWriter::new(Vec::new());
    let parallel = run_scenario(&spec, solver.as_ref(), &settings, &mut buf).unwrap();
    let names: Vec<&str> = parallel.records.iter().map(|r| r.setting.as_str()).collect();
    assert_eq!(names, ["s0", "s1", "s2", "s3", "s4"]);
    for (a, b) in serial.records.iter().zip(&parallel.records) {
        assert_eq!(a.post_max_utilization, b.post_max_utilization);
    }
    assert_eq!(serial.summaries, parallel.summaries);
    let text = String::from_utf8(buf.into_inner()).unwrap();
    assert!(text.contains("# summary, post_max_util, min="));
}
