//! Writes gravity-model demand files scaled to a 90% optimal maximum
//! utilization for every topology of a directory.
//!
//! `cargo run --release --example synthesize_demands -- data 5`
//! creates `data/<topology>/<topology>_<seed>.demands` for seeds 1..=5.

use std::fs;
use std::path::Path;
use std::time::Instant;

use tebench::gravity::synthesize_scaled_tm;
use tebench::io::{parse_topology, write_demands};
use tebench::mcf::{lp_lower_bound, McfParams, DEFAULT_TARGET_UTILIZATION};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data".to_string());
    let count: u64 = args.next().map_or(Ok(5), |s| s.parse())?;
    let mut graphs: Vec<_> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "graph"))
        .collect();
    graphs.sort();
    let params = McfParams::default();
    for graph in graphs {
        let name = graph.file_stem().unwrap().to_string_lossy().into_owned();
        let topology = parse_topology(&fs::read_to_string(&graph)?)?;
        let out = Path::new(&dir).join(&name);
        fs::create_dir_all(&out)?;
        for seed in 1..=count {
            let started = Instant::now();
            let tm = synthesize_scaled_tm(&topology, seed, DEFAULT_TARGET_UTILIZATION, &params)?;
            let bound = lp_lower_bound(&topology, &tm, &params)?;
            fs::write(out.join(format!("{name}_{seed}.demands")), write_demands(&tm))?;
            println!(
                "{name} seed {seed}: {} demands, bound {:.4} (gap {:.4}, {} phases, {:?})",
                tm.len(),
                bound.lower_bound,
                bound.achieved_gap,
                bound.phases,
                started.elapsed()
            );
        }
    }
    Ok(())
}
