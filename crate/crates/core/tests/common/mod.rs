//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls the routing or search code under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tebench::model::{Demand, Edge, Node, Setting, Topology, TrafficMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strongly connected digraph: a Hamiltonian cycle over a shuffled
/// node order plus extra arcs with probability `density`. No parallel arcs.
pub fn random_topology(rng: &mut ChaCha8Rng, n: usize, density: f64, max_weight: u32) -> Topology {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut arcs = std::collections::BTreeSet::new();
    for i in 0..n {
        arcs.insert((order[i], order[(i + 1) % n]));
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(density) {
                arcs.insert((u, v));
            }
        }
    }
    let nodes = (0..n).map(|i| Node { label: format!("n{i}"), x: i as f64, y: 0.0 }).collect();
    let edges = arcs
        .into_iter()
        .enumerate()
        .map(|(i, (src, dst))| Edge {
            label: format!("e{i}"),
            src,
            dst,
            weight: rng.random_range(1..=max_weight),
            capacity: [500.0, 1000.0, 2500.0, 10_000.0][rng.random_range(0..4)],
            delay: 0.0,
        })
        .collect();
    Topology { nodes, edges }
}

/// Random demands between distinct nodes with integer volumes.
pub fn random_traffic(rng: &mut ChaCha8Rng, n: usize, count: usize, max_volume: u32) -> TrafficMatrix {
    let demands = (0..count)
        .map(|i| {
            let src = rng.random_range(0..n);
            let mut dst = rng.random_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            Demand { label: format!("d{i}"), src, dst, volume: rng.random_range(1..=max_volume) as f64 }
        })
        .collect();
    TrafficMatrix::new(demands)
}

/// All-pairs shortest distances by Floyd-Warshall.
pub fn floyd(t: &Topology) -> Vec<Vec<u64>> {
    let n = t.node_count();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in &t.edges {
        d[e.src][e.dst] = d[e.src][e.dst].min(e.weight as u64);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// ECMP fraction of `src -> dst` traffic on every edge, from exhaustive
/// enumeration of shortest edge sequences: each path carries the product of
/// `1 / (number of shortest next hops)` over the nodes it leaves.
pub fn ecmp_fractions(t: &Topology, dist: &[Vec<u64>], src: usize, dst: usize) -> Vec<f64> {
    let mut frac = vec![0.0; t.edge_count()];
    if src == dst {
        return frac;
    }
    let next_hops = |u: usize| -> usize {
        t.edges.iter().filter(|e| e.src == u && e.weight as u64 + dist[e.dst][dst] == dist[u][dst]).count()
    };
    let target = dist[src][dst];
    let mut path: Vec<usize> = Vec::new();
    fn walk(
        t: &Topology,
        u: usize,
        dst: usize,
        length: u64,
        target: u64,
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        next_hops: &dyn Fn(usize) -> usize,
        frac: &mut [f64],
    ) {
        if length > target {
            return;
        }
        if u == dst {
            if length == target {
                let mut p = 1.0;
                for &e in path.iter() {
                    p /= next_hops(t.edges[e].src) as f64;
                }
                for &e in path.iter() {
                    frac[e] += p;
                }
            }
            return;
        }
        for (id, e) in t.edges.iter().enumerate() {
            if e.src == u && !visited[e.dst] {
                visited[e.dst] = true;
                path.push(id);
                walk(t, e.dst, dst, length + e.weight as u64, target, visited, path, next_hops, frac);
                path.pop();
                visited[e.dst] = false;
            }
        }
    }
    let mut visited = vec![false; t.node_count()];
    visited[src] = true;
    walk(t, src, dst, 0, target, &mut visited, &mut path, &next_hops, &mut frac);
    frac
}

/// Edge loads of plain ECMP routing by the enumeration oracle.
pub fn ecmp_loads(t: &Topology, tm: &TrafficMatrix) -> Vec<f64> {
    let dist = floyd(t);
    let mut load = vec![0.0; t.edge_count()];
    for d in &tm.demands {
        for (e, f) in ecmp_fractions(t, &dist, d.src, d.dst).into_iter().enumerate() {
            load[e] += d.volume * f;
        }
    }
    load
}

/// Best maximum utilization over every assignment of at most one detour per
/// demand, by full enumeration. Loads come from the enumeration oracle.
pub fn naive_two_segment(setting: &Setting) -> f64 {
    let t = &setting.topology;
    let n = t.node_count();
    let dist = floyd(t);
    let mut pair = vec![vec![Vec::new(); n]; n];
    for (s, row) in pair.iter_mut().enumerate() {
        for (d, cell) in row.iter_mut().enumerate() {
            *cell = ecmp_fractions(t, &dist, s, d);
        }
    }
    let demands = &setting.traffic.demands;
    let options: Vec<Vec<Option<usize>>> = demands
        .iter()
        .map(|d| std::iter::once(None).chain((0..n).filter(|&k| k != d.src && k != d.dst).map(Some)).collect())
        .collect();
    let mut pick = vec![0usize; demands.len()];
    let mut best = f64::INFINITY;
    loop {
        let mut load = vec![0.0; t.edge_count()];
        for (i, d) in demands.iter().enumerate() {
            let legs: Vec<(usize, usize)> = match options[i][pick[i]] {
                None => vec![(d.src, d.dst)],
                Some(k) => vec![(d.src, k), (k, d.dst)],
            };
            for (a, b) in legs {
                for (e, f) in pair[a][b].iter().enumerate() {
                    load[e] += d.volume * f;
                }
            }
        }
        let u = load.iter().zip(&t.edges).map(|(l, e)| l / e.capacity).fold(0.0, f64::max);
        best = best.min(u);
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return best;
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Physical links (pairs of opposite arcs, or single arcs) whose removal
/// disconnects the digraph, by brute-force reachability.
pub fn disconnecting_links(t: &Topology) -> usize {
    let links = t.physical_links();
    links
        .iter()
        .filter(|l| {
            let removed: Vec<usize> = l.edges().collect();
            let n = t.node_count();
            (0..n).any(|s| {
                let mut seen = vec![false; n];
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(u) = stack.pop() {
                    for (id, e) in t.edges.iter().enumerate() {
                        if e.src == u && !removed.contains(&id) && !seen[e.dst] {
                            seen[e.dst] = true;
                            stack.push(e.dst);
                        }
                    }
                }
                seen.iter().any(|&x| !x)
            })
        })
        .count()
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Topology name and its five bundled matrices.
pub fn corpus() -> Vec<(String, Topology, Vec<TrafficMatrix>)> {
    let dir = data_dir();
    let mut out = Vec::new();
    for name in ["abilene", "diamond", "grid", "nsfnet", "ring", "triangle"] {
        let t = tebench::io::parse_topology(&std::fs::read_to_string(dir.join(format!("{name}.graph"))).unwrap()).unwrap();
        let tms = (1..=5)
            .map(|s| {
                let text = std::fs::read_to_string(dir.join(name).join(format!("{name}_{s}.demands"))).unwrap();
                tebench::io::parse_demands(&text).unwrap()
            })
            .collect();
        out.push((name.to_string(), t, tms));
    }
    out
}
