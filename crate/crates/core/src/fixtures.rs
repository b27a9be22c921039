//! Small hand-built networks used by tests, examples and the bindings.

use crate::model::{Demand, Edge, Node, Setting, Topology, TrafficMatrix};

/// Builds a topology from node labels and undirected links
/// `(a, b, weight, capacity)`. Each link becomes the edges `a->b`, `b->a`.
pub fn bidirectional(labels: &[&str], links: &[(usize, usize, u32, f64)]) -> Topology {
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(i, l)| Node { label: l.to_string(), x: i as f64, y: 0.0 })
        .collect();
    let mut edges = Vec::with_capacity(links.len() * 2);
    for &(a, b, weight, capacity) in links {
        for (src, dst) in [(a, b), (b, a)] {
            edges.push(Edge {
                label: format!("e{}", edges.len()),
                src,
                dst,
                weight,
                capacity,
                delay: 0.0,
            });
        }
    }
    Topology { nodes, edges }
}

pub fn demands(list: &[(usize, usize, f64)]) -> TrafficMatrix {
    TrafficMatrix::new(
        list.iter()
            .enumerate()
            .map(|(i, &(src, dst, volume))| Demand { label: format!("d{i}"), src, dst, volume })
            .collect(),
    )
}

/// A, B, C fully meshed with unit weights. Edge order:
/// A->B, B->A, B->C, C->B, A->C, C->A.
pub fn triangle(capacity: f64) -> Topology {
    bidirectional(&["A", "B", "C"], &[(0, 1, 1, capacity), (1, 2, 1, capacity), (0, 2, 1, capacity)])
}

pub fn triangle_setting(list: &[(usize, usize, f64)]) -> Setting {
    Setting::new("triangle", triangle(10_000.0), demands(list))
}

/// S(0) - A(1) - T(3) and S(0) - B(2) - T(3), unit weights.
pub fn diamond(capacity: f64) -> Topology {
    bidirectional(
        &["S", "A", "B", "T"],
        &[(0, 1, 1, capacity), (1, 3, 1, capacity), (0, 2, 1, capacity), (2, 3, 1, capacity)],
    )
}

/// A(0) - B(1) - C(2) - D(3) - A(0) with the given link weights in that order.
pub fn ring(capacity: f64, weights: [u32; 4]) -> Topology {
    bidirectional(
        &["A", "B", "C", "D"],
        &[
            (0, 1, weights[0], capacity),
            (1, 2, weights[1], capacity),
            (2, 3, weights[2], capacity),
            (3, 0, weights[3], capacity),
        ],
    )
}
