use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::model::{Demand, Edge, Node, Topology, TrafficMatrix};

/// Capacity given to every link of a topology that specifies none.
pub const DEFAULT_CAPACITY: f64 = 1_000_000.0;

/// Smallest allowed capacity, as a fraction of the largest one.
const CAPACITY_FLOOR_RATIO: f64 = 1.0 / 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RawEdge {
    pub label: String,
    pub src: usize,
    pub dst: usize,
    pub weight: u32,
    pub capacity: Option<f64>,
    pub delay: f64,
}

/// A topology as read from disk, possibly disconnected and with unknown
/// capacities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTopology {
    pub nodes: Vec<Node>,
    pub edges: Vec<RawEdge>,
}

impl RawTopology {
    /// Converts to a [`Topology`], or returns the index of the first edge
    /// without capacity.
    pub fn into_complete(self) -> Result<Topology, usize> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for (id, e) in self.edges.into_iter().enumerate() {
            let capacity = e.capacity.ok_or(id)?;
            edges.push(Edge {
                label: e.label,
                src: e.src,
                dst: e.dst,
                weight: e.weight,
                capacity,
                delay: e.delay,
            });
        }
        Ok(Topology { nodes: self.nodes, edges })
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology {
            nodes: t.nodes,
            edges: t
                .edges
                .into_iter()
                .map(|e| RawEdge {
                    label: e.label,
                    src: e.src,
                    dst: e.dst,
                    weight: e.weight,
                    capacity: Some(e.capacity),
                    delay: e.delay,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PreprocessError {
    #[error("topology has no nodes")]
    NoNodes,
    #[error("largest strongly connected component has no links")]
    EmptyComponent,
}

/// Result of [`preprocess_topology`]: the cleaned topology plus the mapping
/// from original node indices to the retained ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub topology: Topology,
    pub node_map: Vec<Option<usize>>,
}

impl Preprocessed {
    /// Re-indexes demands onto the retained nodes, dropping any demand whose
    /// endpoints were removed.
    pub fn remap_demands(&self, traffic: &TrafficMatrix) -> TrafficMatrix {
        let demands = traffic
            .demands
            .iter()
            .filter_map(|d| {
                let src = self.node_map.get(d.src).copied().flatten();
                let dst = self.node_map.get(d.dst).copied().flatten();
                match (src, dst) {
                    (Some(src), Some(dst)) => Some(Demand { src, dst, ..d.clone() }),
                    _ => {
                        log::warn!("dropping demand {}: endpoint outside retained component", d.label);
                        None
                    }
                }
            })
            .collect();
        TrafficMatrix { demands }
    }
}

/// Keeps the largest strongly connected component (ties go to the component
/// holding the lowest node index), fills unknown capacities with the mean of
/// the known ones (or [`DEFAULT_CAPACITY`] when none is known), then raises
/// every capacity to at least 1/20 of the largest.
pub fn preprocess_topology(raw: &RawTopology) -> Result<Preprocessed, PreprocessError> {
    let n = raw.nodes.len();
    if n == 0 {
        return Err(PreprocessError::NoNodes);
    }

    let mut graph = DiGraph::<(), ()>::with_capacity(n, raw.edges.len());
    for _ in 0..n {
        graph.add_node(());
    }
    for e in &raw.edges {
        graph.add_edge((e.src as u32).into(), (e.dst as u32).into(), ());
    }
    let keep = tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut nodes: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
            nodes.sort_unstable();
            nodes
        })
        .min_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])))
        .expect("at least one component");

    let mut node_map = vec![None; n];
    for (new, &old) in keep.iter().enumerate() {
        node_map[old] = Some(new);
    }
    let nodes: Vec<Node> = keep.iter().map(|&i| raw.nodes[i].clone()).collect();
    let kept_edges: Vec<&RawEdge> = raw
        .edges
        .iter()
        .filter(|e| node_map[e.src].is_some() && node_map[e.dst].is_some())
        .collect();
    if kept_edges.is_empty() {
        return Err(PreprocessError::EmptyComponent);
    }

    let known: Vec<f64> = kept_edges.iter().filter_map(|e| e.capacity).collect();
    let fill = if known.is_empty() {
        DEFAULT_CAPACITY
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };
    let mut capacities: Vec<f64> = kept_edges.iter().map(|e| e.capacity.unwrap_or(fill)).collect();
    let floor = capacities.iter().copied().fold(0.0, f64::max) * CAPACITY_FLOOR_RATIO;
    for c in &mut capacities {
        if *c < floor {
            *c = floor;
        }
    }

    let edges = kept_edges
        .iter()
        .zip(capacities)
        .map(|(e, capacity)| Edge {
            label: e.label.clone(),
            src: node_map[e.src].unwrap(),
            dst: node_map[e.dst].unwrap(),
            weight: e.weight,
            capacity,
            delay: e.delay,
        })
        .collect();
    Ok(Preprocessed { topology: Topology { nodes, edges }, node_map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn raw_with_capacities(caps: &[Option<f64>]) -> RawTopology {
        // A ring over caps.len() nodes, one directed edge per capacity plus
        // the reverse direction at the same capacity.
        let n = caps.len();
        let mut t = RawTopology::from(fixtures::bidirectional(
            &(0..n).map(|_| "n").collect::<Vec<_>>(),
            &(0..n).map(|i| (i, (i + 1) % n, 1, 1.0)).collect::<Vec<_>>(),
        ));
        for (i, c) in caps.iter().enumerate() {
            t.edges[2 * i].capacity = *c;
            t.edges[2 * i + 1].capacity = *c;
        }
        t
    }

    #[test]
    fn keeps_largest_component() {
        let mut big = fixtures::bidirectional(
            &["a", "b", "c", "d", "e", "x", "y"],
            &[(0, 1, 1, 10.0), (1, 2, 1, 10.0), (2, 3, 1, 10.0), (3, 4, 1, 10.0), (5, 6, 1, 10.0)],
        );
        // One-way edge between the components does not join them.
        big.edges.push(Edge { label: "bridge".into(), src: 4, dst: 5, weight: 1, capacity: 10.0, delay: 0.0 });
        let p = preprocess_topology(&big.into()).unwrap();
        assert_eq!(p.topology.node_count(), 5);
        assert_eq!(p.topology.edge_count(), 8);
        assert_eq!(p.node_map[5], None);
        assert!(p.topology.is_strongly_connected());
    }

    #[test]
    fn tie_goes_to_lowest_node_index() {
        let t = fixtures::bidirectional(&["a", "b", "c", "d"], &[(2, 3, 1, 10.0), (0, 1, 1, 10.0)]);
        let p = preprocess_topology(&t.into()).unwrap();
        assert_eq!(p.node_map, vec![Some(0), Some(1), None, None]);
    }

    #[test]
    fn missing_capacity_gets_the_mean() {
        let raw = raw_with_capacities(&[Some(100_000.0), None, Some(300_000.0)]);
        let p = preprocess_topology(&raw).unwrap();
        assert_eq!(p.topology.edges[2].capacity, 200_000.0);
    }

    #[test]
    fn no_capacity_at_all_uses_default() {
        let raw = raw_with_capacities(&[None, None, None]);
        let p = preprocess_topology(&raw).unwrap();
        assert!(p.topology.edges.iter().all(|e| e.capacity == DEFAULT_CAPACITY));
    }

    #[test]
    fn small_capacities_raised_to_one_twentieth() {
        let raw = raw_with_capacities(&[Some(1000.0), Some(100_000.0), Some(100_000.0)]);
        let p = preprocess_topology(&raw).unwrap();
        assert_eq!(p.topology.edges[0].capacity, 5000.0);
        assert_eq!(p.topology.edges[2].capacity, 100_000.0);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert_eq!(preprocess_topology(&RawTopology::default()), Err(PreprocessError::NoNodes));
        let lonely = RawTopology { nodes: fixtures::triangle(1.0).nodes, edges: vec![] };
        assert_eq!(preprocess_topology(&lonely), Err(PreprocessError::EmptyComponent));
    }

    #[test]
    fn demands_follow_the_node_map() {
        let t = fixtures::bidirectional(&["a", "b", "c", "d"], &[(2, 3, 1, 10.0), (2, 1, 1, 10.0)]);
        let p = preprocess_topology(&t.into()).unwrap();
        let tm = fixtures::demands(&[(1, 3, 5.0), (0, 2, 5.0)]);
        let remapped = p.remap_demands(&tm);
        assert_eq!(remapped.len(), 1);
        assert_eq!((remapped.demands[0].src, remapped.demands[0].dst), (0, 2));
    }
}
