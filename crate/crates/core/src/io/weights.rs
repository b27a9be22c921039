use std::str::FromStr;

use crate::model::{Setting, Topology, TrafficMatrix, DEFAULT_MAX_WEIGHT};
use crate::solvers::{igpwo, Budget};

/// IGP weight assignment strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightHeuristic {
    /// Every weight is 1.
    Unit,
    /// `max(1, round(max_capacity / capacity))`.
    InverseCapacity,
    /// Weights returned by the IGP weight-optimization solver for the given
    /// traffic, starting from the topology's own weights.
    Optimized,
}

impl FromStr for WeightHeuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit" | "Unit" => Ok(WeightHeuristic::Unit),
            "inverse-capacity" | "invcap" | "InverseCapacity" => Ok(WeightHeuristic::InverseCapacity),
            "optimized" | "Optimized" => Ok(WeightHeuristic::Optimized),
            other => Err(format!("unknown weight heuristic `{other}` (unit, invcap, optimized)")),
        }
    }
}

/// Iteration budget used when optimizing weights for a topology.
const OPTIMIZED_ITERATIONS: u64 = 2_000;

pub fn assign_weights(topology: &Topology, heuristic: WeightHeuristic, traffic: &TrafficMatrix) -> Vec<u32> {
    match heuristic {
        WeightHeuristic::Unit => vec![1; topology.edge_count()],
        WeightHeuristic::InverseCapacity => {
            let reference = topology.edges.iter().map(|e| e.capacity).fold(0.0, f64::max);
            topology
                .edges
                .iter()
                .map(|e| (reference / e.capacity).round().clamp(1.0, DEFAULT_MAX_WEIGHT as f64) as u32)
                .collect()
        }
        WeightHeuristic::Optimized => {
            let setting = Setting::new("weights", topology.clone(), traffic.clone());
            let budget = Budget::iterations(OPTIMIZED_ITERATIONS, 0);
            igpwo::solve_igp_wo(&setting, &budget, &igpwo::IgpWoParams::default()).weights
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::routing::total_load;

    fn with_capacities(caps: &[f64]) -> Topology {
        let mut t = fixtures::bidirectional(&["a", "b"], &vec![(0, 1, 7, 1.0); caps.len()]);
        t.edges.truncate(caps.len());
        for (e, &c) in t.edges.iter_mut().zip(caps) {
            e.capacity = c;
        }
        t
    }

    #[test]
    fn unit_weights() {
        let t = fixtures::ring(10.0, [3, 4, 5, 6]);
        assert!(assign_weights(&t, WeightHeuristic::Unit, &TrafficMatrix::default())
            .iter()
            .all(|&w| w == 1));
    }

    #[test]
    fn inverse_capacity_weights() {
        let t = with_capacities(&[100_000.0, 50_000.0, 25_000.0]);
        assert_eq!(assign_weights(&t, WeightHeuristic::InverseCapacity, &TrafficMatrix::default()), vec![1, 2, 4]);
        // 100000 / 3000 = 33.33..., rounds to 33.
        let t = with_capacities(&[100_000.0, 3000.0]);
        assert_eq!(assign_weights(&t, WeightHeuristic::InverseCapacity, &TrafficMatrix::default()), vec![1, 33]);
    }

    #[test]
    fn optimized_weights_never_worse() {
        let topo = fixtures::ring(10_000.0, [1, 1, 1, 2]);
        let tm = fixtures::demands(&[(0, 2, 10_000.0)]);
        let before = total_load(&Setting::new("r", topo.clone(), tm.clone())).unwrap().max_utilization;
        let weights = assign_weights(&topo, WeightHeuristic::Optimized, &tm);
        let mut s = Setting::new("r", topo, tm);
        s.routing.weights = weights;
        assert!(total_load(&s).unwrap().max_utilization <= before);
    }

    #[test]
    fn heuristic_names() {
        assert_eq!("invcap".parse(), Ok(WeightHeuristic::InverseCapacity));
        assert!("fancy".parse::<WeightHeuristic>().is_err());
    }
}
