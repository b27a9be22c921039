//! Randomized gravity-model traffic matrices.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`),
//! a counter-based generator with a fixed, documented output stream. Uniform
//! draws take the top 53 bits of `next_u64`, exponential masses use the
//! inverse CDF `-ln(1 - u)`. Out-masses for all nodes are drawn first, then
//! in-masses, both in node order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mcf::{scale_traffic_matrix, McfError, McfParams};
use crate::model::{Demand, Topology, TrafficMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityParams {
    pub seed: u64,
    /// Sum of all generated volumes, in kbps.
    pub total_volume: f64,
}

impl GravityParams {
    /// Default total volume of `|V|^2 * 1000` kbps.
    pub fn for_topology(topology: &Topology, seed: u64) -> Self {
        let n = topology.node_count() as f64;
        GravityParams { seed, total_volume: n * n * 1000.0 }
    }
}

fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn unit_exponential(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - unit_uniform(rng)).ln()
}

/// Out- and in-masses drawn for every node, in generation order.
pub fn gravity_masses(node_count: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out: Vec<f64> = (0..node_count).map(|_| unit_exponential(&mut rng)).collect();
    let inc: Vec<f64> = (0..node_count).map(|_| unit_exponential(&mut rng)).collect();
    (out, inc)
}

/// `T(i, j)` proportional to `out(i) * in(j)` for every ordered pair
/// `i != j`, normalized so that the volumes sum to `total_volume`.
/// Demands are listed in (src, dst) lexicographic order.
pub fn generate_gravity_tm(topology: &Topology, params: &GravityParams) -> TrafficMatrix {
    let n = topology.node_count();
    let (out, inc) = gravity_masses(n, params.seed);
    let mut weight_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weight_sum += out[i] * inc[j];
            }
        }
    }
    let mut demands = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                demands.push(Demand {
                    label: format!("demand_{}", demands.len()),
                    src: i,
                    dst: j,
                    volume: params.total_volume * out[i] * inc[j] / weight_sum,
                });
            }
        }
    }
    TrafficMatrix { demands }
}

/// Gravity matrix scaled so that its multi-commodity flow lower bound is
/// `target`.
pub fn synthesize_scaled_tm(
    topology: &Topology,
    seed: u64,
    target: f64,
    params: &McfParams,
) -> Result<TrafficMatrix, McfError> {
    let tm = generate_gravity_tm(topology, &GravityParams::for_topology(topology, seed));
    scale_traffic_matrix(topology, &tm, target, params)
}
