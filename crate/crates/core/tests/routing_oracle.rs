mod common;

use proptest::prelude::*;
use tebench::model::{RoutingConfiguration, Setting};
use tebench::routing::{compute_forwarding_state, igp_load, igp_load_by_destination, total_load};

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ecmp_loads_match_path_enumeration(seed in any::<u64>(), n in 2usize..=7, density in 0.0f64..0.6) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, density, 5);
        let tm = common::random_traffic(&mut rng, n, 2 * n, 1000);
        let state = compute_forwarding_state(&t, &t.weights()).unwrap();
        let load = igp_load(&t, &state, &tm).unwrap().load;
        prop_assert!(close(&load, &common::ecmp_loads(&t, &tm)));
        let by_dst = igp_load_by_destination(&t, &t.weights(), &tm).unwrap().load;
        prop_assert!(close(&load, &by_dst));
    }

    #[test]
    fn stitched_segments_add_leg_loads(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, 0.3, 5);
        let tm = common::random_traffic(&mut rng, n, 1, 1000);
        let d = tm.demands[0].clone();
        let k = (0..n).find(|&k| k != d.src && k != d.dst).unwrap();
        let mut routing = RoutingConfiguration::with_weights(t.weights());
        routing.sr_segments.insert(0, vec![d.src, k, d.dst]);
        let s = Setting::new("s", t.clone(), tm).with_routing(routing);
        let got = total_load(&s).unwrap().load;
        let dist = common::floyd(&t);
        let a = common::ecmp_fractions(&t, &dist, d.src, k);
        let b = common::ecmp_fractions(&t, &dist, k, d.dst);
        let expected: Vec<f64> = a.iter().zip(&b).map(|(x, y)| d.volume * (x + y)).collect();
        prop_assert!(close(&got, &expected));
    }

    #[test]
    fn flow_is_conserved(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, 0.3, 5);
        let tm = common::random_traffic(&mut rng, n, n, 1000);
        let load = igp_load_by_destination(&t, &t.weights(), &tm).unwrap().load;
        for v in 0..n {
            let out: f64 = t.edges.iter().zip(&load).filter(|(e, _)| e.src == v).map(|(_, l)| l).sum();
            let inc: f64 = t.edges.iter().zip(&load).filter(|(e, _)| e.dst == v).map(|(_, l)| l).sum();
            let sourced: f64 = tm.demands.iter().filter(|d| d.src == v).map(|d| d.volume).sum();
            let sunk: f64 = tm.demands.iter().filter(|d| d.dst == v).map(|d| d.volume).sum();
            prop_assert!((out - inc - (sourced - sunk)).abs() < 1e-6);
        }
    }
}

#[test]
fn equal_cost_split_is_per_node() {
    // Three equal-cost S-T paths: S-A-T, S-B-T, S-B-C-T. S halves the
    // traffic, B halves its share again, so the split is not one third each.
    use tebench::model::{Edge, Node, Topology};
    let arcs = [(0, 1, 2), (1, 4, 1), (0, 2, 1), (2, 4, 2), (2, 3, 1), (3, 4, 1)];
    let t = Topology {
        nodes: ["S", "A", "B", "C", "T"].iter().map(|l| Node { label: l.to_string(), x: 0.0, y: 0.0 }).collect(),
        edges: arcs
            .iter()
            .enumerate()
            .map(|(i, &(src, dst, weight))| Edge { label: format!("e{i}"), src, dst, weight, capacity: 1000.0, delay: 0.0 })
            .collect(),
    };
    let tm = tebench::fixtures::demands(&[(0, 4, 800.0)]);
    let state = compute_forwarding_state(&t, &t.weights()).unwrap();
    let load = igp_load(&t, &state, &tm).unwrap().load;
    assert_eq!(load, vec![400.0, 400.0, 400.0, 200.0, 200.0, 200.0]);
    assert_eq!(load, common::ecmp_loads(&t, &tm));
}
