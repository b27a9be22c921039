mod common;

use tebench::mcf::{exact_lower_bound, lp_lower_bound, scale_traffic_matrix, McfParams};
use tebench::routing::igp_load_by_destination;

#[test]
fn approximation_tracks_exact_optimum() {
    for seed in 0..40 {
        let mut rng = common::rng(1000 + seed);
        let n = 3 + (seed as usize % 4);
        let t = common::random_topology(&mut rng, n, 0.35, 5);
        let tm = common::random_traffic(&mut rng, n, 2 * n, 3000);
        let exact = exact_lower_bound(&t, &tm).unwrap();
        let approx = lp_lower_bound(&t, &tm, &McfParams::default()).unwrap();
        assert!(approx.lower_bound <= exact * (1.0 + 1e-9), "seed {seed}: {} > {exact}", approx.lower_bound);
        assert!(approx.upper_bound >= exact * (1.0 - 1e-9), "seed {seed}");
        assert!((approx.lower_bound - exact).abs() <= 0.015 * exact, "seed {seed}");
    }
}

#[test]
fn bound_is_below_shortest_path_routing() {
    for seed in 0..30 {
        let mut rng = common::rng(seed);
        let n = 4 + (seed as usize % 5);
        let t = common::random_topology(&mut rng, n, 0.3, 5);
        let tm = common::random_traffic(&mut rng, n, 3 * n, 2000);
        let routed = igp_load_by_destination(&t, &t.weights(), &tm).unwrap().max_utilization;
        let bound = lp_lower_bound(&t, &tm, &McfParams::default()).unwrap().lower_bound;
        assert!(bound <= routed * (1.0 + 1e-9));
    }
}

#[test]
fn bound_scales_linearly() {
    let mut rng = common::rng(77);
    let t = common::random_topology(&mut rng, 6, 0.3, 3);
    let tm = common::random_traffic(&mut rng, 6, 12, 1000);
    let exact = exact_lower_bound(&t, &tm).unwrap();
    let exact3 = exact_lower_bound(&t, &tm.scaled(3.0)).unwrap();
    assert!((exact3 / exact - 3.0).abs() < 1e-9);
    let scaled = scale_traffic_matrix(&t, &tm, 0.9, &McfParams::default()).unwrap();
    let opt = exact_lower_bound(&t, &scaled).unwrap();
    assert!((0.9 - 1e-9..=0.9 * 1.01 + 1e-9).contains(&opt), "{opt}");
}
