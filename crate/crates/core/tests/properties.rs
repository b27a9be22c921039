mod common;

use proptest::prelude::*;
use tebench::io::{parse_demands, parse_topology, write_demands, write_topology};
use tebench::model::Setting;
use tebench::routing::total_load;
use tebench::solvers::{builtin, Budget};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn files_round_trip(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, 0.3, 9);
        let mut tm = common::random_traffic(&mut rng, n, n, 10_000);
        // Rows sharing a pair are summed on read, so keep pairs distinct.
        let mut pairs = std::collections::BTreeSet::new();
        tm.demands.retain(|d| pairs.insert((d.src, d.dst)));
        prop_assert_eq!(parse_topology(&write_topology(&t)).unwrap(), t);
        prop_assert_eq!(parse_demands(&write_demands(&tm)).unwrap(), tm);
    }

    #[test]
    fn load_is_linear_in_volume(seed in any::<u64>(), n in 2usize..8, factor in 0.1f64..10.0) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, 0.3, 5);
        let tm = common::random_traffic(&mut rng, n, 2 * n, 5000);
        let base = total_load(&Setting::new("a", t.clone(), tm.clone())).unwrap();
        let scaled = total_load(&Setting::new("b", t, tm.scaled(factor))).unwrap();
        prop_assert!((scaled.max_utilization - factor * base.max_utilization).abs() <= 1e-9 * scaled.max_utilization.max(1.0));
    }

    #[test]
    fn output_validates(seed in any::<u64>(), n in 3usize..7, which in 0usize..4) {
        let mut rng = common::rng(seed);
        let t = common::random_topology(&mut rng, n, 0.3, 5);
        let tm = common::random_traffic(&mut rng, n, n, 5000);
        let s = Setting::new("p", t, tm);
        let name = ["igpwo", "sr2seg-heur", "srlns", "sr2seg-exact"][which];
        let out = builtin(name).unwrap().solve(&s, &Budget::iterations(20, seed)).unwrap();
        let routed = s.with_routing(out.routing);
        prop_assert!(tebench::model::validate_setting(&routed).is_empty());
        prop_assert!(total_load(&routed).unwrap().max_utilization <= total_load(&s).unwrap().max_utilization);
    }
}
