mod common;

use cliquesel::dataset::{train_test_split, DatasetVariant};
use cliquesel::features::extract_global;
use cliquesel::graph::{parse_dimacs_clq, Graph};
use cliquesel::metrics::MetricReport;
use cliquesel::solvers::{clique_core_gap, run_portfolio, Budget, SolveStatus};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph() -> impl Strategy<Value = Graph> {
    (1usize..30, 0.0f64..1.0, any::<u64>())
        .prop_map(|(n, p, seed)| common::random_graph(n, p, &mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip(g in graph()) {
        prop_assert_eq!(parse_dimacs_clq(&g.to_dimacs()).unwrap(), g);
    }

    #[test]
    fn feature_ranges(g in graph()) {
        let f = extract_global::<f64>(&g).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.density));
        prop_assert!((-1.0..=1.0).contains(&f.assortativity));
        prop_assert!((0.0..=1.0).contains(&f.global_clustering));
        prop_assert!((0.0..=1.0).contains(&f.avg_local_clustering));
        prop_assert!(f.max_core <= f.max_degree);
        prop_assert!(f.max_edge_triangles as f64 >= f.avg_edge_triangles - 1e-12);
    }

    #[test]
    fn solvers_agree_and_gap_non_negative(g in graph()) {
        let outs = run_portfolio(&g, &Budget::seconds(30.0).unwrap()).unwrap();
        let omega = common::omega_oracle(&g);
        for o in &outs {
            prop_assert_eq!(o.status, SolveStatus::Exact);
            prop_assert_eq!(o.size, omega);
        }
        prop_assert!(clique_core_gap(&g, omega) >= 0);
    }

    #[test]
    fn relabeling_keeps_features(g in graph(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..g.node_count()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let h = g.relabel(&perm).unwrap();
        prop_assert_eq!(extract_global::<f64>(&g).unwrap(), extract_global::<f64>(&h).unwrap());
    }

    #[test]
    fn metrics_bounded(t in prop::collection::vec(0usize..4, 1..40), noise in prop::collection::vec(0usize..4, 40)) {
        let p: Vec<usize> = t.iter().zip(&noise).map(|(&a, &b)| if b == 0 { a } else { b }).collect();
        let r = MetricReport::<f64>::from_labels(&t, &p, 4).unwrap();
        for v in [r.accuracy, r.macro_f1, r.weighted_f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let perfect = MetricReport::<f64>::from_labels(&t, &t, 4).unwrap();
        prop_assert_eq!(perfect.accuracy, 1.0);
        prop_assert_eq!(perfect.weighted_f1, 1.0);
    }

    #[test]
    fn split_partitions_items(n in 2usize..200, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        match train_test_split(&items, ratio, seed) {
            Ok(s) => {
                prop_assert_eq!(s.train.len(), (ratio * n as f64).floor() as usize);
                let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
                all.sort();
                prop_assert_eq!(all, items);
            }
            Err(_) => {
                let cut = (ratio * n as f64).floor() as usize;
                prop_assert!(cut == 0 || cut == n);
            }
        }
    }

    #[test]
    fn variant_names_round_trip(i in 0usize..3) {
        let v = DatasetVariant::ALL[i];
        prop_assert_eq!(v.short().parse::<DatasetVariant>().unwrap(), v);
    }
}
