mod common;

use cliquesel::features::extract_global;
use cliquesel::graph::Graph;

#[test]
fn features_match_brute_force() {
    common::feature_suite(200, 11).unwrap();
}

#[test]
fn features_on_named_graphs() {
    for g in [Graph::complete(7), Graph::cycle(9), Graph::star(5), Graph::petersen(), Graph::empty(4)] {
        let got = extract_global::<f64>(&g).unwrap().to_vector();
        let want = common::feature_oracle(&g);
        for k in 0..12 {
            assert!((got[k] - want[k]).abs() < 1e-12, "{k}: {} vs {}", got[k], want[k]);
        }
    }
}

#[test]
fn f32_features_track_f64() {
    for g in common::graph_sample(30, 40, 4) {
        let a = extract_global::<f64>(&g).unwrap().to_vector();
        let b = extract_global::<f32>(&g).unwrap().to_vector();
        for k in 0..12 {
            assert!((a[k] - b[k] as f64).abs() <= 1e-4 * a[k].abs().max(1.0));
        }
    }
}
