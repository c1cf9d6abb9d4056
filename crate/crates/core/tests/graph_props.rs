use proptest::prelude::*;
use scanstat::graph::{
    edges_across, edges_within, expected_edges_null, sample_alternative, sample_null,
    EdgeProbabilityModel, PlantedAlternative,
};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.9, n)
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(0..n, 1..n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #[test]
    fn partition_identity((w, d) in (8usize..40).prop_flat_map(|n| (weights(n), subset(n))), seed in any::<u64>()) {
        let model = EdgeProbabilityModel::rank_one(w).unwrap();
        let g = sample_null(&model, seed);
        let rest: Vec<usize> = (0..g.n()).filter(|v| !d.contains(v)).collect();
        let outside = if rest.is_empty() { 0 } else { edges_within(&g, &rest).unwrap() };
        prop_assert_eq!(
            edges_within(&g, &d).unwrap() + edges_across(&g, &d).unwrap() + outside,
            g.total_edges()
        );
    }

    #[test]
    fn sampling_is_deterministic(w in weights(30), seed in any::<u64>(), rho in 1.0f64..1.1) {
        let model = EdgeProbabilityModel::rank_one(w).unwrap();
        prop_assert_eq!(sample_null(&model, seed).adjacency, sample_null(&model, seed).adjacency);
        let alt = PlantedAlternative::new(&model, vec![1, 4, 9], rho).unwrap();
        prop_assert_eq!(
            sample_alternative(&model, &alt, seed).unwrap().adjacency,
            sample_alternative(&model, &alt, seed).unwrap().adjacency
        );
    }
}

#[test]
fn null_and_planted_means() {
    let w: Vec<f64> = (0..30).map(|i| 0.15 + 0.01 * i as f64).collect();
    let model = EdgeProbabilityModel::rank_one(w).unwrap();
    let d = vec![3, 7, 8, 20, 25, 29];
    let c = vec![3, 7, 8, 11, 20, 25, 29];
    let rho = 1.8;
    let alt = PlantedAlternative::new(&model, c, rho).unwrap();
    let n = 10_000;
    let (mut null_sum, mut alt_sum) = (0u64, 0u64);
    for s in 0..n {
        null_sum += edges_within(&sample_null(&model, s), &d).unwrap();
        alt_sum += edges_within(&sample_alternative(&model, &alt, s).unwrap(), &d).unwrap();
    }
    let mean = expected_edges_null(&model, &d).unwrap();
    let null_mean = null_sum as f64 / n as f64;
    assert!(
        (null_mean - mean).abs() <= 4.0 * (mean / n as f64).sqrt(),
        "{null_mean} vs {mean}"
    );
    let alt_mean = alt_sum as f64 / n as f64;
    let planted = rho * mean;
    assert!(
        (alt_mean - planted).abs() <= 4.0 * (planted / n as f64).sqrt(),
        "{alt_mean} vs {planted}"
    );
}
