use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use scanstat::graph::{sample_null, EdgeProbabilityModel, GraphSample};
use scanstat::lr::{
    likelihood_ratio_average, null_mean, LrProblem, Scaling, DEFAULT_ENUMERATION_BUDGET,
};

fn relabel(g: &GraphSample, perm: &[usize]) -> GraphSample {
    let edges = g.adjacency.edges().map(|(i, j)| {
        let (a, b) = (perm[i], perm[j]);
        (a.min(b), a.max(b))
    });
    GraphSample::from_edges(g.n(), edges).unwrap()
}

proptest! {
    // Monte Carlo tolerances: fixed seed keeps runs reproducible.
    #![proptest_config(ProptestConfig {
        cases: 32,
        rng_seed: RngSeed::Fixed(1729),
        ..ProptestConfig::default()
    })]

    #[test]
    fn relabelling_leaves_the_average_ratio_unchanged(
        seed in any::<u64>(),
        perm in Just((0..9).collect::<Vec<usize>>()).prop_shuffle(),
        rho in 1.1f64..3.0,
    ) {
        let model = EdgeProbabilityModel::homogeneous(9, 0.3).unwrap();
        let problem = LrProblem::new(model.clone(), 3, Scaling::Uniform(rho), DEFAULT_ENUMERATION_BUDGET).unwrap();
        let g = sample_null(&model, seed);
        let a = likelihood_ratio_average(&problem, &g).unwrap().value;
        let b = likelihood_ratio_average(&problem, &relabel(&g, &perm)).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn null_mean_of_the_ratio_is_one(seed in any::<u64>(), p in 0.1f64..0.4, rho in 1.2f64..2.4) {
        let model = EdgeProbabilityModel::homogeneous(8, p).unwrap();
        let problem = LrProblem::new(model, 3, Scaling::Uniform(rho), DEFAULT_ENUMERATION_BUDGET).unwrap();
        let (mean, se) = null_mean(&problem, 1500, seed).unwrap();
        prop_assert!((mean - 1.0).abs() <= 4.0 * se.max(1e-12), "{} +- {}", mean, se);
    }
}
