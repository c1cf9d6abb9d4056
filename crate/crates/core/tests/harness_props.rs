use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use serde_json::json;

use scanstat::graph::EdgeProbabilityModel;
use scanstat::harness::{
    estimate_risk, run_sweep, AlternativeSpec, Axis, CommunitySpec, ExperimentConfig, RhoSpec,
    ScanSettings, SweepConfig, SweepKind, TestKind,
};
use scanstat::lr::{bayes_risk, LrProblem, Scaling, DEFAULT_ENUMERATION_BUDGET};

fn config(seed: u64, rho: f64) -> ExperimentConfig {
    let model = EdgeProbabilityModel::homogeneous(8, 0.3).unwrap();
    let alt = AlternativeSpec {
        communities: CommunitySpec::All,
        rho: RhoSpec::Fixed(rho),
        clamp_feasible: false,
    };
    let mut cfg = ExperimentConfig::new(&model, alt, ScanSettings::new(2), 150);
    cfg.master_seed = seed;
    cfg
}

proptest! {
    // Monte Carlo tolerances: fixed seed keeps runs reproducible.
    #![proptest_config(ProptestConfig {
        cases: 8,
        rng_seed: RngSeed::Fixed(7),
        ..ProptestConfig::default()
    })]

    #[test]
    fn results_do_not_depend_on_worker_count(seed in any::<u64>(), workers in 2usize..5) {
        let mut cfg = config(seed, 2.5);
        cfg.workers = Some(1);
        let one = estimate_risk(&cfg, TestKind::ScanUnknown).unwrap();
        cfg.workers = Some(workers);
        prop_assert_eq!(one, estimate_risk(&cfg, TestKind::ScanUnknown).unwrap());
    }

    #[test]
    fn risk_ordering(seed in any::<u64>(), rho in 1.5f64..3.0) {
        let cfg = config(seed, rho);
        let model = EdgeProbabilityModel::homogeneous(8, 0.3).unwrap();
        let problem = LrProblem::new(model, 2, Scaling::Uniform(rho), DEFAULT_ENUMERATION_BUDGET).unwrap();
        let bayes = bayes_risk(&problem, 1000, seed).unwrap();
        for test in [TestKind::ScanKnown, TestKind::ScanUnknown, TestKind::Lr] {
            let est = estimate_risk(&cfg, test).unwrap();
            prop_assert!(est.worst_case_risk >= est.average_risk);
            let se = (est.average_stderr.powi(2) + bayes.stderr.powi(2)).sqrt();
            prop_assert!(est.average_risk >= bayes.risk - 3.0 * se, "{:?}: {} < {}", test, est.average_risk, bayes.risk);
        }
    }
}

#[test]
fn sweep_csv_is_reproducible() {
    let cfg = SweepConfig {
        kind: SweepKind::Risk {
            test: TestKind::ScanKnown,
            base: serde_json::to_value(config(5, 2.0)).unwrap(),
        },
        axes: vec![Axis {
            key: "alternative.rho".into(),
            values: vec![json!(1.0), json!(2.0), json!(3.0)],
        }],
        workers: Some(2),
    };
    let a = run_sweep(&cfg, None).unwrap().to_csv();
    let b = run_sweep(
        &SweepConfig {
            workers: Some(1),
            ..cfg.clone()
        },
        None,
    )
    .unwrap()
    .to_csv();
    assert_eq!(a, b);
}
