use proptest::prelude::*;
use scanstat::audit::{audit_assumption_1_1, audit_assumption_1_2, audit_assumption_3};
use scanstat::graph::EdgeProbabilityModel;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // The homogeneous closed form agrees with the exhaustive search on the same matrix.
    #[test]
    fn homogeneous_density_ratio_matches_search(
        n in 200usize..2000,
        r in 4usize..14,
        p in 0.05f64..0.9,
        gamma in 0.05f64..0.5,
    ) {
        let model = EdgeProbabilityModel::homogeneous(n, p).unwrap();
        let general = model.to_general();
        let c: Vec<usize> = (0..r).collect();
        let a = audit_assumption_1_1(&model, &c, 0.1, gamma, 10.0).unwrap();
        let b = audit_assumption_1_1(&general, &c, 0.1, gamma, 10.0).unwrap();
        prop_assert!((a[1].lhs - b[1].lhs).abs() <= 1e-12, "{} vs {}", a[1].lhs, b[1].lhs);
        prop_assert_eq!(a[1].pass, b[1].pass);
    }

    // Entries carry their inputs: margin = rhs / lhs, pass iff margin >= required.
    #[test]
    fn entries_are_self_consistent(
        n in 500usize..5000,
        r in 3usize..20,
        p in 0.01f64..0.9,
        w in prop::collection::vec(0.1f64..1.0, 2..50),
    ) {
        let model = EdgeProbabilityModel::homogeneous(n, p).unwrap();
        let c: Vec<usize> = (0..r).collect();
        let mut entries = audit_assumption_1_1(&model, &c, 0.2, 0.3, 10.0).unwrap();
        entries.extend(audit_assumption_1_2(&model, &c, 10.0).unwrap());
        entries.push(audit_assumption_3(&w, n, r, 10.0).unwrap());
        for e in entries {
            let margin = if e.lhs == 0.0 { f64::INFINITY } else { e.rhs / e.lhs };
            prop_assert!((e.margin - margin).abs() <= 1e-12 * margin.abs().max(1.0) || e.margin == margin);
            prop_assert_eq!(e.pass, e.margin >= e.required);
        }
    }
}
