use proptest::prelude::*;
use scanstat::entropy::{entropy_h, entropy_h_inverse, kl_bernoulli, KernelTolerance};

proptest! {
    #[test]
    fn h_is_strictly_increasing(a in 0.0f64..1e3, b in 0.0f64..1e3) {
        prop_assume!((a - b).abs() > 1e-9 * a.max(b).max(1.0));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(entropy_h(lo).unwrap() < entropy_h(hi).unwrap());
    }

    #[test]
    fn inverse_round_trip(y in 0.0f64..100.0) {
        let x = entropy_h_inverse(y, KernelTolerance::default()).unwrap();
        prop_assert!((entropy_h(x).unwrap() - y).abs() <= 1e-10);
    }

    #[test]
    fn quadratic_near_zero(x in -0.05f64..0.05) {
        prop_assume!(x != 0.0);
        prop_assert!((entropy_h(x).unwrap() / (x * x / 2.0) - 1.0).abs() <= 0.1);
    }

    #[test]
    fn x_log_x_far_out(x in 1e4f64..1e12) {
        prop_assert!((entropy_h(x - 1.0).unwrap() / (x * x.ln()) - 1.0).abs() <= 0.05);
    }

    #[test]
    fn kl_matches_entropy_form(p in 1e-4f64..0.5, q in 1e-4f64..0.5) {
        prop_assume!(p < q);
        let kl = kl_bernoulli(p, q).unwrap();
        let approx = p * entropy_h(q / p - 1.0).unwrap();
        prop_assert!((kl / approx - 1.0).abs() <= 10.0 * (p + q), "kl {} entropy form {}", kl, approx);
    }
}
