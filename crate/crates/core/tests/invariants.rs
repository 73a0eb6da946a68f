use hlmax_core::bodies::make_qball;
use hlmax_core::lattice::{discrete_average, discrete_maximal, enumerate_ball, LatticeFunction};
use hlmax_core::multipliers::dyadic_symbol_sum;
use proptest::prelude::*;

fn sparse(d: usize) -> impl Strategy<Value = LatticeFunction> {
    prop::collection::vec((prop::collection::vec(-6i64..=6, d), 0.0f64..5.0), 1..8).prop_map(move |atoms| {
        let mut f = LatticeFunction::new(d);
        for (at, v) in atoms {
            f.add(&at, v);
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cube_count_is_a_power(d in 1usize..=3, n in 0u32..=6) {
        let count = enumerate_ball(d, n as f64, f64::INFINITY).unwrap().count;
        prop_assert_eq!(count, (2 * n as u64 + 1).pow(d as u32));
    }

    #[test]
    fn counts_grow_with_q(d in 1usize..=3, n in 1.0f64..6.0) {
        let c1 = enumerate_ball(d, n, 1.0).unwrap().count;
        let c2 = enumerate_ball(d, n, 2.0).unwrap().count;
        let ci = enumerate_ball(d, n, f64::INFINITY).unwrap().count;
        prop_assert!(c1 <= c2 && c2 <= ci);
    }

    #[test]
    fn average_keeps_mass_and_bounds(f in sparse(2), t in 0.5f64..3.0, q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let body = make_qball(2, q).unwrap();
        let a = discrete_average(&f, &body, t).unwrap();
        prop_assert!((a.sum() - f.sum()).abs() <= 1e-9 * (1.0 + f.sum()));
        prop_assert!(a.lp_norm(f64::INFINITY) <= f.lp_norm(f64::INFINITY) + 1e-12);
        prop_assert!(a.iter().all(|(_, v)| *v >= -1e-12));
    }

    #[test]
    fn maximal_dominates_each_average(f in sparse(1), ts in prop::collection::vec(0.5f64..4.0, 1..4)) {
        let body = make_qball(1, 2.0).unwrap();
        let m = discrete_maximal(&f, &body, &ts).unwrap();
        for &t in &ts {
            let a = discrete_average(&f, &body, t).unwrap();
            for (x, v) in a.iter() {
                prop_assert!(m.get(x) >= v - 1e-12);
            }
        }
    }

    #[test]
    fn symbol_sum_is_dilation_invariant(e in -20.0f64..20.0) {
        let a = 2f64.powf(e);
        let s = dyadic_symbol_sum(a).unwrap().value;
        let s2 = dyadic_symbol_sum(2.0 * a).unwrap().value;
        prop_assert!((s - s2).abs() <= 1e-12);
        prop_assert!(s <= 3.0 + 1e-12 && s > 0.0);
    }
}
