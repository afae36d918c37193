use fracheat_core::evolution::heat_kernel;
use fracheat_core::*;
use proptest::prelude::*;

fn params() -> FractionalParams {
    FractionalParams::new(1, 0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplier_is_symmetric(d in 1usize..=3, s in 0.1f64..0.9, t in 0.02f64..0.98) {
        let alpha = s * (d as f64).min(2.0);
        let p = FractionalParams::new(d, alpha).unwrap();
        let top = d as f64 - alpha;
        let beta = t * top;
        let a = multiplier(beta, p).unwrap();
        let b = multiplier(top - beta, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
    }

    #[test]
    fn multiplier_increases_below_beta_star(s in 0.1f64..0.9, t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        prop_assume!((t1 - t2).abs() > 1e-3);
        let p = FractionalParams::new(1, s).unwrap();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let bs = p.beta_star();
        prop_assert!(multiplier(lo * bs, p).unwrap() < multiplier(hi * bs, p).unwrap());
    }

    #[test]
    fn beta_round_trip(d in 1usize..=3, s in 0.1f64..0.9, t in 0.01f64..1.0) {
        let p = FractionalParams::new(d, s * (d as f64).min(2.0)).unwrap();
        let c = t * hardy_constant(p).unwrap();
        let beta = beta_of_c(c, p).unwrap();
        prop_assert!(beta > 0.0 && beta <= p.beta_star() + 1e-15);
        let back = multiplier(beta, p).unwrap();
        prop_assert!((back - c).abs() <= 1e-10 * hardy_constant(p).unwrap());
    }

    #[test]
    fn forms_are_nonnegative(seed in 0u64..1000, half in 5usize..40) {
        let g = build_grid(Domain::interval(-1.0, 1.0), 1.0 / half as f64).unwrap();
        let op = assemble_operator(&g, params(), 0.0, f64::INFINITY).unwrap();
        let f: Vec<f64> = (0..op.len()).map(|i| (((i as u64 + 1) * (seed + 7)) % 17) as f64 - 8.0).collect();
        let v = FormEvaluator::plain(&op).value(&f, FormVariant::Plain).unwrap();
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn jump_weights_symmetric_and_positive(lo in 1usize..6, hi in 1usize..6, cells in 2usize..8) {
        let h = 1.0 / cells as f64;
        let g = build_grid(Domain::interval(-(lo as f64), hi as f64), h).unwrap();
        let op = assemble_operator(&g, params(), 0.05, f64::INFINITY).unwrap();
        for i in 0..op.len() {
            for j in 0..op.len() {
                prop_assert_eq!(op.jump(i, j), op.jump(j, i));
                if i != j {
                    prop_assert!(op.jump(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn kernels_are_positive_and_symmetric(t in 0.01f64..2.0, frac in 0.0f64..1.0) {
        let g = build_grid(Domain::interval(-1.0, 1.0), 0.05).unwrap();
        let cs = hardy_constant(params()).unwrap();
        let op = assemble_operator(&g, params(), frac * cs, f64::INFINITY).unwrap();
        let k = heat_kernel(&op, t).unwrap();
        prop_assert!(k.asymmetry() <= 1e-10);
        prop_assert!(k.entries.iter().all(|v| *v > 0.0));
    }
}
