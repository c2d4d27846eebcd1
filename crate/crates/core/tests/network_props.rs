mod common;

use graddiv::network::{forward_vec, ActivationKind, NetworkShape, WeightStack};
use graddiv::numerics::SeedKey;
use proptest::prelude::*;

const ALL: [ActivationKind; 5] = [
    ActivationKind::Linear,
    ActivationKind::Tanh,
    ActivationKind::Softsign,
    ActivationKind::Arctan,
    ActivationKind::Relu,
];

#[test]
fn backprop_matches_finite_differences() {
    for act in ALL {
        let key = SeedKey::new(11).named(act.name());
        let worst = (0..100).map(|i| common::fd_check(act, key.child(i))).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{act}: worst relative error {worst:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_net_collapses_to_product(seed in any::<u64>(), widths in prop::collection::vec(1usize..6, 2..6)) {
        let shape = NetworkShape::new(widths, ActivationKind::Linear).unwrap();
        let w = WeightStack::sample_gaussian(&shape, SeedKey::new(seed));
        let x: Vec<f64> = common::random_gradients(1, shape.input_dim(), SeedKey::new(seed).named("x")).remove(0);
        let out = forward_vec(&w, &x).unwrap();
        let collapsed = w.product().matvec(&x).unwrap();
        let scale = collapsed.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (a, b) in out.iter().zip(&collapsed) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn bounded_odd_activations(x in -100.0f64..100.0) {
        for act in ActivationKind::BOUNDED_ODD {
            prop_assert!((act.value(-x) + act.value(x)).abs() <= 1e-12);
            prop_assert!(act.value(x).abs() <= act.c_max().unwrap());
        }
    }
}
