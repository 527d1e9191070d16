//! Randomized property tests over the algebraic identities the library
//! relies on; complements the fixed-oracle acceptance suite.

use proptest::prelude::*;

use ruelle::alphabet::{make_circle_alphabet, make_finite_alphabet};
use ruelle::correlation;
use ruelle::potential::{seq_metric, Potential};
use ruelle::transfer::TransferOperator;

fn table_potential(table: Vec<f64>, symbols: usize) -> Potential {
    Potential::new(2, 0.5, 8.0, "prop-table", move |x: &[&[f64]]| {
        table[(x[0][0] as usize) * symbols + x[1][0] as usize]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_normalized(nodes in 2usize..40) {
        let a = make_circle_alphabet(nodes).unwrap();
        let total = a.rule.integrate(|_| 1.0);
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seq_metric_triangle(seed in 0u64..1000) {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let a = make_finite_alphabet(4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
            (0..5).map(|_| rng.gen_range(0..4)).collect()
        };
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let d = |p: &[usize], q: &[usize]| seq_metric(&a, p, q, 5).unwrap().0;
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-15);
    }

    #[test]
    fn pressure_shift_identity(
        table in proptest::collection::vec(-1.0f64..1.0, 4),
        c in -0.5f64..0.5,
    ) {
        let a = make_finite_alphabet(2).unwrap();
        let f = table_potential(table, 2);
        let op = TransferOperator::new(&a, &f).unwrap();
        let op_c = TransferOperator::new(&a, &f.shifted(c)).unwrap();
        let p = op.power_iteration(1e-13, 100_000).unwrap().log_lambda;
        let p_c = op_c.power_iteration(1e-13, 100_000).unwrap().log_lambda;
        prop_assert!((p_c - p - c).abs() < 1e-10);
    }

    #[test]
    fn eigendata_normalization(table in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let a = make_finite_alphabet(3).unwrap();
        let op = TransferOperator::new(&a, &table_potential(table, 3)).unwrap();
        let eig = op.power_iteration(1e-13, 100_000).unwrap();
        let pairing: f64 = eig.h.values.iter().zip(&eig.nu).map(|(h, n)| h * n).sum();
        prop_assert!((pairing - 1.0).abs() < 1e-11);
        prop_assert!(eig.h.values.iter().all(|v| *v > 0.0));
        prop_assert!(eig.nu.iter().all(|v| *v >= 0.0));
        prop_assert!(eig.gap_ratio < 1.0);
    }

    #[test]
    fn decay_fit_recovers_geometric(
        k in 0.1f64..5.0,
        tau in 0.05f64..0.9,
    ) {
        let values: Vec<f64> = (0..15).map(|n| k * tau.powi(n)).collect();
        let (k_hat, tau_hat, residual) = correlation::decay_fit(&values).unwrap();
        prop_assert!((tau_hat - tau).abs() < 1e-8);
        prop_assert!((k_hat - k).abs() / k < 1e-6);
        prop_assert!(residual < 1e-8);
    }
}
