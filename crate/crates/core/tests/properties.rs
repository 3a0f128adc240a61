use proptest::prelude::*;
use rand::Rng;

use sch_core::dynamics::h1_pairing_residual;
use sch_core::ensemble::energy_distance;
use sch_core::noise::BrownianDriver;
use sch_core::rng::counter_rng;
use sch_core::spectral::{
    forward_transform, inverse_transform, random_band_limited, sobolev_norm_sq, GridFunction, TorusGrid,
};

fn grid_size() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![8usize, 12, 16, 32, 48, 64])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_round_trip(n in grid_size(), seed in any::<u64>()) {
        let g = TorusGrid::<f64>::new(n).unwrap();
        let mut rng = counter_rng(seed, 0, 0);
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let back = inverse_transform(&g, &forward_transform(&g, &vals).unwrap());
        for (a, b) in vals.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn parseval_and_norm_order(n in grid_size(), seed in any::<u64>(), s in 0.5f64..4.0) {
        let g = TorusGrid::<f64>::new(n).unwrap();
        let mut rng = counter_rng(seed, 1, 0);
        let u = random_band_limited(&g, (n / 3) as i64, 1.0, true, &mut rng);
        let l2 = u.values().iter().map(|v| v * v).sum::<f64>() * std::f64::consts::TAU / n as f64;
        let l2_spec = sobolev_norm_sq(0.0, &u);
        prop_assert!((l2 - l2_spec).abs() <= 1e-10 * l2.max(1.0));
        prop_assert!(sobolev_norm_sq(s, &u) >= l2_spec * (1.0 - 1e-12));
    }

    #[test]
    fn h1_pairing_vanishes(n in prop::sample::select(vec![32usize, 64, 128]), seed in any::<u64>()) {
        let g = TorusGrid::<f64>::new(n).unwrap();
        let mut rng = counter_rng(seed, 2, 0);
        let u = random_band_limited(&g, g.dealias_cutoff(), 0.5, true, &mut rng);
        let norm = sobolev_norm_sq(1.0, &u).sqrt();
        prop_assert!(h1_pairing_residual(&u, true).abs() <= 1e-10 * norm.powi(3));
    }

    #[test]
    fn coarsened_driver_sums_fine_increments(seed in any::<u64>(), factor in 1u32..8, step in 0i64..1000) {
        let fine = BrownianDriver::new(seed, 2, 3, 1e-3).unwrap();
        let coarse = fine.coarsened(factor);
        let got = coarse.sample_increments(step);
        let mut want = vec![0.0; got.len()];
        for j in 0..factor as i64 {
            for (w, x) in want.iter_mut().zip(fine.sample_increments(step * factor as i64 + j)) {
                *w += x;
            }
        }
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        prop_assert_eq!(coarse.dt(), 1e-3 * factor as f64);
    }

    #[test]
    fn energy_distance_is_symmetric_and_nonnegative(
        a in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..12),
        b in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..12),
    ) {
        let ab = energy_distance(&a, &b, 0, 0).unwrap().distance;
        let ba = energy_distance(&b, &a, 0, 0).unwrap().distance;
        prop_assert!(ab >= -1e-12);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        prop_assert_eq!(energy_distance(&a, &a, 0, 0).unwrap().distance, 0.0);
    }

    #[test]
    fn constants_have_zero_derivative_energy(n in grid_size(), c in -10.0f64..10.0) {
        let g = TorusGrid::<f64>::new(n).unwrap();
        let u = GridFunction::constant(&g, c);
        let h1 = sobolev_norm_sq(1.0, &u);
        let l2 = sobolev_norm_sq(0.0, &u);
        prop_assert!((h1 - l2).abs() <= 1e-12 * l2.max(1.0));
    }
}
