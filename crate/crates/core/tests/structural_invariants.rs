use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqg_core::functionals::casimir_family;
use sqg_core::measure::casimir_gram;
use sqg_core::{Grid, GridSpec, NoiseSpec, SpectralField};

const N: usize = 12;

fn field(seed: u64, kmax: f64, slope: f64, l2: f64) -> SpectralField {
    SpectralField::random_band_limited(N, kmax, slope, l2, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transport_and_dissipation_identities(seed in any::<u64>(), kmax in 2.0f64..12.0, slope in 0.0f64..2.0, l2 in 0.1f64..4.0) {
        let grid = Grid::new(GridSpec::dealiased(N).unwrap());
        let theta = field(seed, kmax, slope, l2);
        prop_assert!(theta.hermitian_defect() == 0.0);

        let (u1, u2) = theta.riesz_velocity();
        prop_assert!(SpectralField::divergence(&u1, &u2).l2_sq() < 1e-28);

        let adv = grid.advection_term(&theta).unwrap();
        let norm = theta.l2_sq();
        prop_assert!(theta.inner(&adv).abs() <= 1e-12 * norm);
        prop_assert!(theta.fractional_laplacian(-0.5).inner(&adv).abs() <= 1e-12 * norm);

        let lap4 = grid.p_laplacian_term(&theta).unwrap();
        let w = grid.grad_l4_4(&theta).unwrap();
        prop_assert!((lap4.inner(&theta) + w).abs() <= 1e-10 * w.max(1.0));
    }

    #[test]
    fn casimir_gram_is_psd(seed in any::<u64>(), amp in 0.05f64..1.5) {
        let grid = Grid::new(GridSpec::dealiased(N).unwrap());
        let theta = field(seed, 4.0, 1.0, amp);
        let noise = NoiseSpec::default_for_cutoff(N);
        let g = casimir_gram(&theta, &casimir_family(3), &noise, &grid).unwrap();
        let top = g.eigenvalues.iter().cloned().fold(0.0, f64::max);
        prop_assert!(g.eigenvalues.iter().all(|&l| l >= -1e-12 * top.max(1e-300)));
        prop_assert!((g.matrix.clone() - g.matrix.transpose()).norm() <= 1e-14 * g.matrix.norm());
    }
}
