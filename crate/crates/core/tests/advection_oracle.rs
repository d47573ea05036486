use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqg_core::{Grid, GridSpec, RealField, SpectralField};

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coefficients().iter().zip(b.coefficients()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn two_mode_closed_form() {
    let n = 6;
    let grid = Grid::new(GridSpec::dealiased(n).unwrap());
    let theta = grid.to_spectral(&RealField::from_fn(grid.len(), |x, y| x.cos() + (2.0 * y).cos())).unwrap();
    let expect = grid.to_spectral(&RealField::from_fn(grid.len(), |x, y| x.sin() * (2.0 * y).sin())).unwrap();
    let got = grid.advection_term(&theta).unwrap();
    assert!(max_diff(&got, &expect) < 1e-14);
    assert!((expect.get(sqg_core::WaveVector::new(1, 2)) - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
}

#[test]
fn projection_of_fine_result_matches_cutoff_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [8usize, 12] {
        let coarse = Grid::new(GridSpec::dealiased(n).unwrap());
        let fine = Grid::new(GridSpec::dealiased(4 * n).unwrap());
        let theta = SpectralField::random_band_limited(n, n as f64, 1.0, 3.0, &mut rng);
        let direct = coarse.advection_term(&theta).unwrap();
        let oracle = fine.advection_term(&theta.resized(4 * n)).unwrap().resized(n);
        assert!(max_diff(&direct, &oracle) < 1e-10, "N = {n}: {}", max_diff(&direct, &oracle));
        let direct = coarse.p_laplacian_term(&theta).unwrap();
        let oracle = fine.p_laplacian_term(&theta.resized(4 * n)).unwrap().resized(n);
        assert!(max_diff(&direct, &oracle) < 1e-10 * direct.l2_sq().sqrt().max(1.0));
    }
}
