use sqg_core::stats::RunningMoments;
use sqg_core::{NoiseSpec, RngStream};

const DRAWS: usize = 10_000;

#[test]
fn increment_energy_matches_dt_a0() {
    let noise = NoiseSpec::default_for_cutoff(8);
    let dt = 0.01;
    let mut rng = RngStream::new(11, 0);
    let m: RunningMoments = (0..DRAWS)
        .map(|_| noise.sample_increment(dt, &mut rng, 8).unwrap().l2_sq())
        .collect();
    let target = dt * noise.spectral_sum(0.0);
    assert!((m.mean() - target).abs() <= 3.0 * m.std_error(), "{} vs {target} (se {})", m.mean(), m.std_error());
}

#[test]
fn increments_have_zero_mean() {
    let noise = NoiseSpec::default_for_cutoff(4);
    let mut rng = RngStream::new(5, 3);
    let mut per_fn = vec![RunningMoments::new(); noise.forced_count()];
    for _ in 0..DRAWS {
        let inc = noise.sample_increment(1.0, &mut rng, 4).unwrap();
        for (m, (e, _)) in per_fn.iter_mut().zip(noise.iter()) {
            m.push(e.project(&inc));
        }
    }
    let failures = per_fn.iter().filter(|m| m.mean().abs() > 3.0 * m.std_error()).count();
    // 3 SE is two-sided 99.7%; allow the odd outlier among many components
    assert!(failures <= 1 + per_fn.len() / 100, "{failures} of {} components off zero", per_fn.len());
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let noise = NoiseSpec::default_for_cutoff(4);
    let (mut a, mut b) = (RngStream::new(9, 0), RngStream::new(9, 1));
    let e = noise.basis().entries()[0];
    let mut prod = RunningMoments::new();
    let (mut ma, mut mb) = (RunningMoments::new(), RunningMoments::new());
    for _ in 0..DRAWS {
        let x = e.project(&noise.sample_increment(1.0, &mut a, 4).unwrap());
        let y = e.project(&noise.sample_increment(1.0, &mut b, 4).unwrap());
        prod.push(x * y);
        ma.push(x);
        mb.push(y);
    }
    let cov = prod.mean() - ma.mean() * mb.mean();
    let rho = cov / (ma.variance() * mb.variance()).sqrt();
    assert!(rho.abs() <= 3.0 / (DRAWS as f64).sqrt(), "correlation {rho}");
}
