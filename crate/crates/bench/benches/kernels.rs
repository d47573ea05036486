use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqg_core::{Grid, GridSpec, InitialCondition, NoiseSpec, SimConfig, SpectralField, Stepper};

const CUTOFFS: [usize; 3] = [32, 64, 128];

fn field(n: usize) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    SpectralField::random_band_limited(n, n as f64 / 2.0, 1.0, 1.0, &mut rng)
}

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("transform_round_trip");
    for n in CUTOFFS {
        let grid = Grid::new(GridSpec::new(n, 2).unwrap());
        let f = field(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| grid.to_spectral(&grid.to_physical(black_box(&f)).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn tendencies(c: &mut Criterion) {
    let mut g = c.benchmark_group("tendency");
    for n in CUTOFFS {
        let grid = Grid::new(GridSpec::new(n, 2).unwrap());
        let f = field(n);
        g.bench_with_input(BenchmarkId::new("advection", n), &n, |b, _| {
            b.iter(|| grid.advection_term(black_box(&f)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("p_laplacian", n), &n, |b, _| {
            b.iter(|| grid.p_laplacian_term(black_box(&f)).unwrap())
        });
    }
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    for (name, alpha) in [("heun", 0.1), ("rk4", 0.0)] {
        for n in [32, 64] {
            let cfg = SimConfig { alpha, dt: 1e-3, horizon: 1.0, cutoff: n, ..Default::default() };
            let stepper = Stepper::new(&cfg, NoiseSpec::default_for_cutoff(n)).unwrap();
            let ic = InitialCondition::RandomBandLimited { kmax: 8.0, slope: 1.0, l2: 1.0 };
            let state = stepper.initial_state(&ic, 0).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter_batched_ref(
                    || state.clone(),
                    |s| stepper.step(s).unwrap(),
                    criterion::BatchSize::SmallInput,
                )
            });
        }
    }
    g.finish();
}

criterion_group!(benches, transforms, tendencies, steps);
criterion_main!(benches);
