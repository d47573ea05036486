use sqg_core::functionals::{dissipation_i, h2_dissipation};
use sqg_core::stats::{batch_means, batch_se, Estimate};
use sqg_core::{InitialCondition, NoiseScheme, NoiseSpec, SimConfig, Stepper};

fn linear_config(noise_scheme: NoiseScheme) -> SimConfig {
    SimConfig {
        alpha: 1.0,
        dt: 0.01,
        horizon: 200.0,
        cutoff: 4,
        enable_advection: false,
        enable_p_laplacian: false,
        noise_scheme,
        seed: 21,
        ..Default::default()
    }
}

fn estimate(samples: &[f64]) -> Estimate {
    let batches = batch_means(samples, 20);
    Estimate { mean: samples.iter().sum::<f64>() / samples.len() as f64, se: batch_se(&batches), count: samples.len() as u64 }
}

#[test]
fn stationary_ou_moments() {
    let cfg = linear_config(NoiseScheme::Exponential);
    let noise = NoiseSpec::default_for_cutoff(cfg.cutoff);
    let stepper = Stepper::new(&cfg, noise.clone()).unwrap();
    let mut state = stepper.initial_state(&InitialCondition::LinearStationary, 0).unwrap();
    let m = noise.forced_count();
    let mut proj = vec![Vec::new(); m];
    let (mut h2, mut i_diss) = (Vec::new(), Vec::new());
    for _ in 0..cfg.steps() {
        stepper.step(&mut state).unwrap();
        for (p, (e, _)) in proj.iter_mut().zip(noise.iter()) {
            p.push(e.project(&state.field).powi(2));
        }
        h2.push(h2_dissipation(&state.field));
        i_diss.push(dissipation_i(&state.field, stepper.grid()).unwrap().derived());
    }
    let mut outside = 0;
    for (p, (e, a)) in proj.iter().zip(noise.iter()) {
        if !estimate(p).within(a * a / (2.0 * e.lambda * e.lambda), 3.0) {
            outside += 1;
        }
    }
    assert!(outside <= 1, "{outside} of {m} modes outside 3 SE");
    let a0 = noise.spectral_sum(0.0);
    let est = estimate(&h2);
    assert!(est.within(a0 / 2.0, 3.0), "{est:?} vs {}", a0 / 2.0);
    let amh = noise.spectral_sum(-0.5);
    let est = estimate(&i_diss);
    assert!(est.within(amh / 2.0, 3.0), "{est:?} vs {}", amh / 2.0);
}

#[test]
fn euler_maruyama_and_exponential_share_the_drift() {
    let noise = NoiseSpec::silent();
    let a = Stepper::new(&linear_config(NoiseScheme::EulerMaruyama), noise.clone()).unwrap();
    let b = Stepper::new(&linear_config(NoiseScheme::Exponential), noise).unwrap();
    let ic = InitialCondition::RandomBandLimited { kmax: 4.0, slope: 0.0, l2: 1.0 };
    let (mut sa, mut sb) = (a.initial_state(&ic, 0).unwrap(), b.initial_state(&ic, 0).unwrap());
    for _ in 0..50 {
        a.step(&mut sa).unwrap();
        b.step(&mut sb).unwrap();
    }
    assert_eq!(sa.field, sb.field);
}
