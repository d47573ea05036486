//! Time stepping for the Galerkin stochastic SQG system and ensemble runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SqgError};
use crate::forcing::{BasisFunction, NoiseSpec, RngStream};
use crate::functionals::ObservableSet;
use crate::spectral::{Grid, GridSpec, SpectralField};
use crate::stats::RunningMoments;

/// Explicit scheme wrapped around the exact hyperdiffusion factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExplicitScheme {
    /// RK4 when `α = 0`, Heun otherwise.
    #[default]
    Auto,
    Heun,
    Rk4,
}

/// Discretization of the stochastic convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseScheme {
    /// `√α ΔW` added after the integrating factor.
    EulerMaruyama,
    /// Exact variance of `√α ∫ e^{−αλ²(t−s)} dW_s` over one step.
    #[default]
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cutoff: usize,
    pub padding: usize,
    pub enable_advection: bool,
    pub enable_p_laplacian: bool,
    pub explicit_scheme: ExplicitScheme,
    pub noise_scheme: NoiseScheme,
    pub seed: u64,
    pub ensemble_size: usize,
    /// Observables are recorded every this many steps.
    pub observe_every: u64,
    /// Debug mode: every ensemble member uses stream 0.
    pub identical_streams: bool,
    pub cfl_limit: f64,
    /// Track the advective CFL number at each observation.
    pub monitor_cfl: bool,
    pub blowup_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            dt: 1e-3,
            horizon: 1.0,
            cutoff: 32,
            padding: 2,
            enable_advection: true,
            enable_p_laplacian: true,
            explicit_scheme: ExplicitScheme::Auto,
            noise_scheme: NoiseScheme::Exponential,
            seed: 0,
            ensemble_size: 1,
            observe_every: 1,
            identical_streams: false,
            cfl_limit: 0.5,
            monitor_cfl: true,
            blowup_factor: 1e6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SqgError::Configuration(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be >= 0, got {}", self.horizon));
        }
        if self.cutoff == 0 {
            return bad("cutoff must be positive".into());
        }
        if self.padding < 2 {
            return Err(SqgError::Aliasing { padding: self.padding });
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1".into());
        }
        if self.observe_every == 0 {
            return bad("observe_every must be at least 1".into());
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(self.dt) {
            return bad(format!("horizon {} is not a multiple of dt {}", self.horizon, self.dt));
        }
        if n as u64 % self.observe_every != 0 {
            return bad(format!(
                "observe_every {} does not divide the {} steps of the horizon",
                self.observe_every, n as u64
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.cutoff, self.padding)
    }

    fn resolved_scheme(&self) -> ExplicitScheme {
        match self.explicit_scheme {
            ExplicitScheme::Auto if self.alpha == 0.0 => ExplicitScheme::Rk4,
            ExplicitScheme::Auto => ExplicitScheme::Heun,
            s => s,
        }
    }

    /// `dt·α·N⁴`.
    pub fn hyperdiffusion_number(&self) -> f64 {
        self.dt * self.alpha * (self.cutoff as f64).powi(4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub time: f64,
    pub step: u64,
    pub field: SpectralField,
    pub rng: RngStream,
}

/// Noise contributions to the squared norms over one step, minus their
/// expectation; summing these gives a mean-zero martingale.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub martingale_l2: f64,
    pub martingale_hm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMonitors {
    /// `dt·N·max|u|`
    pub cfl: f64,
    /// `α·dt·‖∇θ‖²_∞·N²`
    pub p_laplacian_stiffness: f64,
    /// `dt·α·N⁴`
    pub hyperdiffusion: f64,
}

/// How the initial field is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    Field(SpectralField),
    /// Gaussian modes on `|k| ≤ kmax` with `|k|^{−slope}` amplitudes, scaled to
    /// `∫θ² = l2`.
    RandomBandLimited { kmax: f64, slope: f64, l2: f64 },
    /// Stationary law of the linear (forcing + hyperdiffusion) subsystem.
    LinearStationary,
}

const IC_SEED_SALT: u64 = 0x5147_495f_4943_0001;

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SimConfig,
    scheme: ExplicitScheme,
    grid: Grid,
    noise: NoiseSpec,
    decay: Vec<f64>,
    half_decay: Vec<f64>,
    hm_weights: Vec<f64>,
    expected_l2: f64,
    expected_hm: f64,
}

impl Stepper {
    pub fn new(cfg: &SimConfig, noise: NoiseSpec) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid::new(cfg.grid_spec()?);
        if noise.basis().max_sup_norm() as usize > cfg.cutoff {
            return Err(SqgError::Dimension(format!(
                "forcing reaches |k|∞ = {} beyond cutoff {}",
                noise.basis().max_sup_norm(),
                cfg.cutoff
            )));
        }
        let a = cfg.alpha;
        let dt = cfg.dt;
        let decay = SpectralField::lattice_table(cfg.cutoff, |k| (-a * (k.norm_sq() as f64).powi(2) * dt).exp());
        let half_decay =
            SpectralField::lattice_table(cfg.cutoff, |k| (-0.5 * a * (k.norm_sq() as f64).powi(2) * dt).exp());
        let hm_weights =
            SpectralField::lattice_table(cfg.cutoff, |k| if k.is_zero() { 0.0 } else { 1.0 / k.norm() });
        let mut stepper = Self {
            cfg: cfg.clone(),
            scheme: cfg.resolved_scheme(),
            grid,
            noise,
            decay,
            half_decay,
            hm_weights,
            expected_l2: 0.0,
            expected_hm: 0.0,
        };
        let (el2, ehm) = stepper
            .noise
            .iter()
            .map(|(e, amp)| {
                let v = (amp * stepper.noise_sd(e)).powi(2);
                (v, v / e.lambda.sqrt())
            })
            .fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
        stepper.expected_l2 = el2;
        stepper.expected_hm = ehm;
        Ok(stepper)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Per-function standard deviation of the noise added in one step
    /// (before multiplying by `a_j`).
    fn noise_sd(&self, e: &BasisFunction) -> f64 {
        let a = self.cfg.alpha;
        let dt = self.cfg.dt;
        match self.cfg.noise_scheme {
            NoiseScheme::EulerMaruyama => (a * dt).sqrt(),
            NoiseScheme::Exponential => {
                let r = a * e.lambda * e.lambda;
                if r == 0.0 {
                    (a * dt).sqrt()
                } else {
                    (a * -(-2.0 * r * dt).exp_m1() / (2.0 * r)).sqrt()
                }
            }
        }
    }

    fn tendency(&self, field: &SpectralField) -> Result<SpectralField> {
        self.grid.sqg_tendency(field, self.cfg.alpha, self.cfg.enable_advection, self.cfg.enable_p_laplacian)
    }

    fn has_tendency(&self) -> bool {
        self.cfg.enable_advection || (self.cfg.enable_p_laplacian && self.cfg.alpha != 0.0)
    }

    /// Deterministic part of one step.
    fn drift_step(&self, theta: &SpectralField) -> Result<SpectralField> {
        let dt = self.cfg.dt;
        let linear = self.cfg.alpha != 0.0;
        let with = |f: &SpectralField, w: &[f64]| {
            let mut g = f.clone();
            if linear {
                g.scale_by(w);
            }
            g
        };
        if !self.has_tendency() {
            return Ok(with(theta, &self.decay));
        }
        match self.scheme {
            ExplicitScheme::Heun | ExplicitScheme::Auto => {
                let n0 = self.tendency(theta)?;
                let mut pred = theta.clone();
                pred.axpy(dt, &n0);
                let pred = with(&pred, &self.decay);
                let n1 = self.tendency(&pred)?;
                let mut out = theta.clone();
                out.axpy(0.5 * dt, &n0);
                let mut out = with(&out, &self.decay);
                out.axpy(0.5 * dt, &n1);
                Ok(out)
            }
            ExplicitScheme::Rk4 => {
                let k1 = self.tendency(theta)?;
                let mut a = theta.clone();
                a.axpy(0.5 * dt, &k1);
                let a = with(&a, &self.half_decay);
                let k2 = self.tendency(&a)?;
                let mut b = with(theta, &self.half_decay);
                b.axpy(0.5 * dt, &k2);
                let k3 = self.tendency(&b)?;
                let mut c = with(theta, &self.decay);
                c.axpy(dt, &with(&k3, &self.half_decay));
                let k4 = self.tendency(&c)?;
                let mut out = theta.clone();
                out.axpy(dt / 6.0, &k1);
                let mut out = with(&out, &self.decay);
                let mut mid = k2;
                mid.add_assign(&k3);
                out.axpy(dt / 3.0, &with(&mid, &self.half_decay));
                out.axpy(dt / 6.0, &k4);
                Ok(out)
            }
        }
    }

    /// Advances `state` by one step. On error the state is left untouched.
    pub fn step(&self, state: &mut StepperState) -> Result<StepReport> {
        let drift = self.drift_step(&state.field)?;
        let mut rng = state.rng.clone();
        let mut report = StepReport::default();
        let next = if self.cfg.alpha > 0.0 && !self.noise.is_silent() {
            let eta = self.noise.sample_scaled(&mut rng, self.cfg.cutoff, |e| self.noise_sd(e))?;
            report.martingale_l2 = 2.0 * drift.inner(&eta) + eta.l2_sq() - self.expected_l2;
            report.martingale_hm = 2.0 * drift.weighted_inner(&eta, &self.hm_weights)
                + eta.weighted_energy(&self.hm_weights)
                - self.expected_hm;
            let mut next = drift;
            next.add_assign(&eta);
            next
        } else {
            drift
        };
        let step = state.step + 1;
        let time = step as f64 * self.cfg.dt;
        if !next.is_finite() {
            return Err(SqgError::Divergence { time, reason: "non-finite coefficients".into() });
        }
        state.field = next;
        state.rng = rng;
        state.step = step;
        state.time = time;
        Ok(report)
    }

    pub fn monitors(&self, field: &SpectralField) -> Result<StepMonitors> {
        let kin = self.grid.kinematics(field, true)?;
        let u1 = kin.u1.as_ref().expect("velocity requested");
        let u2 = kin.u2.as_ref().expect("velocity requested");
        let umax = u1
            .samples()
            .iter()
            .zip(u2.samples())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max);
        let gmax = kin
            .tx
            .samples()
            .iter()
            .zip(kin.ty.samples())
            .map(|(a, b)| a * a + b * b)
            .fold(0.0, f64::max);
        let n = self.cfg.cutoff as f64;
        Ok(StepMonitors {
            cfl: self.cfg.dt * n * umax,
            p_laplacian_stiffness: self.cfg.alpha * self.cfg.dt * gmax * n * n,
            hyperdiffusion: self.cfg.hyperdiffusion_number(),
        })
    }

    /// Initial state on noise stream `stream`.
    pub fn initial_state(&self, ic: &InitialCondition, stream: u64) -> Result<StepperState> {
        let n = self.cfg.cutoff;
        let mut ic_rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ IC_SEED_SALT);
        ic_rng.set_stream(stream);
        let field = match ic {
            InitialCondition::Zero => SpectralField::zeros(n),
            InitialCondition::Field(f) => {
                if f.cutoff() != n {
                    return Err(SqgError::Dimension(format!(
                        "initial field cutoff {} does not match configured cutoff {n}",
                        f.cutoff()
                    )));
                }
                f.clone()
            }
            InitialCondition::RandomBandLimited { kmax, slope, l2 } => {
                SpectralField::random_band_limited(n, *kmax, *slope, *l2, &mut ic_rng)
            }
            InitialCondition::LinearStationary => {
                let mut s = RngStream::new(self.cfg.seed ^ IC_SEED_SALT, stream);
                self.noise.sample_scaled(&mut s, n, |e| 1.0 / (2f64.sqrt() * e.lambda))?
            }
        };
        Ok(StepperState { time: 0.0, step: 0, field, rng: RngStream::new(self.cfg.seed, stream) })
    }

    /// Runs `steps` steps from `state`, observing every `observe_every` steps
    /// starting with the initial state.
    pub fn run(
        &self,
        mut state: StepperState,
        steps: u64,
        observables: &ObservableSet,
    ) -> std::result::Result<Trajectory, Box<TrajectoryFailure>> {
        let stride = self.cfg.observe_every;
        let mut traj = Trajectory::new(observables.names(), self.cfg.dt * stride as f64, state.clone());
        let fail = |error: SqgError, mut traj: Trajectory, state: &StepperState| {
            traj.final_state = state.clone();
            Box::new(TrajectoryFailure { error, partial: traj })
        };
        if steps % stride != 0 {
            let e = SqgError::Configuration(format!("observe_every {stride} does not divide {steps} steps"));
            return Err(fail(e, traj, &state));
        }
        let l2_ref = state.field.l2_sq().max(1.0);
        let limit = self.cfg.blowup_factor * l2_ref;
        let (mut mart_l2, mut mart_hm) = (0.0, 0.0);
        if let Err(e) = traj.observe(&state, observables, self, mart_l2, mart_hm) {
            return Err(fail(e, traj, &state));
        }
        for i in 1..=steps {
            match self.step(&mut state) {
                Ok(r) => {
                    mart_l2 += r.martingale_l2;
                    mart_hm += r.martingale_hm;
                }
                Err(e) => return Err(fail(e, traj, &state)),
            }
            if i % stride == 0 {
                let l2 = state.field.l2_sq();
                if l2 > limit {
                    let e = SqgError::Divergence {
                        time: state.time,
                        reason: format!("∫θ² = {l2:.6e} exceeds blow-up threshold {limit:.6e}"),
                    };
                    return Err(fail(e, traj, &state));
                }
                if let Err(e) = traj.observe(&state, observables, self, mart_l2, mart_hm) {
                    return Err(fail(e, traj, &state));
                }
            }
        }
        traj.final_state = state;
        Ok(traj)
    }
}

/// Recorded observable time series of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub steps: Vec<u64>,
    /// `values[i][t]` is observable `i` at observation `t`.
    pub values: Vec<Vec<f64>>,
    /// Cumulative noise martingale in `∫θ²` at each observation.
    pub martingale_l2: Vec<f64>,
    /// Same in `‖θ‖²_{H^{−1/2}}`.
    pub martingale_hm: Vec<f64>,
    /// Running maximum of `∫θ²` at observation times.
    pub max_l2: f64,
    pub max_cfl: f64,
    /// Observations at which the CFL number exceeded `cfl_limit`.
    pub cfl_violations: u64,
    pub observation_spacing: f64,
    pub final_state: StepperState,
}

impl Trajectory {
    fn new(names: Vec<String>, spacing: f64, state: StepperState) -> Self {
        let n = names.len();
        Self {
            names,
            times: Vec::new(),
            steps: Vec::new(),
            values: vec![Vec::new(); n],
            martingale_l2: Vec::new(),
            martingale_hm: Vec::new(),
            max_l2: 0.0,
            max_cfl: 0.0,
            cfl_violations: 0,
            observation_spacing: spacing,
            final_state: state,
        }
    }

    fn observe(
        &mut self,
        state: &StepperState,
        observables: &ObservableSet,
        stepper: &Stepper,
        mart_l2: f64,
        mart_hm: f64,
    ) -> Result<()> {
        let v = observables.evaluate(&state.field)?;
        for (series, x) in self.values.iter_mut().zip(v) {
            series.push(x);
        }
        self.times.push(state.time);
        self.steps.push(state.step);
        self.martingale_l2.push(mart_l2);
        self.martingale_hm.push(mart_hm);
        self.max_l2 = self.max_l2.max(state.field.l2_sq());
        if stepper.cfg.enable_advection && stepper.cfg.monitor_cfl {
            let cfl = stepper.monitors(&state.field)?.cfl;
            self.max_cfl = self.max_cfl.max(cfl);
            if cfl > stepper.cfg.cfl_limit {
                self.cfl_violations += 1;
            }
        }
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Clone)]
pub struct TrajectoryFailure {
    pub error: SqgError,
    pub partial: Trajectory,
}

impl std::fmt::Display for TrajectoryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (last finite state at t = {})", self.error, self.partial.final_state.time)
    }
}

impl std::error::Error for TrajectoryFailure {}

/// One path from `t = 0` to the configured horizon on stream 0.
pub fn run_trajectory(
    cfg: &SimConfig,
    noise: NoiseSpec,
    ic: &InitialCondition,
    observables: &ObservableSet,
) -> std::result::Result<Trajectory, Box<TrajectoryFailure>> {
    let stepper = Stepper::new(cfg, noise).map_err(|e| early_failure(cfg, e))?;
    let state = stepper.initial_state(ic, 0).map_err(|e| early_failure(cfg, e))?;
    stepper.run(state, cfg.steps(), observables)
}

fn early_failure(cfg: &SimConfig, error: SqgError) -> Box<TrajectoryFailure> {
    let state = StepperState {
        time: 0.0,
        step: 0,
        field: SpectralField::zeros(cfg.cutoff.max(1)),
        rng: RngStream::new(cfg.seed, 0),
    };
    Box::new(TrajectoryFailure { error, partial: Trajectory::new(Vec::new(), cfg.dt, state) })
}

/// Per-time ensemble mean and standard error of each observable.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub members: usize,
}

impl EnsembleStats {
    pub fn series(&self, name: &str) -> Option<(&[f64], &[f64])> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((&self.mean[i], &self.se[i]))
    }
}

#[derive(Debug)]
pub struct EnsembleResult {
    /// In member order.
    pub members: Vec<std::result::Result<Trajectory, Box<TrajectoryFailure>>>,
    pub stats: EnsembleStats,
}

impl EnsembleResult {
    pub fn successes(&self) -> Vec<&Trajectory> {
        self.members.iter().filter_map(|m| m.as_ref().ok()).collect()
    }

    pub fn failures(&self) -> Vec<(usize, &TrajectoryFailure)> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.as_ref().err().map(|f| (i, f.as_ref())))
            .collect()
    }
}

/// Runs `cfg.ensemble_size` members in parallel, member `i` on stream `i`.
/// `threads = 0` uses the global pool.
pub fn run_ensemble(
    cfg: &SimConfig,
    noise: NoiseSpec,
    ic: &InitialCondition,
    observables: &ObservableSet,
    threads: usize,
) -> Result<EnsembleResult> {
    let stepper = Stepper::new(cfg, noise)?;
    let run_member = |i: usize| {
        let stream = if cfg.identical_streams { 0 } else { i as u64 };
        match stepper.initial_state(ic, stream) {
            Ok(s) => stepper.run(s, cfg.steps(), observables),
            Err(e) => Err(early_failure(cfg, e)),
        }
    };
    let members: Vec<_> = if threads == 0 {
        (0..cfg.ensemble_size).into_par_iter().map(run_member).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SqgError::Configuration(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.ensemble_size).into_par_iter().map(run_member).collect())
    };
    let stats = ensemble_stats(observables.names(), &members);
    Ok(EnsembleResult { members, stats })
}

fn ensemble_stats(
    names: Vec<String>,
    members: &[std::result::Result<Trajectory, Box<TrajectoryFailure>>],
) -> EnsembleStats {
    let ok: Vec<&Trajectory> = members.iter().filter_map(|m| m.as_ref().ok()).collect();
    let times = ok.first().map(|t| t.times.clone()).unwrap_or_default();
    let mut mean = Vec::with_capacity(names.len());
    let mut se = Vec::with_capacity(names.len());
    for i in 0..names.len() {
        let (m, s): (Vec<f64>, Vec<f64>) = (0..times.len())
            .map(|t| {
                let r: RunningMoments = ok.iter().map(|tr| tr.values[i][t]).collect();
                let s = if r.count() >= 2 { r.std_error() } else { f64::NAN };
                (r.mean(), s)
            })
            .unzip();
        mean.push(m);
        se.push(s);
    }
    EnsembleStats { names, times, mean, se, members: ok.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WaveVector;
    use num_complex::Complex64;

    fn mode(n: usize, k: WaveVector, c: Complex64) -> SpectralField {
        let mut f = SpectralField::zeros(n);
        f.set(k, c).unwrap();
        f
    }

    #[test]
    fn validation_rejects_bad_values() {
        let ok = SimConfig { horizon: 0.01, dt: 1e-3, ..Default::default() };
        assert!(ok.validate().is_ok());
        assert!(SimConfig { dt: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { alpha: -1.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { horizon: 0.0105, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { observe_every: 3, ..ok.clone() }.validate().is_err());
        assert!(matches!(SimConfig { padding: 1, ..ok }.validate(), Err(SqgError::Aliasing { .. })));
    }

    #[test]
    fn pure_decay_is_exact() {
        let cfg = SimConfig {
            alpha: 0.1,
            dt: 0.01,
            horizon: 1.0,
            cutoff: 4,
            enable_advection: false,
            enable_p_laplacian: false,
            ..Default::default()
        };
        let theta0 = mode(4, WaveVector::new(2, 0), Complex64::new(0.5, 0.0));
        let stepper = Stepper::new(&cfg, NoiseSpec::silent()).unwrap();
        let mut s = stepper.initial_state(&InitialCondition::Field(theta0.clone()), 0).unwrap();
        for _ in 0..cfg.steps() {
            stepper.step(&mut s).unwrap();
        }
        let expect = theta0.scaled((-16.0f64 * 0.1).exp());
        let mut d = s.field.clone();
        d.sub_assign(&expect);
        assert!(d.l2_sq().sqrt() <= 1e-12 * expect.l2_sq().sqrt());
        assert!((s.time - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_records_initial_observation() {
        let cfg = SimConfig { horizon: 0.0, cutoff: 4, ..Default::default() };
        let obs = ObservableSet::from_names(&["M"], Grid::new(cfg.grid_spec().unwrap()), NoiseSpec::silent()).unwrap();
        let t = run_trajectory(&cfg, NoiseSpec::silent(), &InitialCondition::Zero, &obs).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.series("M").unwrap(), &[0.0]);
    }

    #[test]
    fn stochastic_run_is_reproducible_and_resumable() {
        let cfg = SimConfig { alpha: 0.2, dt: 0.01, horizon: 0.2, cutoff: 6, seed: 9, ..Default::default() };
        let noise = NoiseSpec::default_for_cutoff(6);
        let stepper = Stepper::new(&cfg, noise).unwrap();
        let s0 = stepper.initial_state(&InitialCondition::Zero, 3).unwrap();
        let mut a = s0.clone();
        let mut b = s0;
        for _ in 0..20 {
            stepper.step(&mut a).unwrap();
        }
        for _ in 0..10 {
            stepper.step(&mut b).unwrap();
        }
        let mut c = StepperState {
            time: b.time,
            step: b.step,
            field: b.field.clone(),
            rng: RngStream::at(b.rng.seed(), b.rng.stream(), b.rng.counter()),
        };
        for _ in 0..10 {
            stepper.step(&mut c).unwrap();
        }
        assert_eq!(a, c);
        assert!(a.field.l2_sq() > 0.0);
    }

    #[test]
    fn divergence_leaves_state_untouched() {
        let cfg = SimConfig { alpha: 0.0, dt: 0.1, horizon: 0.1, cutoff: 4, ..Default::default() };
        let stepper = Stepper::new(&cfg, NoiseSpec::silent()).unwrap();
        let bad = mode(4, WaveVector::new(1, 2), Complex64::new(f64::NAN, 0.0));
        let mut s = stepper.initial_state(&InitialCondition::Field(bad), 0).unwrap();
        let before = s.clone();
        assert!(matches!(stepper.step(&mut s), Err(SqgError::Divergence { .. })));
        assert_eq!(s.step, before.step);
    }

    #[test]
    fn identical_streams_give_zero_variance() {
        let cfg = SimConfig {
            alpha: 0.2,
            dt: 0.01,
            horizon: 0.05,
            cutoff: 6,
            ensemble_size: 3,
            identical_streams: true,
            ..Default::default()
        };
        let noise = NoiseSpec::default_for_cutoff(6);
        let grid = Grid::new(cfg.grid_spec().unwrap());
        let obs = ObservableSet::from_names(&["L2_sq"], grid, noise.clone()).unwrap();
        let r = run_ensemble(&cfg, noise, &InitialCondition::Zero, &obs, 2).unwrap();
        let (m, se) = r.stats.series("L2_sq").unwrap();
        assert!(m[m.len() - 1] > 0.0);
        assert!(se[1..].iter().all(|s| *s == 0.0));
    }
}
