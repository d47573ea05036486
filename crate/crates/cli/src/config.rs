//! TOML run configuration.
//!
//! Every section is optional in the file; defaults are filled in by
//! [`RunConfig::parse`] and the resolved document can be echoed back with
//! [`RunConfig::to_toml`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sqg_core::forcing::AmplitudeRule;
use sqg_core::measure::{BinRule, StationaryPlan};
use sqg_core::sandbox::{SandboxScheme, SystemKind};
use sqg_core::{
    ExplicitScheme, InitialCondition, NoiseScheme, NoiseSpec, Observable, SandboxConfig, SimConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("missing required key '{0}'")]
    Missing(String),
    #[error("{0}")]
    Syntax(String),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Ensemble,
    Stationary,
    Sweep,
    Sandbox,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ensemble => "ensemble",
            Mode::Stationary => "stationary",
            Mode::Sweep => "sweep",
            Mode::Sandbox => "sandbox",
            Mode::Verify => "verify",
        }
    }

    fn needs_simulation(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Ensemble | Mode::Stationary | Mode::Sweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Auto,
    Heun,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSchemeName {
    EulerMaruyama,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    #[serde(alias = "T")]
    pub horizon: Option<f64>,
    #[serde(alias = "N")]
    pub cutoff: Option<usize>,
    pub seed: Option<u64>,
    pub padding: usize,
    pub advection: bool,
    pub p_laplacian: bool,
    pub scheme: SchemeName,
    pub noise_scheme: NoiseSchemeName,
    pub ensemble: usize,
    pub observe_every: u64,
    pub monitor_cfl: bool,
    pub cfl_limit: f64,
    pub blowup_factor: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            alpha: None,
            dt: None,
            horizon: None,
            cutoff: None,
            seed: None,
            padding: d.padding,
            advection: d.enable_advection,
            p_laplacian: d.enable_p_laplacian,
            scheme: SchemeName::Auto,
            noise_scheme: NoiseSchemeName::Exponential,
            ensemble: d.ensemble_size,
            observe_every: d.observe_every,
            monitor_cfl: d.monitor_cfl,
            cfl_limit: d.cfl_limit,
            blowup_factor: d.blowup_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRule {
    /// `a_j = 1/λ_j` up to `λ = (N/2)²`.
    Default,
    PowerLaw,
    Shells,
    Explicit,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub rule: NoiseRule,
    pub max_lambda: Option<f64>,
    pub scale: f64,
    pub exponent: f64,
    /// `[[λ, a], ...]`
    pub shells: Vec<[f64; 2]>,
    pub amplitudes: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { rule: NoiseRule::Default, max_lambda: None, scale: 1.0, exponent: -1.0, shells: Vec::new(), amplitudes: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    Random,
    LinearStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub kmax: f64,
    pub slope: f64,
    pub l2: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: InitialKind::Zero, kmax: 8.0, slope: 1.0, l2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Steps between checkpoints in simulate mode; 0 writes only the final one.
    pub checkpoint_every: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, checkpoint_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    pub burn_in_diffusive: f64,
    pub averaging_diffusive: f64,
    pub batches: usize,
    pub histograms: Vec<String>,
    /// Fixed bin count; Freedman–Diaconis when absent.
    pub bins: Option<usize>,
}

impl Default for StationarySection {
    fn default() -> Self {
        let p = StationaryPlan::default();
        Self {
            burn_in_diffusive: p.burn_in_diffusive,
            averaging_diffusive: p.averaging_diffusive,
            batches: p.batches,
            histograms: vec!["M".into(), "E_mhalf".into()],
            bins: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    /// `q` values for the `E M^q` balance.
    pub mass_powers: Vec<u32>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { mass_powers: vec![1, 2] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandboxSchemeName {
    EulerMaruyama,
    Splitting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxSection {
    pub system: String,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: Option<u64>,
    pub ensemble: usize,
    pub sample_every: u64,
    pub scheme: SandboxSchemeName,
}

impl Default for SandboxSection {
    fn default() -> Self {
        let d = SandboxConfig::default();
        Self {
            system: "quadratic".into(),
            n: 1,
            alphas: vec![d.alpha],
            dt: d.dt,
            horizon: d.horizon,
            burn_in: d.burn_in,
            seed: None,
            ensemble: d.ensemble,
            sample_every: d.sample_every,
            scheme: SandboxSchemeName::Splitting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Criterion numbers to run; all when empty.
    pub criteria: Vec<u32>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { criteria: Vec::new() }
    }
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub sandbox: SandboxSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_observables() -> Vec<String> {
    ["M", "E_mhalf", "L2_sq", "Hmhalf_sq", "H2_diss", "W14_diss", "diss_sum", "I_diss", "I_diss_printed"]
        .map(String::from)
        .to_vec()
}

impl RunConfig {
    /// Parses and validates `text`. A `mode` given here overrides the file's.
    pub fn parse(text: &str, mode: Option<Mode>) -> Result<Self, ConfigError> {
        Self::parse_with_seed(text, mode, None)
    }

    /// As [`RunConfig::parse`], with `seed` replacing every configured seed
    /// before validation.
    pub fn parse_with_seed(text: &str, mode: Option<Mode>, seed: Option<u64>) -> Result<Self, ConfigError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message().trim().to_string())
        })?;
        if mode.is_some() {
            cfg.mode = mode;
        }
        if let Some(seed) = seed {
            cfg.override_seed(seed);
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn mode(&self) -> Mode {
        self.mode.expect("validated")
    }

    /// Resolved configuration as TOML, for run logs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve(&mut self) -> Result<(), ConfigError> {
        let mode = self.mode.ok_or_else(|| ConfigError::Missing("mode".into()))?;
        for (i, name) in self.observables.iter().enumerate() {
            Observable::parse(name).map_err(|e| invalid(&format!("observables[{i}]"), e.to_string()))?;
        }
        if mode.needs_simulation() {
            self.resolve_simulation(mode)?;
        }
        match mode {
            Mode::Stationary | Mode::Sweep => {
                if !self.observables.iter().any(|o| o == "diss_sum") {
                    return Err(invalid("observables", "stationary estimation needs 'diss_sum'"));
                }
                let st = &self.stationary;
                if !(st.burn_in_diffusive >= 0.0) {
                    return Err(invalid("stationary.burn_in_diffusive", "must be >= 0"));
                }
                if !(st.averaging_diffusive > 0.0) {
                    return Err(invalid("stationary.averaging_diffusive", "must be positive"));
                }
                if st.batches < 2 {
                    return Err(invalid("stationary.batches", "need at least 2 batches"));
                }
                if st.bins == Some(0) {
                    return Err(invalid("stationary.bins", "must be positive"));
                }
                for (i, h) in st.histograms.iter().enumerate() {
                    if !self.observables.contains(h) {
                        return Err(invalid(&format!("stationary.histograms[{i}]"), format!("'{h}' is not recorded")));
                    }
                }
            }
            Mode::Sandbox => self.resolve_sandbox()?,
            _ => {}
        }
        if mode == Mode::Sweep {
            let a = &self.sweep.alphas;
            if a.is_empty() {
                return Err(ConfigError::Missing("sweep.alphas".into()));
            }
            if a.iter().any(|x| !(*x > 0.0)) || a.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("sweep.alphas", "must be positive and strictly decreasing"));
            }
        }
        if mode == Mode::Verify && self.verify.criteria.iter().any(|c| !(1..=11).contains(c)) {
            return Err(invalid("verify.criteria", "criteria are numbered 1 to 11"));
        }
        Ok(())
    }

    fn resolve_simulation(&mut self, mode: Mode) -> Result<(), ConfigError> {
        let s = &mut self.simulation;
        let req = |v: Option<f64>, key: &str| v.ok_or_else(|| ConfigError::Missing(format!("simulation.{key}")));
        if mode == Mode::Sweep {
            s.alpha.get_or_insert(self.sweep.alphas.first().copied().unwrap_or(1.0));
        }
        let alpha = req(s.alpha, "alpha")?;
        let dt = req(s.dt, "dt")?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid("simulation.alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("simulation.dt", format!("must be positive, got {dt}")));
        }
        if matches!(mode, Mode::Stationary | Mode::Sweep) {
            // replaced by the stationary plan
            s.horizon.get_or_insert(0.0);
        }
        let horizon = req(s.horizon, "horizon")?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(invalid("simulation.horizon", format!("must be >= 0, got {horizon}")));
        }
        let cutoff = s.cutoff.ok_or_else(|| ConfigError::Missing("simulation.cutoff".into()))?;
        if cutoff == 0 {
            return Err(invalid("simulation.cutoff", "must be positive"));
        }
        s.seed.ok_or_else(|| ConfigError::Missing("simulation.seed".into()))?;
        if s.padding < 2 {
            return Err(invalid("simulation.padding", "must be at least 2 for dealiasing"));
        }
        if s.ensemble == 0 {
            return Err(invalid("simulation.ensemble", "must be at least 1"));
        }
        if s.observe_every == 0 {
            return Err(invalid("simulation.observe_every", "must be at least 1"));
        }
        if !matches!(mode, Mode::Stationary | Mode::Sweep) {
            self.sim_config().validate().map_err(|e| invalid("simulation", e.to_string()))?;
        }
        let every = self.output.checkpoint_every;
        if every > 0 && every % self.simulation.observe_every != 0 {
            return Err(invalid("output.checkpoint_every", "must be a multiple of simulation.observe_every"));
        }
        self.noise_spec()?;
        if mode == Mode::Simulate && self.simulation.ensemble != 1 {
            return Err(invalid("simulation.ensemble", "simulate mode runs a single path"));
        }
        Ok(())
    }

    fn resolve_sandbox(&mut self) -> Result<(), ConfigError> {
        let sb = &self.sandbox;
        let kind = SystemKind::parse(&sb.system).map_err(|e| invalid("sandbox.system", e.to_string()))?;
        let sys = sqg_core::HamiltonianSystem::new(kind, sb.n).map_err(|e| invalid("sandbox.n", e.to_string()))?;
        if sb.alphas.is_empty() {
            return Err(ConfigError::Missing("sandbox.alphas".into()));
        }
        if sb.seed.is_none() {
            return Err(ConfigError::Missing("sandbox.seed".into()));
        }
        for (i, cfg) in self.sandbox_configs().into_iter().enumerate() {
            cfg.validate(&sys).map_err(|e| invalid(&format!("sandbox.alphas[{i}]"), e.to_string()))?;
        }
        Ok(())
    }

    /// Simulation parameters; valid after [`RunConfig::parse`] for modes that
    /// simulate.
    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            alpha: s.alpha.unwrap_or(0.0),
            dt: s.dt.unwrap_or(0.0),
            horizon: s.horizon.unwrap_or(0.0),
            cutoff: s.cutoff.unwrap_or(0),
            padding: s.padding,
            enable_advection: s.advection,
            enable_p_laplacian: s.p_laplacian,
            explicit_scheme: match s.scheme {
                SchemeName::Auto => ExplicitScheme::Auto,
                SchemeName::Heun => ExplicitScheme::Heun,
                SchemeName::Rk4 => ExplicitScheme::Rk4,
            },
            noise_scheme: match s.noise_scheme {
                NoiseSchemeName::EulerMaruyama => NoiseScheme::EulerMaruyama,
                NoiseSchemeName::Exponential => NoiseScheme::Exponential,
            },
            seed: s.seed.unwrap_or(0),
            ensemble_size: s.ensemble,
            observe_every: s.observe_every,
            identical_streams: false,
            cfl_limit: s.cfl_limit,
            monitor_cfl: s.monitor_cfl,
            blowup_factor: s.blowup_factor,
        }
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec, ConfigError> {
        let n = self.simulation.cutoff.unwrap_or(0);
        let nz = &self.noise;
        let half = (n / 2).max(1) as f64;
        let max_lambda = nz.max_lambda.unwrap_or(half * half);
        let rule = match nz.rule {
            NoiseRule::None => return Ok(NoiseSpec::silent()),
            NoiseRule::Default => return Ok(NoiseSpec::default_for_cutoff(n)),
            NoiseRule::PowerLaw => AmplitudeRule::PowerLaw { scale: nz.scale, exponent: nz.exponent },
            NoiseRule::Shells => AmplitudeRule::Shells(nz.shells.iter().map(|[l, a]| (*l, *a)).collect()),
            NoiseRule::Explicit => AmplitudeRule::Explicit(nz.amplitudes.clone()),
        };
        let spec = NoiseSpec::from_rule(max_lambda, &rule).map_err(|e| invalid("noise", e.to_string()))?;
        if spec.basis().max_sup_norm() as usize > n {
            return Err(invalid("noise.max_lambda", format!("forcing reaches beyond cutoff {n}")));
        }
        Ok(spec)
    }

    pub fn initial_condition(&self) -> InitialCondition {
        let i = &self.initial;
        match i.kind {
            InitialKind::Zero => InitialCondition::Zero,
            InitialKind::Random => InitialCondition::RandomBandLimited { kmax: i.kmax, slope: i.slope, l2: i.l2 },
            InitialKind::LinearStationary => InitialCondition::LinearStationary,
        }
    }

    pub fn stationary_plan(&self) -> StationaryPlan {
        let s = &self.stationary;
        StationaryPlan {
            burn_in_diffusive: s.burn_in_diffusive,
            averaging_diffusive: s.averaging_diffusive,
            batches: s.batches,
        }
    }

    pub fn bin_rule(&self) -> BinRule {
        self.stationary.bins.map_or(BinRule::FreedmanDiaconis, BinRule::Count)
    }

    pub fn sandbox_system(&self) -> sqg_core::HamiltonianSystem {
        let kind = SystemKind::parse(&self.sandbox.system).expect("validated");
        sqg_core::HamiltonianSystem::new(kind, self.sandbox.n).expect("validated")
    }

    pub fn sandbox_configs(&self) -> Vec<SandboxConfig> {
        let sb = &self.sandbox;
        sb.alphas
            .iter()
            .map(|&alpha| SandboxConfig {
                alpha,
                dt: sb.dt,
                horizon: sb.horizon,
                burn_in: sb.burn_in,
                seed: sb.seed.unwrap_or(0),
                ensemble: sb.ensemble,
                sample_every: sb.sample_every,
                scheme: match sb.scheme {
                    SandboxSchemeName::EulerMaruyama => SandboxScheme::EulerMaruyama,
                    SandboxSchemeName::Splitting => SandboxScheme::Splitting,
                },
            })
            .collect()
    }

    /// Replaces the seed everywhere it is used.
    pub fn override_seed(&mut self, seed: u64) {
        self.simulation.seed = Some(seed);
        self.sandbox.seed = Some(seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
mode = 'simulate'
[simulation]
alpha = 0.1
dt = 0.001
T = 0.01
N = 8
seed = 4
";

    #[test]
    fn minimal_simulate_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL, None).unwrap();
        assert_eq!(cfg.mode(), Mode::Simulate);
        let sim = cfg.sim_config();
        assert_eq!(sim.padding, 2);
        assert_eq!(sim.cutoff, 8);
        assert_eq!(sim.horizon, 0.01);
        assert_eq!(cfg.stationary_plan(), StationaryPlan::default());
        let echoed = cfg.to_toml();
        assert!(echoed.contains("padding = 2"));
        assert_eq!(RunConfig::parse(&echoed, None).unwrap(), cfg);
    }

    #[test]
    fn zero_dt_names_the_key() {
        let err = RunConfig::parse(&MINIMAL.replace("dt = 0.001", "dt = 0.0"), None).unwrap_err();
        assert!(err.to_string().contains("simulation.dt"), "{err}");
    }

    #[test]
    fn type_errors_carry_the_key_path() {
        let err = RunConfig::parse(&MINIMAL.replace("dt = 0.001", "dt = 'fast'"), None).unwrap_err();
        assert!(err.to_string().starts_with("simulation.dt"), "{err}");
        let err = RunConfig::parse(&MINIMAL.replace("seed = 4", "seed = 4\nwarp = 9"), None).unwrap_err();
        assert!(err.to_string().contains("warp"), "{err}");
    }

    #[test]
    fn missing_and_unknown_keys() {
        let err = RunConfig::parse(&MINIMAL.replace("alpha = 0.1", ""), None).unwrap_err();
        assert!(err.to_string().contains("simulation.alpha"), "{err}");
        let err = RunConfig::parse(&format!("observables = ['M', 'vorticity']\n{MINIMAL}"), None).unwrap_err();
        assert!(err.to_string().contains("observables[1]"), "{err}");
        assert!(matches!(RunConfig::parse("", None), Err(ConfigError::Missing(k)) if k == "mode"));
    }

    #[test]
    fn sweep_rows() {
        let text = "
[simulation]
dt = 0.05
N = 16
seed = 1
[sweep]
alphas = [0.1, 0.05]
";
        let cfg = RunConfig::parse(text, Some(Mode::Sweep)).unwrap();
        assert_eq!(cfg.sweep.alphas, vec![0.1, 0.05]);
        let err = RunConfig::parse(&text.replace("[0.1, 0.05]", "[0.05, 0.1]"), Some(Mode::Sweep)).unwrap_err();
        assert!(err.to_string().contains("sweep.alphas"));
    }

    #[test]
    fn sandbox_section() {
        let text = "
[sandbox]
system = 'quartic'
alphas = [0.1]
seed = 3
";
        let cfg = RunConfig::parse(text, Some(Mode::Sandbox)).unwrap();
        assert_eq!(cfg.sandbox_configs()[0].alpha, 0.1);
        let err = RunConfig::parse(&text.replace("quartic", "cubic"), Some(Mode::Sandbox)).unwrap_err();
        assert!(err.to_string().contains("sandbox.system"));
    }
}
