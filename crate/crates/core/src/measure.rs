//! Time-averaged stationary statistics, histogram diagnostics, the Casimir
//! Gram matrix and the inviscid sweep.

use nalgebra::DMatrix;

use crate::error::{Result, SqgError};
use crate::forcing::NoiseSpec;
use crate::functionals::{CasimirFunction, Observable, ObservableSet};
use crate::integrator::{run_ensemble, InitialCondition, SimConfig, Trajectory};
use crate::spectral::{Grid, SpectralField};
use crate::stats::{batch_means, batch_se, Estimate, RunningMoments};

pub const DEFAULT_BATCHES: usize = 20;

/// Post-burn-in running moments and batch means of every recorded observable.
/// Ledgers from different members merge associatively (in member order).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentLedger {
    names: Vec<String>,
    burn_in: f64,
    spacing: f64,
    moments: Vec<RunningMoments>,
    batches: Vec<Vec<(f64, u64)>>,
    samples: Vec<Vec<f64>>,
    members: usize,
}

impl MomentLedger {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in
    }

    /// Time between retained samples.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn members(&self) -> usize {
        self.members
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SqgError::Configuration(format!("ledger does not contain observable '{name}'")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Mean with batch-means standard error.
    pub fn estimate(&self, name: &str) -> Result<Estimate> {
        let i = self.index(name)?;
        let m = &self.moments[i];
        if m.count() < 2 {
            return Err(SqgError::Estimation(format!("fewer than two samples of '{name}'")));
        }
        Ok(Estimate { mean: m.mean(), se: batch_se(&self.batches[i]), count: m.count() })
    }

    /// Retained post-burn-in samples, pooled in member order.
    pub fn samples(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.samples[self.index(name)?])
    }

    pub fn summary(&self) -> Vec<(String, Estimate)> {
        self.names.iter().filter_map(|n| self.estimate(n).ok().map(|e| (n.clone(), e))).collect()
    }

    pub fn merge(&mut self, other: &MomentLedger) -> Result<()> {
        if self.names != other.names {
            return Err(SqgError::Configuration("cannot merge ledgers with different observables".into()));
        }
        for i in 0..self.names.len() {
            self.moments[i].merge(&other.moments[i]);
            self.batches[i].extend_from_slice(&other.batches[i]);
            self.samples[i].extend_from_slice(&other.samples[i]);
        }
        self.members += other.members;
        Ok(())
    }
}

/// Time average of a trajectory's observables over `t ≥ burn_in`.
pub fn time_average(traj: &Trajectory, burn_in: f64, n_batches: usize) -> Result<MomentLedger> {
    let start = traj.times.iter().position(|t| *t >= burn_in - 1e-9 * burn_in.abs().max(1.0));
    let start = start.ok_or_else(|| {
        SqgError::Estimation(format!("trajectory ends before the burn-in time {burn_in}"))
    })?;
    let kept = traj.times.len() - start;
    if kept < 2 * n_batches.max(1) {
        return Err(SqgError::Estimation(format!(
            "{kept} post-burn-in samples are too few for {n_batches} batches"
        )));
    }
    let mut moments = Vec::with_capacity(traj.names.len());
    let mut batches = Vec::with_capacity(traj.names.len());
    let mut samples = Vec::with_capacity(traj.names.len());
    for series in &traj.values {
        let s = &series[start..];
        moments.push(s.iter().copied().collect::<RunningMoments>());
        batches.push(batch_means(s, n_batches));
        samples.push(s.to_vec());
    }
    Ok(MomentLedger {
        names: traj.names.clone(),
        burn_in,
        spacing: traj.observation_spacing,
        moments,
        batches,
        samples,
        members: 1,
    })
}

/// One stationary identity `⟨F⟩ = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResidual {
    pub id: String,
    pub observable: String,
    pub estimate: Estimate,
    pub target: f64,
    pub residual: f64,
    /// Scale used for relative tolerances.
    pub scale: f64,
}

impl StationaryResidual {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }

    /// `|residual| ≤ max(rel·scale, k·se)`.
    pub fn passes(&self, rel: f64, k: f64) -> bool {
        self.residual.abs() <= (rel * self.scale.abs()).max(k * self.estimate.se)
    }
}

/// Residuals of every stationary identity whose observables are recorded.
/// `diss_sum` is mandatory.
pub fn stationary_residuals(ledger: &MomentLedger, noise: &NoiseSpec) -> Result<Vec<StationaryResidual>> {
    let a0 = noise.spectral_sum(0.0);
    let a_mhalf = noise.spectral_sum(-0.5);
    let mut out = Vec::new();
    let mut push = |id: String, obs: &str, target: f64, scale: f64| -> Result<()> {
        let e = ledger.estimate(obs)?;
        out.push(StationaryResidual {
            id,
            observable: obs.to_string(),
            estimate: e,
            target,
            residual: e.mean - target,
            scale,
        });
        Ok(())
    };
    if !ledger.contains("diss_sum") {
        return Err(SqgError::Configuration("stationary residuals need the 'diss_sum' observable".into()));
    }
    push("dissipation_balance".into(), "diss_sum", 0.5 * a0, 0.5 * a0)?;
    if ledger.contains("I_diss") {
        push("h_minus_half_balance".into(), "I_diss", 0.5 * a_mhalf, 0.5 * a_mhalf)?;
    }
    if ledger.contains("I_diss_printed") {
        push("h_minus_half_balance_printed_sign".into(), "I_diss_printed", 0.5 * a_mhalf, 0.5 * a_mhalf)?;
    }
    for name in ledger.names().to_vec() {
        if let Ok(Observable::PowerQGap(q)) = Observable::parse(&name) {
            let weighted = format!("Mq_diss_{q}");
            let scale = if ledger.contains(&weighted) { ledger.estimate(&weighted)?.mean } else { 1.0 };
            push(format!("mass_power_balance_q{q}"), &name, 0.0, scale)?;
        }
    }
    Ok(out)
}

/// Bin placement for histograms.
#[derive(Debug, Clone, PartialEq)]
pub enum BinRule {
    FreedmanDiaconis,
    Count(usize),
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    pub observable: String,
    pub bins: BinRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    fn build(samples: &[f64], edges: Vec<f64>) -> Self {
        let nb = edges.len() - 1;
        let mut counts = vec![0u64; nb];
        let (lo, hi) = (edges[0], edges[nb]);
        for &x in samples {
            let i = match edges.binary_search_by(|e| e.total_cmp(&x)) {
                Ok(i) => i,
                Err(i) => i.saturating_sub(1),
            };
            if x >= lo && x <= hi {
                counts[i.min(nb - 1)] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let masses = counts.iter().map(|c| *c as f64 / total.max(1) as f64).collect();
        Self { edges, masses }
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// `(left, right, mass)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges.windows(2).zip(&self.masses).map(|(w, m)| (w[0], w[1], *m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomCheck {
    pub observable: String,
    pub histogram: Histogram,
    /// Largest bin mass at widths `h`, `h/2`, `h/4`.
    pub max_mass: [f64; 3],
    pub degenerate: bool,
    pub atom: bool,
}

pub const MIN_HISTOGRAM_SAMPLES: usize = 1000;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn refine(edges: &[f64], parts: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((edges.len() - 1) * parts + 1);
    for w in edges.windows(2) {
        for p in 0..parts {
            out.push(w[0] + (w[1] - w[0]) * p as f64 / parts as f64);
        }
    }
    out.push(*edges.last().expect("at least two edges"));
    out
}

/// Normalized histogram plus the bin-halving plateau test: the verdict is an
/// atom when quartering the bin width keeps at least half of the largest bin
/// mass (a density would drop it to about a quarter).
pub fn histogram_atom_check(samples: &[f64], spec: &HistogramSpec) -> Result<AtomCheck> {
    if samples.len() < MIN_HISTOGRAM_SAMPLES {
        return Err(SqgError::Estimation(format!(
            "{} samples of '{}' (need at least {MIN_HISTOGRAM_SAMPLES})",
            samples.len(),
            spec.observable
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(SqgError::Estimation("non-finite histogram sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        let histogram = Histogram { edges: vec![lo, hi], masses: vec![1.0] };
        return Ok(AtomCheck {
            observable: spec.observable.clone(),
            histogram,
            max_mass: [1.0; 3],
            degenerate: true,
            atom: true,
        });
    }
    let edges = match &spec.bins {
        BinRule::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SqgError::Configuration("histogram edges must be strictly increasing".into()));
            }
            e.clone()
        }
        rule => {
            let nb = match rule {
                BinRule::Count(n) => (*n).max(1),
                _ => {
                    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
                    let h = 2.0 * iqr * (sorted.len() as f64).powf(-1.0 / 3.0);
                    if h > 0.0 {
                        (((hi - lo) / h).ceil() as usize).clamp(1, 10_000)
                    } else {
                        (sorted.len() as f64).sqrt().ceil() as usize
                    }
                }
            };
            (0..=nb).map(|i| lo + (hi - lo) * i as f64 / nb as f64).collect()
        }
    };
    let histogram = Histogram::build(samples, edges);
    let half = Histogram::build(samples, refine(&histogram.edges, 2));
    let quarter = Histogram::build(samples, refine(&histogram.edges, 4));
    let max_mass = [histogram.max_mass(), half.max_mass(), quarter.max_mass()];
    Ok(AtomCheck {
        observable: spec.observable.clone(),
        histogram,
        max_mass,
        degenerate: false,
        atom: max_mass[2] >= 0.5 * max_mass[0],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// `G_ij = Σ_m a_m² (g_i∘θ, e_m)(g_j∘θ, e_m)` for the given derivative
/// functions `g_i = f_i′`.
pub fn gram_matrix(
    field: &SpectralField,
    derivatives: &[&dyn Fn(f64) -> f64],
    noise: &NoiseSpec,
    grid: &Grid,
) -> Result<GramReport> {
    let phys = grid.to_physical(field)?;
    let forced: Vec<_> = noise.iter().filter(|(_, a)| *a != 0.0).collect();
    let n = derivatives.len();
    let mut proj = DMatrix::<f64>::zeros(n, forced.len());
    for (i, g) in derivatives.iter().enumerate() {
        let gi = grid.to_spectral(&phys.map(g))?;
        for (m, (e, a)) in forced.iter().enumerate() {
            proj[(i, m)] = a * e.project(&gi);
        }
    }
    let matrix = &proj * proj.transpose();
    let determinant = matrix.determinant();
    let mut eigenvalues: Vec<f64> = matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(GramReport { matrix, determinant, eigenvalues })
}

/// Gram matrix of a Casimir family.
pub fn casimir_gram(
    field: &SpectralField,
    family: &[CasimirFunction],
    noise: &NoiseSpec,
    grid: &Grid,
) -> Result<GramReport> {
    let ders: Vec<Box<dyn Fn(f64) -> f64>> =
        family.iter().map(|f| Box::new(move |z| f.derivative(z, 1)) as Box<dyn Fn(f64) -> f64>).collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = ders.iter().map(|b| b.as_ref()).collect();
    gram_matrix(field, &refs, noise, grid)
}

/// Run lengths in diffusive times `1/(α λ_min²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPlan {
    pub burn_in_diffusive: f64,
    pub averaging_diffusive: f64,
    pub batches: usize,
}

impl Default for StationaryPlan {
    fn default() -> Self {
        Self { burn_in_diffusive: 10.0, averaging_diffusive: 20.0, batches: DEFAULT_BATCHES }
    }
}

impl StationaryPlan {
    pub fn diffusive_time(alpha: f64, noise: &NoiseSpec) -> Result<f64> {
        let lam = noise
            .min_forced_lambda()
            .ok_or_else(|| SqgError::Configuration("stationary runs need nonzero forcing".into()))?;
        if alpha <= 0.0 {
            return Err(SqgError::Configuration("stationary runs need alpha > 0".into()));
        }
        Ok(1.0 / (alpha * lam * lam))
    }

    /// Copy of `base` with the horizon set to burn-in plus averaging, rounded
    /// up to whole observation strides; returns the burn-in time too.
    pub fn configure(&self, base: &SimConfig, noise: &NoiseSpec) -> Result<(SimConfig, f64)> {
        let tau = Self::diffusive_time(base.alpha, noise)?;
        let chunk = base.dt * base.observe_every as f64;
        let burn_chunks = (self.burn_in_diffusive * tau / chunk).ceil();
        let avg_chunks = (self.averaging_diffusive * tau / chunk).ceil();
        let mut cfg = base.clone();
        cfg.horizon = (burn_chunks + avg_chunks) * chunk;
        Ok((cfg, burn_chunks * chunk))
    }
}

#[derive(Debug)]
pub struct StationaryRun {
    pub config: SimConfig,
    pub burn_in: f64,
    pub ledger: MomentLedger,
    pub residuals: Vec<StationaryResidual>,
    /// `(member, error)` for members that failed; they are left out of the
    /// pooled ledger.
    pub failures: Vec<(usize, String)>,
}

/// Runs `cfg.ensemble_size` members to the horizon chosen by `plan` and pools
/// their post-burn-in time averages.
pub fn run_stationary(
    base: &SimConfig,
    noise: &NoiseSpec,
    ic: &InitialCondition,
    observables: &ObservableSet,
    plan: &StationaryPlan,
    threads: usize,
) -> Result<StationaryRun> {
    let (cfg, burn_in) = plan.configure(base, noise)?;
    let result = run_ensemble(&cfg, noise.clone(), ic, observables, threads)?;
    let mut ledger: Option<MomentLedger> = None;
    let mut failures = Vec::new();
    for (i, m) in result.members.iter().enumerate() {
        match m {
            Ok(t) => {
                let l = time_average(t, burn_in, plan.batches)?;
                match ledger.as_mut() {
                    Some(acc) => acc.merge(&l)?,
                    None => ledger = Some(l),
                }
            }
            Err(f) => failures.push((i, f.to_string())),
        }
    }
    let ledger = ledger.ok_or_else(|| {
        SqgError::Estimation(format!(
            "every member failed: {}",
            failures.first().map_or(String::new(), |f| f.1.clone())
        ))
    })?;
    let residuals = stationary_residuals(&ledger, noise)?;
    Ok(StationaryRun { config: cfg, burn_in, ledger, residuals, failures })
}

#[derive(Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub run: std::result::Result<StationaryRun, SqgError>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `(α, estimate)` of one observable on every successful row.
    pub fn column(&self, name: &str) -> Vec<(f64, Estimate)> {
        self.rows
            .iter()
            .filter_map(|r| r.run.as_ref().ok().and_then(|s| s.ledger.estimate(name).ok()).map(|e| (r.alpha, e)))
            .collect()
    }
}

/// Stationary runs at strictly decreasing `alphas`; run lengths scale with
/// `1/α` through the plan.
pub fn inviscid_sweep(
    base: &SimConfig,
    noise: &NoiseSpec,
    ic: &InitialCondition,
    observables: &ObservableSet,
    alphas: &[f64],
    plan: &StationaryPlan,
    threads: usize,
) -> Result<SweepResult> {
    if alphas.is_empty() {
        return Err(SqgError::Configuration("sweep needs at least one alpha".into()));
    }
    if alphas.iter().any(|a| !(*a > 0.0)) || alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SqgError::Configuration("sweep alphas must be positive and strictly decreasing".into()));
    }
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let cfg = SimConfig { alpha, ..base.clone() };
            SweepRow { alpha, run: run_stationary(&cfg, noise, ic, observables, plan, threads) }
        })
        .collect();
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBound {
    /// `max_rows (mean + 3 se)`.
    pub bound: f64,
    /// Increase from the largest to the smallest α.
    pub trend: f64,
    pub trend_se: f64,
    /// Non-decreasing along the sweep and the total increase exceeds three
    /// combined standard errors.
    pub growing: bool,
}

pub fn uniform_bound(column: &[(f64, Estimate)]) -> Result<UniformBound> {
    if column.is_empty() {
        return Err(SqgError::Estimation("empty sweep column".into()));
    }
    let bound = column.iter().map(|(_, e)| e.mean + 3.0 * e.se).fold(f64::NEG_INFINITY, f64::max);
    let (first, last) = (column[0].1, column[column.len() - 1].1);
    let trend = last.mean - first.mean;
    let trend_se = (first.se * first.se + last.se * last.se).sqrt();
    let monotone = column.windows(2).all(|w| w[1].1.mean >= w[0].1.mean);
    Ok(UniformBound { bound, trend, trend_se, growing: column.len() > 1 && monotone && trend > 3.0 * trend_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{AmplitudeRule, RngStream};
    use crate::integrator::Stepper;
    use crate::spectral::{GridSpec, WaveVector};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn constant_trajectory(value: f64, len: usize) -> Trajectory {
        let cfg = SimConfig { cutoff: 2, horizon: 0.0, ..Default::default() };
        let st = Stepper::new(&cfg, NoiseSpec::silent()).unwrap();
        let s = st.initial_state(&InitialCondition::Zero, 0).unwrap();
        let obs = ObservableSet::new(
            vec![Observable::Custom("c".into(), std::sync::Arc::new(move |_| value))],
            st.grid().clone(),
            NoiseSpec::silent(),
        );
        let mut t = st.run(s, 0, &obs).unwrap();
        t.times = (0..len).map(|i| i as f64).collect();
        t.values = vec![vec![value; len]];
        t
    }

    #[test]
    fn constant_trajectory_has_zero_se() {
        let l = time_average(&constant_trajectory(1.5, 200), 10.0, 20).unwrap();
        let e = l.estimate("c").unwrap();
        assert_eq!(e.mean, 1.5);
        assert_eq!(e.se, 0.0);
        assert_eq!(e.count, 190);
        assert!(time_average(&constant_trajectory(1.0, 30), 10.0, 20).is_err());
    }

    #[test]
    fn zero_noise_stationary_averages_vanish() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        let noise = NoiseSpec::from_rule(2.0, &AmplitudeRule::PowerLaw { scale: 0.0, exponent: 0.0 }).unwrap();
        let cfg = SimConfig { alpha: 2.0, dt: 0.05, cutoff: 4, observe_every: 1, ..Default::default() };
        let obs = ObservableSet::from_names(&["diss_sum", "I_diss"], grid, noise.clone()).unwrap();
        let traj = crate::integrator::run_trajectory(
            &SimConfig { horizon: 40.0, ..cfg },
            noise.clone(),
            &InitialCondition::RandomBandLimited { kmax: 3.0, slope: 1.0, l2: 1.0 },
            &obs,
        )
        .unwrap();
        let l = time_average(&traj, 20.0, 20).unwrap();
        assert!(l.estimate("diss_sum").unwrap().mean < 1e-12);
        let r = stationary_residuals(&l, &noise).unwrap();
        assert_eq!(r[0].id, "dissipation_balance");
        assert!(r[0].residual.abs() < 1e-12);
    }

    #[test]
    fn histogram_masses_sum_to_one_and_detect_atoms() {
        let mut rng = RngStream::new(3, 0);
        let u: Vec<f64> = (0..5000).map(|_| rng.uniform()).collect();
        let spec = HistogramSpec { observable: "u".into(), bins: BinRule::FreedmanDiaconis };
        let c = histogram_atom_check(&u, &spec).unwrap();
        assert!((c.histogram.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(!c.atom, "{:?}", c.max_mass);
        let c = histogram_atom_check(&[2.0; 1000], &spec).unwrap();
        assert!(c.atom && c.degenerate);
        let mut mixed = u.clone();
        mixed.extend(std::iter::repeat_n(0.3, 5000));
        assert!(histogram_atom_check(&mixed, &spec).unwrap().atom);
        assert!(histogram_atom_check(&u[..999], &spec).is_err());
    }

    #[test]
    fn gram_matrix_closed_forms() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        // shell order is cos y, sin y, cos x, sin x
        let noise = NoiseSpec::from_rule(1.0, &AmplitudeRule::Explicit(vec![0.0, 0.0, 1.0, 0.0])).unwrap();
        let mut f = SpectralField::zeros(4);
        f.set(WaveVector::new(1, 0), Complex64::new(0.5, 0.0)).unwrap();
        let id = |z: f64| z;
        let g = gram_matrix(&f, &[&id], &noise, &grid).unwrap();
        assert_relative_eq!(g.matrix[(0, 0)], 2.0 * PI * PI, max_relative = 1e-13);
        // the family starts at z²B, whose derivative is 2z on the plateau
        let g = casimir_gram(&f.scaled(0.5), &crate::functionals::casimir_family(1), &noise, &grid).unwrap();
        assert_relative_eq!(g.matrix[(0, 0)], 2.0 * PI * PI, max_relative = 1e-13);
        let z = casimir_gram(&SpectralField::zeros(4), &crate::functionals::casimir_family(3), &noise, &grid).unwrap();
        assert_eq!(z.determinant, 0.0);
        assert!(z.matrix.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sweep_rejects_non_decreasing_alphas() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        let noise = NoiseSpec::default_for_cutoff(4);
        let obs = ObservableSet::from_names(&["diss_sum"], grid, noise.clone()).unwrap();
        let base = SimConfig { cutoff: 4, ..Default::default() };
        let plan = StationaryPlan::default();
        for bad in [vec![0.1, 0.2], vec![0.1, 0.1], vec![0.1, -0.1], vec![]] {
            assert!(inviscid_sweep(&base, &noise, &InitialCondition::Zero, &obs, &bad, &plan, 1).is_err());
        }
    }

    #[test]
    fn uniform_bound_flags_significant_growth() {
        let e = |m: f64| Estimate { mean: m, se: 0.1, count: 100 };
        let flat = uniform_bound(&[(0.2, e(1.0)), (0.1, e(1.1)), (0.05, e(0.95))]).unwrap();
        assert!(!flat.growing);
        assert_relative_eq!(flat.bound, 1.4);
        let grow = uniform_bound(&[(0.2, e(1.0)), (0.1, e(2.0)), (0.05, e(3.0))]).unwrap();
        assert!(grow.growing);
    }
}
