//! Runs a configured mode and writes its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use sqg_core::functionals::ito_residual;
use sqg_core::measure::{
    histogram_atom_check, inviscid_sweep, run_stationary, uniform_bound, HistogramSpec, StationaryRun,
};
use sqg_core::sandbox::{stationary_compare, SandboxObservable};
use sqg_core::{
    run_ensemble, BalanceIdentity, ObservableSet, SqgError, Stepper, StepperState, Trajectory,
};

use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::config::{ConfigError, Mode, RunConfig};
use crate::output::{Cell, Manifest, Table, BUILD_ID};
use crate::verify::{run_criteria, VerifyOptions};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub resume: Option<PathBuf>,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] SqgError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// False when a verify run has failing criteria.
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub manifest: PathBuf,
}

#[derive(Default)]
struct Context {
    out: PathBuf,
    artifacts: Vec<PathBuf>,
    summary: Vec<String>,
    last_checkpoint: Option<PathBuf>,
    passed: bool,
}

impl Context {
    fn write(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        let path = self.out.join(name);
        table.write(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.artifacts.push(path);
        Ok(())
    }

    fn checkpoint(&mut self, name: &str, c: &Checkpoint) -> Result<(), RunError> {
        let path = self.out.join(name);
        c.save(&path)?;
        self.artifacts.push(path.clone());
        self.last_checkpoint = Some(path);
        Ok(())
    }
}

/// Runs `cfg` and writes its outputs plus `manifest.json` into `opts.out`.
/// The manifest is written even when the run fails.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(&opts.out).map_err(|source| RunError::Io { path: opts.out.clone(), source })?;
    let mut ctx = Context { out: opts.out.clone(), passed: true, ..Default::default() };
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| RunError::Failed(format!("thread pool: {e}")))
        .and_then(|pool| pool.install(|| run_mode(cfg, opts, &mut ctx)));

    let seeds = match cfg.mode() {
        Mode::Sandbox => cfg.sandbox.seed.into_iter().collect(),
        Mode::Verify => Vec::new(),
        _ => cfg.simulation.seed.into_iter().collect(),
    };
    let manifest_path = opts.out.join("manifest.json");
    let manifest = Manifest {
        tool: "sqg",
        build: BUILD_ID,
        mode: cfg.mode().name().into(),
        status: match (&result, ctx.passed) {
            (Err(_), _) => "error",
            (Ok(()), false) => "failed",
            (Ok(()), true) => "ok",
        },
        error: result.as_ref().err().map(|e| e.to_string()),
        last_checkpoint: ctx.last_checkpoint.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads: opts.threads,
        seeds,
        artifacts: ctx.artifacts.clone(),
        summary: ctx.summary.clone(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    manifest.write(&manifest_path).map_err(|source| RunError::Io { path: manifest_path.clone(), source })?;
    result?;
    Ok(RunOutcome { passed: ctx.passed, artifacts: ctx.artifacts, summary: ctx.summary, manifest: manifest_path })
}

fn run_mode(cfg: &RunConfig, opts: &RunOptions, ctx: &mut Context) -> Result<(), RunError> {
    if opts.resume.is_some() && cfg.mode() != Mode::Simulate {
        return Err(RunError::Failed("--resume is only supported in simulate mode".into()));
    }
    match cfg.mode() {
        Mode::Simulate => simulate(cfg, opts.resume.as_deref(), ctx),
        Mode::Ensemble => ensemble(cfg, ctx),
        Mode::Stationary => stationary(cfg, ctx),
        Mode::Sweep => sweep(cfg, ctx),
        Mode::Sandbox => sandbox(cfg, ctx),
        Mode::Verify => verify(cfg, opts, ctx),
    }
}

fn observable_set(cfg: &RunConfig, stepper: &Stepper) -> Result<ObservableSet, RunError> {
    let names: Vec<&str> = cfg.observables.iter().map(String::as_str).collect();
    Ok(ObservableSet::from_names(&names, stepper.grid().clone(), stepper.noise().clone())?)
}

fn trajectory_rows(table: &mut Table, traj: &Trajectory, skip_first: bool) {
    for t in usize::from(skip_first)..traj.len() {
        let mut row: Vec<Cell> = vec![traj.times[t].into(), traj.steps[t].into()];
        row.extend(traj.values.iter().map(|v| Cell::F(v[t])));
        table.push(row);
    }
}

fn resume_state(path: &Path, stepper: &Stepper) -> Result<StepperState, RunError> {
    let c = Checkpoint::load(path)?;
    let sim = stepper.config();
    let bad = |m: String| Err(RunError::Failed(format!("{}: {m}", path.display())));
    if c.state.field.cutoff() != sim.cutoff {
        return bad(format!("checkpoint cutoff {} differs from configured {}", c.state.field.cutoff(), sim.cutoff));
    }
    if c.alpha.to_bits() != sim.alpha.to_bits() {
        return bad(format!("checkpoint alpha {} differs from configured {}", c.alpha, sim.alpha));
    }
    if c.state.rng.seed() != sim.seed {
        return bad(format!("checkpoint seed {} differs from configured {}", c.state.rng.seed(), sim.seed));
    }
    if c.state.step > sim.steps() || c.state.step % sim.observe_every != 0 {
        return bad(format!("checkpoint step {} does not fit the configured run", c.state.step));
    }
    Ok(c.state)
}

fn simulate(cfg: &RunConfig, resume: Option<&Path>, ctx: &mut Context) -> Result<(), RunError> {
    let sim = cfg.sim_config();
    let stepper = Stepper::new(&sim, cfg.noise_spec()?)?;
    let obs = observable_set(cfg, &stepper)?;
    let mut state = match resume {
        Some(p) => resume_state(p, &stepper)?,
        None => stepper.initial_state(&cfg.initial_condition(), 0)?,
    };
    let total = sim.steps();
    let every = cfg.output.checkpoint_every;
    let mut header = vec!["time".to_string(), "step".to_string()];
    header.extend(obs.names());
    let mut table = Table::new(&header);
    let (mut max_cfl, mut violations) = (0.0f64, 0u64);
    let mut first = true;
    loop {
        let remaining = total - state.step;
        let n = if every > 0 { every.min(remaining) } else { remaining };
        match stepper.run(state, n, &obs) {
            Ok(traj) => {
                trajectory_rows(&mut table, &traj, !first);
                max_cfl = max_cfl.max(traj.max_cfl);
                violations += traj.cfl_violations;
                state = traj.final_state;
            }
            Err(failure) => {
                trajectory_rows(&mut table, &failure.partial, !first);
                ctx.write("observables.csv", &table)?;
                ctx.checkpoint("failure.sqgf", &Checkpoint { alpha: sim.alpha, state: failure.partial.final_state.clone() })?;
                return Err(RunError::Failed(failure.to_string()));
            }
        }
        first = false;
        if state.step >= total {
            break;
        }
        let c = Checkpoint { alpha: sim.alpha, state: state.clone() };
        ctx.checkpoint(&format!("checkpoint_{:010}.sqgf", state.step), &c)?;
    }
    ctx.write("observables.csv", &table)?;
    ctx.checkpoint("final.sqgf", &Checkpoint { alpha: sim.alpha, state: state.clone() })?;
    ctx.summary.push(format!("reached t = {} after {} steps", state.time, state.step));
    if sim.enable_advection && sim.monitor_cfl {
        ctx.summary.push(format!("max CFL {max_cfl:.3}, {violations} observations above {}", sim.cfl_limit));
    }
    Ok(())
}

fn opt_cell(x: Option<f64>) -> Cell {
    x.map_or(Cell::S(String::new()), Cell::F)
}

fn ensemble(cfg: &RunConfig, ctx: &mut Context) -> Result<(), RunError> {
    let sim = cfg.sim_config();
    let noise = cfg.noise_spec()?;
    let stepper = Stepper::new(&sim, noise.clone())?;
    let obs = observable_set(cfg, &stepper)?;
    let result = run_ensemble(&sim, noise.clone(), &cfg.initial_condition(), &obs, 0)?;
    let stats = &result.stats;
    let mut header = vec!["time".to_string()];
    for n in &stats.names {
        header.push(format!("{n}_mean"));
        header.push(format!("{n}_se"));
    }
    let mut table = Table::new(&header);
    for t in 0..stats.times.len() {
        let mut row = vec![Cell::F(stats.times[t])];
        for i in 0..stats.names.len() {
            row.push(stats.mean[i][t].into());
            row.push(stats.se[i][t].into());
        }
        table.push(row);
    }
    ctx.write("ensemble.csv", &table)?;

    let members: Vec<Trajectory> = result.successes().into_iter().cloned().collect();
    for (i, f) in result.failures() {
        ctx.summary.push(format!("member {i} failed: {f}"));
    }
    if members.is_empty() {
        return Err(RunError::Failed("every ensemble member failed".into()));
    }
    let names = obs.names();
    let recorded = |id: &BalanceIdentity| id.required_observables().iter().all(|o| names.contains(&o.name()));
    let mut identities = vec![BalanceIdentity::L2, BalanceIdentity::HMinusHalf];
    identities.extend(cfg.ensemble.mass_powers.iter().map(|&q| BalanceIdentity::MassPower(q)));
    let mut table = Table::new(&[
        "identity",
        "t_start",
        "t_end",
        "lhs",
        "rhs",
        "residual",
        "monte_carlo_se",
        "corrected_residual",
        "corrected_se",
        "members",
    ]);
    if members[0].len() >= 2 {
        for id in identities.iter().filter(|id| recorded(id)) {
            let r = ito_residual(*id, &members, &noise, sim.alpha)?;
            let (best, se) = r.best();
            ctx.summary.push(format!("{}: residual {best:.3e} ± {se:.3e}", r.identity));
            table.push(vec![
                r.identity.into(),
                r.t_start.into(),
                r.t_end.into(),
                r.lhs.into(),
                r.rhs.into(),
                r.residual.into(),
                r.monte_carlo_se.into(),
                opt_cell(r.corrected_residual),
                opt_cell(r.corrected_se),
                r.members.into(),
            ]);
        }
    }
    ctx.write("balance.csv", &table)
}

fn moments_rows(table: &mut Table, prefix: &[Cell], run: &StationaryRun) {
    for (name, e) in run.ledger.summary() {
        let mut row = prefix.to_vec();
        row.extend([name.into(), e.mean.into(), e.se.into(), e.count.into()]);
        table.push(row);
    }
}

fn residual_rows(table: &mut Table, prefix: &[Cell], run: &StationaryRun) {
    for r in &run.residuals {
        let mut row = prefix.to_vec();
        row.extend([
            r.id.clone().into(),
            r.observable.clone().into(),
            r.estimate.mean.into(),
            r.estimate.se.into(),
            r.target.into(),
            r.residual.into(),
            r.relative().into(),
        ]);
        table.push(row);
    }
}

const MOMENT_COLUMNS: [&str; 4] = ["observable", "mean", "se", "count"];
const RESIDUAL_COLUMNS: [&str; 7] = ["id", "observable", "estimate", "se", "target", "residual", "relative"];

fn stationary(cfg: &RunConfig, ctx: &mut Context) -> Result<(), RunError> {
    let sim = cfg.sim_config();
    let noise = cfg.noise_spec()?;
    let stepper = Stepper::new(&sim, noise.clone())?;
    let obs = observable_set(cfg, &stepper)?;
    let run = run_stationary(&sim, &noise, &cfg.initial_condition(), &obs, &cfg.stationary_plan(), 0)?;
    for (i, e) in &run.failures {
        ctx.summary.push(format!("member {i} failed: {e}"));
    }
    ctx.summary.push(format!("horizon {} with burn-in {}", run.config.horizon, run.burn_in));
    let mut table = Table::new(&MOMENT_COLUMNS);
    moments_rows(&mut table, &[], &run);
    ctx.write("moments.csv", &table)?;
    let mut table = Table::new(&RESIDUAL_COLUMNS);
    residual_rows(&mut table, &[], &run);
    ctx.write("residuals.csv", &table)?;
    for r in &run.residuals {
        ctx.summary.push(format!("{}: {:+.2}% ({:.2} SE)", r.id, 100.0 * r.relative(), r.residual / r.estimate.se));
    }

    let mut atoms = Table::new(&["observable", "samples", "max_mass_h", "max_mass_h2", "max_mass_h4", "degenerate", "atom"]);
    for name in &cfg.stationary.histograms {
        let samples = run.ledger.samples(name)?;
        let spec = HistogramSpec { observable: name.clone(), bins: cfg.bin_rule() };
        let check = match histogram_atom_check(samples, &spec) {
            Ok(c) => c,
            Err(e) => {
                ctx.summary.push(format!("histogram of {name} skipped: {e}"));
                continue;
            }
        };
        let mut hist = Table::new(&["bin_left", "bin_right", "mass"]);
        for (l, r, m) in check.histogram.rows() {
            hist.push(vec![l.into(), r.into(), m.into()]);
        }
        ctx.write(&format!("histogram_{name}.csv"), &hist)?;
        let m = check.max_mass;
        atoms.push(vec![
            name.clone().into(),
            samples.len().into(),
            m[0].into(),
            m[1].into(),
            m[2].into(),
            check.degenerate.into(),
            check.atom.into(),
        ]);
    }
    ctx.write("atoms.csv", &atoms)
}

fn sweep(cfg: &RunConfig, ctx: &mut Context) -> Result<(), RunError> {
    let sim = cfg.sim_config();
    let noise = cfg.noise_spec()?;
    let stepper = Stepper::new(&sim, noise.clone())?;
    let obs = observable_set(cfg, &stepper)?;
    let result = inviscid_sweep(
        &sim,
        &noise,
        &cfg.initial_condition(),
        &obs,
        &cfg.sweep.alphas,
        &cfg.stationary_plan(),
        0,
    )?;
    let mut moments = Table::new(&[&["alpha"][..], &MOMENT_COLUMNS].concat());
    let mut residuals = Table::new(&[&["alpha"][..], &RESIDUAL_COLUMNS].concat());
    for row in &result.rows {
        match &row.run {
            Ok(run) => {
                moments_rows(&mut moments, &[row.alpha.into()], run);
                residual_rows(&mut residuals, &[row.alpha.into()], run);
            }
            Err(e) => ctx.summary.push(format!("alpha {} failed: {e}", row.alpha)),
        }
    }
    ctx.write("sweep.csv", &moments)?;
    ctx.write("residuals.csv", &residuals)?;
    let mut bounds = Table::new(&["observable", "rows", "bound", "trend", "trend_se", "growing"]);
    for name in obs.names() {
        let col = result.column(&name);
        if let Ok(b) = uniform_bound(&col) {
            bounds.push(vec![
                name.into(),
                col.len().into(),
                b.bound.into(),
                b.trend.into(),
                b.trend_se.into(),
                b.growing.into(),
            ]);
        }
    }
    ctx.write("bounds.csv", &bounds)?;
    if result.rows.iter().all(|r| r.run.is_err()) {
        return Err(RunError::Failed("every sweep row failed".into()));
    }
    Ok(())
}

fn sandbox(cfg: &RunConfig, ctx: &mut Context) -> Result<(), RunError> {
    let sys = cfg.sandbox_system();
    let mut observables = SandboxObservable::second_moments(sys.n);
    observables.extend([SandboxObservable::Energy, SandboxObservable::InsideUnitBall]);
    let mut table = Table::new(&["system", "alpha", "observable", "mean", "se", "oracle", "z_score"]);
    for sb in cfg.sandbox_configs() {
        let rep = stationary_compare(&sys, &sb, &observables)?;
        let worst = rep.rows.iter().map(|r| r.z_score().abs()).fold(0.0, f64::max);
        ctx.summary.push(format!("{} alpha {}: worst |z| {worst:.2}", rep.system, rep.alpha));
        for r in &rep.rows {
            table.push(vec![
                rep.system.clone().into(),
                rep.alpha.into(),
                r.observable.clone().into(),
                r.estimate.mean.into(),
                r.estimate.se.into(),
                r.oracle.into(),
                r.z_score().into(),
            ]);
        }
    }
    ctx.write("sandbox.csv", &table)
}

fn verify(cfg: &RunConfig, opts: &RunOptions, ctx: &mut Context) -> Result<(), RunError> {
    let vopts = VerifyOptions { criteria: cfg.verify.criteria.clone(), scratch: opts.out.join("scratch"), threads: opts.threads };
    let results = run_criteria(&vopts, |r| println!("{}", r.line()));
    let mut table = Table::new(&["criterion", "title", "passed", "seconds", "details"]);
    for r in &results {
        table.push(vec![
            (r.number as u64).into(),
            r.title.into(),
            r.passed.into(),
            r.seconds.into(),
            r.details.join("; ").into(),
        ]);
        ctx.summary.push(r.line());
    }
    ctx.passed = results.iter().all(|r| r.passed);
    ctx.write("verify.csv", &table)
}
