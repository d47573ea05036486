//! Finite-dimensional fluctuation–dissipation system
//! `dx = (−∂_yH − α∂_xH)dt + √(2α)dβ₁`, `dy = (∂_xH − α∂_yH)dt + √(2α)dβ₂`,
//! whose invariant density `e^{−H}/T` does not depend on `α`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Result, SqgError};
use crate::forcing::RngStream;
use crate::stats::{batch_means, batch_se, Estimate, RunningMoments};

/// Built-in Hamiltonians on `ℝⁿ × ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// `(|x|² + |y|²)/2`
    Quadratic,
    /// `Σ (x⁴ + y⁴)/4 + (|x|² + |y|²)/2`
    Quartic,
    /// `½((|x|² + |y|² − 1)₊)²`, flat on the unit ball.
    Plateau,
}

impl SystemKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(Self::Quadratic),
            "quartic" => Ok(Self::Quartic),
            "plateau" => Ok(Self::Plateau),
            other => Err(SqgError::Configuration(format!("unknown sandbox system '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadratic => "quadratic",
            Self::Quartic => "quartic",
            Self::Plateau => "plateau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSystem {
    pub kind: SystemKind,
    pub n: usize,
}

impl HamiltonianSystem {
    pub fn new(kind: SystemKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SqgError::Configuration("sandbox dimension n must be at least 1".into()));
        }
        Ok(Self { kind, n })
    }

    fn check(&self, x: &[f64], y: &[f64]) {
        assert!(x.len() == self.n && y.len() == self.n, "state dimension mismatch");
    }

    pub fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        self.check(x, y);
        let r2: f64 = x.iter().chain(y).map(|v| v * v).sum();
        match self.kind {
            SystemKind::Quadratic => 0.5 * r2,
            SystemKind::Quartic => x.iter().chain(y).map(|v| 0.25 * v.powi(4)).sum::<f64>() + 0.5 * r2,
            SystemKind::Plateau => 0.5 * (r2 - 1.0).max(0.0).powi(2),
        }
    }

    /// `(∂_xH, ∂_yH)`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.check(x, y);
        match self.kind {
            SystemKind::Quadratic => (x.to_vec(), y.to_vec()),
            SystemKind::Quartic => {
                let g = |v: &f64| v * v * v + v;
                (x.iter().map(g).collect(), y.iter().map(g).collect())
            }
            SystemKind::Plateau => {
                let r2: f64 = x.iter().chain(y).map(|v| v * v).sum();
                let c = 2.0 * (r2 - 1.0).max(0.0);
                (x.iter().map(|v| c * v).collect(), y.iter().map(|v| c * v).collect())
            }
        }
    }

    /// `H(x, y) = V(x) + V(y)` with the same one-dimensional `V`.
    pub fn is_separable(&self) -> bool {
        !matches!(self.kind, SystemKind::Plateau)
    }

    /// Lower bound `H ≥ g(|z|)` used to size the quadrature box.
    fn radial_lower_bound(&self, r: f64) -> f64 {
        match self.kind {
            SystemKind::Quadratic | SystemKind::Quartic => 0.5 * r * r,
            SystemKind::Plateau => 0.5 * (r * r - 1.0).max(0.0).powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SandboxScheme {
    EulerMaruyama,
    /// Strang splitting: half an Euler–Maruyama dissipation step, a
    /// Störmer–Verlet Hamiltonian step, half a dissipation step. Needs a
    /// separable `H`.
    #[default]
    Splitting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxConfig {
    pub alpha: f64,
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub ensemble: usize,
    pub sample_every: u64,
    pub scheme: SandboxScheme,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            dt: 0.01,
            horizon: 1000.0,
            burn_in: 100.0,
            seed: 0,
            ensemble: 4,
            sample_every: 10,
            scheme: SandboxScheme::Splitting,
        }
    }
}

impl SandboxConfig {
    pub fn validate(&self, sys: &HamiltonianSystem) -> Result<()> {
        let bad = |m: &str| Err(SqgError::Configuration(m.into()));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("sandbox alpha must be >= 0");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("sandbox dt must be positive");
        }
        if !(self.horizon >= 0.0) || !(self.burn_in >= 0.0) || self.burn_in > self.horizon {
            return bad("sandbox needs 0 <= burn_in <= horizon");
        }
        if self.ensemble == 0 || self.sample_every == 0 {
            return bad("sandbox ensemble and sample_every must be positive");
        }
        if self.scheme == SandboxScheme::Splitting && !sys.is_separable() {
            return bad("the splitting scheme needs a separable Hamiltonian");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxState {
    pub time: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SandboxState {
    pub fn origin(n: usize) -> Self {
        Self { time: 0.0, x: vec![0.0; n], y: vec![0.0; n] }
    }
}

/// One Euler–Maruyama step.
pub fn fd_step(
    state: &SandboxState,
    sys: &HamiltonianSystem,
    alpha: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<SandboxState> {
    let (gx, gy) = sys.gradient(&state.x, &state.y);
    let sd = (2.0 * alpha * dt).sqrt();
    let mut x = state.x.clone();
    let mut y = state.y.clone();
    for i in 0..sys.n {
        x[i] += (-gy[i] - alpha * gx[i]) * dt + sd * rng.normal();
        y[i] += (gx[i] - alpha * gy[i]) * dt + sd * rng.normal();
    }
    finish(x, y, state.time + dt)
}

fn finish(x: Vec<f64>, y: Vec<f64>, time: f64) -> Result<SandboxState> {
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(SqgError::Divergence { time, reason: "non-finite sandbox state".into() });
    }
    Ok(SandboxState { time, x, y })
}

/// One Strang-split step (separable `H` only).
pub fn split_step(
    state: &SandboxState,
    sys: &HamiltonianSystem,
    alpha: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<SandboxState> {
    let dv = |v: f64| match sys.kind {
        SystemKind::Quartic => v * v * v + v,
        _ => v,
    };
    let sd = (alpha * dt).sqrt();
    let dissipate = |v: &mut [f64], rng: &mut RngStream| {
        for vi in v.iter_mut() {
            *vi += -alpha * dv(*vi) * 0.5 * dt + sd * rng.normal();
        }
    };
    let mut x = state.x.clone();
    let mut y = state.y.clone();
    dissipate(&mut x, rng);
    dissipate(&mut y, rng);
    for i in 0..sys.n {
        x[i] -= 0.5 * dt * dv(y[i]);
        y[i] += dt * dv(x[i]);
        x[i] -= 0.5 * dt * dv(y[i]);
    }
    dissipate(&mut x, rng);
    dissipate(&mut y, rng);
    finish(x, y, state.time + dt)
}

/// Functions averaged in the sandbox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandboxObservable {
    /// `x_i x_j`
    XX(usize, usize),
    /// `y_i y_j`
    YY(usize, usize),
    /// `x_i y_j`
    XY(usize, usize),
    Energy,
    /// Indicator of `|x|² + |y|² < 1`.
    InsideUnitBall,
}

impl SandboxObservable {
    pub fn name(&self) -> String {
        match self {
            Self::XX(i, j) => format!("x{i}*x{j}"),
            Self::YY(i, j) => format!("y{i}*y{j}"),
            Self::XY(i, j) => format!("x{i}*y{j}"),
            Self::Energy => "H".into(),
            Self::InsideUnitBall => "ball".into(),
        }
    }

    pub fn eval(&self, sys: &HamiltonianSystem, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::XX(i, j) => x[i] * x[j],
            Self::YY(i, j) => y[i] * y[j],
            Self::XY(i, j) => x[i] * y[j],
            Self::Energy => sys.energy(x, y),
            Self::InsideUnitBall => {
                let r2: f64 = x.iter().chain(y).map(|v| v * v).sum();
                if r2 < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// All second moments of an `n`-dimensional system.
    pub fn second_moments(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                out.push(Self::XX(i, j));
                out.push(Self::YY(i, j));
            }
            for j in 0..n {
                out.push(Self::XY(i, j));
            }
        }
        out
    }
}

const BOX_POINT_BUDGET: f64 = 2e7;
const MAX_POINTS_PER_AXIS: usize = 401;
const TAIL_TOLERANCE: f64 = 1e-8;

/// `∫ F e^{−H} / ∫ e^{−H}` by tensor trapezoid quadrature on `[−L, L]^{2n}`.
pub fn gibbs_oracle(sys: &HamiltonianSystem, observable: impl Fn(&[f64], &[f64]) -> f64) -> Result<f64> {
    let dim = 2 * sys.n;
    if sys.n > 3 {
        return Err(SqgError::Quadrature(format!("tensor quadrature supports n <= 3, got {}", sys.n)));
    }
    let p = (BOX_POINT_BUDGET.powf(1.0 / dim as f64).floor() as usize).min(MAX_POINTS_PER_AXIS);
    let p = if p % 2 == 0 { p - 1 } else { p };
    let half_width = box_half_width(sys, p)?;
    let h = 2.0 * half_width / (p - 1) as f64;
    let nodes: Vec<f64> = (0..p).map(|i| -half_width + i as f64 * h).collect();
    let mut idx = vec![0usize; dim];
    let mut z = vec![nodes[0]; dim];
    let (mut num, mut den) = (0.0, 0.0);
    loop {
        let (x, y) = z.split_at(sys.n);
        let w = (-sys.energy(x, y)).exp();
        if w > 0.0 {
            num += w * observable(x, y);
            den += w;
        }
        let mut d = 0;
        loop {
            if d == dim {
                if den <= 0.0 || !den.is_finite() {
                    return Err(SqgError::Quadrature("e^{-H} is not integrable on the box".into()));
                }
                return Ok(num / den);
            }
            idx[d] += 1;
            if idx[d] < p {
                z[d] = nodes[idx[d]];
                break;
            }
            idx[d] = 0;
            z[d] = nodes[0];
            d += 1;
        }
    }
}

/// Smallest box half-width whose inscribed ball leaves tail mass below
/// [`TAIL_TOLERANCE`], from the radial lower bound on `H`.
fn box_half_width(sys: &HamiltonianSystem, p: usize) -> Result<f64> {
    let dim = 2 * sys.n;
    let sphere = 2.0 * PI.powf(dim as f64 / 2.0) / gamma_half_int(dim);
    let radial = |r: f64| sphere * r.powi(dim as i32 - 1) * (-sys.radial_lower_bound(r)).exp();
    // coarse lower bound for the normalization from the unit cube
    let cube = {
        let q = 11;
        let mut total = 0.0;
        let mut idx = vec![0usize; dim];
        let hq = 1.0 / (q - 1) as f64;
        loop {
            let z: Vec<f64> = idx.iter().map(|i| -0.5 + *i as f64 * hq).collect();
            let (x, y) = z.split_at(sys.n);
            total += (-sys.energy(x, y)).exp() * hq.powi(dim as i32);
            let mut d = 0;
            while d < dim {
                idx[d] += 1;
                if idx[d] < q {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        total * 0.5
    };
    let mut l = 1.0;
    while l <= 50.0 {
        let tail = adaptive_simpson(&radial, l, l + 60.0, 1e-14, 40);
        if tail / cube < TAIL_TOLERANCE {
            let h = 2.0 * l / (p - 1) as f64;
            if h > 1.0 {
                return Err(SqgError::Quadrature(format!("box [-{l}, {l}] too wide for {p} nodes per axis")));
            }
            return Ok(l);
        }
        l += 0.25;
    }
    Err(SqgError::Quadrature("no box up to half-width 50 covers the Gibbs mass".into()))
}

fn gamma_half_int(dim: usize) -> f64 {
    // Γ(dim/2) for even dim
    (1..dim / 2).map(|k| k as f64).product()
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Empirical vs Gibbs average of one observable.
#[derive(Debug, Clone, PartialEq)]
pub struct SandboxRow {
    pub observable: String,
    pub estimate: Estimate,
    pub oracle: f64,
}

impl SandboxRow {
    pub fn z_score(&self) -> f64 {
        (self.estimate.mean - self.oracle) / self.estimate.se
    }

    pub fn within(&self, k: f64) -> bool {
        self.estimate.within(self.oracle, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxReport {
    pub system: String,
    pub alpha: f64,
    pub rows: Vec<SandboxRow>,
}

impl SandboxReport {
    pub fn row(&self, name: &str) -> Option<&SandboxRow> {
        self.rows.iter().find(|r| r.observable == name)
    }
}

/// Pooled post-burn-in time averages over an ensemble, with batch-means
/// standard errors (20 batches per member).
pub fn sample_averages(
    sys: &HamiltonianSystem,
    cfg: &SandboxConfig,
    observables: &[SandboxObservable],
) -> Result<Vec<Estimate>> {
    cfg.validate(sys)?;
    let steps = (cfg.horizon / cfg.dt).round() as u64;
    let burn = (cfg.burn_in / cfg.dt).round() as u64;
    let member = |m: usize| -> Result<(Vec<RunningMoments>, Vec<Vec<(f64, u64)>>)> {
        let mut rng = RngStream::new(cfg.seed, m as u64);
        let mut s = SandboxState::origin(sys.n);
        let mut series = vec![Vec::new(); observables.len()];
        for k in 1..=steps {
            s = match cfg.scheme {
                SandboxScheme::EulerMaruyama => fd_step(&s, sys, cfg.alpha, cfg.dt, &mut rng)?,
                SandboxScheme::Splitting => split_step(&s, sys, cfg.alpha, cfg.dt, &mut rng)?,
            };
            if k > burn && k % cfg.sample_every == 0 {
                for (o, v) in observables.iter().zip(series.iter_mut()) {
                    v.push(o.eval(sys, &s.x, &s.y));
                }
            }
        }
        if series.first().is_some_and(|v| v.len() < 2 * crate::measure::DEFAULT_BATCHES) {
            return Err(SqgError::Estimation("too few post-burn-in sandbox samples".into()));
        }
        Ok((
            series.iter().map(|v| v.iter().copied().collect()).collect(),
            series.iter().map(|v| batch_means(v, crate::measure::DEFAULT_BATCHES)).collect(),
        ))
    };
    let parts: Vec<_> = (0..cfg.ensemble).into_par_iter().map(member).collect::<Result<_>>()?;
    Ok((0..observables.len())
        .map(|i| {
            let mut m = RunningMoments::new();
            let mut b = Vec::new();
            for (pm, pb) in &parts {
                m.merge(&pm[i]);
                b.extend_from_slice(&pb[i]);
            }
            Estimate { mean: m.mean(), se: batch_se(&b), count: m.count() }
        })
        .collect())
}

/// Empirical stationary averages against the Gibbs oracle.
pub fn stationary_compare(
    sys: &HamiltonianSystem,
    cfg: &SandboxConfig,
    observables: &[SandboxObservable],
) -> Result<SandboxReport> {
    let est = sample_averages(sys, cfg, observables)?;
    let rows = observables
        .iter()
        .zip(est)
        .map(|(o, e)| {
            Ok(SandboxRow { observable: o.name(), estimate: e, oracle: gibbs_oracle(sys, |x, y| o.eval(sys, x, y))? })
        })
        .collect::<Result<_>>()?;
    Ok(SandboxReport { system: sys.kind.name().into(), alpha: cfg.alpha, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = RngStream::new(11, 0);
        for kind in [SystemKind::Quadratic, SystemKind::Quartic, SystemKind::Plateau] {
            let sys = HamiltonianSystem::new(kind, 2).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..2).map(|_| 1.5 * rng.normal()).collect();
                let y: Vec<f64> = (0..2).map(|_| 1.5 * rng.normal()).collect();
                let (gx, gy) = sys.gradient(&x, &y);
                let h = 1e-6;
                for i in 0..2 {
                    let fd = |dx: bool| {
                        let (mut xp, mut yp, mut xm, mut ym) = (x.clone(), y.clone(), x.clone(), y.clone());
                        if dx {
                            xp[i] += h;
                            xm[i] -= h;
                        } else {
                            yp[i] += h;
                            ym[i] -= h;
                        }
                        (sys.energy(&xp, &yp) - sys.energy(&xm, &ym)) / (2.0 * h)
                    };
                    let scale = gx[i].abs().max(1.0);
                    assert!((fd(true) - gx[i]).abs() <= 1e-6 * scale);
                    let scale = gy[i].abs().max(1.0);
                    assert!((fd(false) - gy[i]).abs() <= 1e-6 * scale);
                }
            }
        }
    }

    #[test]
    fn gibbs_oracle_gaussian_values() {
        let sys = HamiltonianSystem::new(SystemKind::Quadratic, 1).unwrap();
        assert_relative_eq!(gibbs_oracle(&sys, |_, _| 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gibbs_oracle(&sys, |x, _| x[0] * x[0]).unwrap(), 1.0, max_relative = 1e-8);
        let sys2 = HamiltonianSystem::new(SystemKind::Quadratic, 2).unwrap();
        assert_relative_eq!(gibbs_oracle(&sys2, |x, y| x[1] * y[0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(gibbs_oracle(&sys2, |_, y| y[1] * y[1]).unwrap(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn harmonic_step_rotates() {
        let sys = HamiltonianSystem::new(SystemKind::Quadratic, 1).unwrap();
        let mut rng = RngStream::new(0, 0);
        let s = SandboxState { time: 0.0, x: vec![1.0], y: vec![0.0] };
        let dt = 1e-3;
        let t = fd_step(&s, &sys, 0.0, dt, &mut rng).unwrap();
        assert_relative_eq!(t.y[0], dt);
        let drift = sys.energy(&t.x, &t.y) - sys.energy(&s.x, &s.y);
        assert!(drift.abs() <= dt * dt);
        let l = split_step(&s, &sys, 0.0, dt, &mut rng).unwrap();
        assert!((sys.energy(&l.x, &l.y) - 0.5).abs() <= dt * dt);
    }

    #[test]
    fn paths_are_reproducible() {
        let sys = HamiltonianSystem::new(SystemKind::Quartic, 1).unwrap();
        let cfg = SandboxConfig { horizon: 50.0, burn_in: 10.0, ensemble: 2, ..Default::default() };
        let a = sample_averages(&sys, &cfg, &[SandboxObservable::XX(0, 0)]).unwrap();
        let b = sample_averages(&sys, &cfg, &[SandboxObservable::XX(0, 0)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn splitting_rejects_plateau() {
        let sys = HamiltonianSystem::new(SystemKind::Plateau, 1).unwrap();
        assert!(SandboxConfig::default().validate(&sys).is_err());
    }
}
