//! Conserved quantities, dissipation functionals, Casimirs and Itô balance
//! residuals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SqgError};
use crate::forcing::NoiseSpec;
use crate::integrator::Trajectory;
use crate::spectral::{Grid, RealField, SpectralField};
use crate::stats::{trapezoid, RunningMoments};

const TORUS_AREA: f64 = 4.0 * PI * PI;

/// `M(θ) = ½ ∫ θ²`.
pub fn mass_m(field: &SpectralField) -> f64 {
    0.5 * field.l2_sq()
}

/// `E_{−1/2}(θ) = ½ ∫ |(−Δ)^{−1/4} θ|²`.
pub fn energy_minus_half(field: &SpectralField) -> f64 {
    0.5 * field.sobolev_sq(-0.5)
}

/// `∫ |Δθ|²`.
pub fn h2_dissipation(field: &SpectralField) -> f64 {
    field.sobolev_sq(2.0)
}

/// Mean of `f∘θ` over the torus, by quadrature on the padded grid.
pub fn casimir(field: &SpectralField, grid: &Grid, f: impl Fn(f64) -> f64) -> Result<f64> {
    Ok(grid.to_physical(field)?.map(f).integral() / TORUS_AREA)
}

/// Truncated Taylor series `Σ c_i h^i` up to fourth order.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet([f64; 5]);

impl Jet {
    fn constant(c: f64) -> Self {
        Jet([c, 0.0, 0.0, 0.0, 0.0])
    }

    fn variable(z: f64) -> Self {
        Jet([z, 1.0, 0.0, 0.0, 0.0])
    }

    fn add(self, o: Self) -> Self {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0) {
            *a += b;
        }
        Jet(c)
    }

    fn affine(self, a: f64, b: f64) -> Self {
        let mut c = self.0.map(|v| a * v);
        c[0] += b;
        Jet(c)
    }

    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; 5];
        for (n, cn) in c.iter_mut().enumerate() {
            *cn = (0..=n).map(|i| self.0[i] * o.0[n - i]).sum();
        }
        Jet(c)
    }

    fn div(self, o: Self) -> Self {
        let mut c = [0.0; 5];
        for n in 0..5 {
            let acc: f64 = (1..=n).map(|k| o.0[k] * c[n - k]).sum();
            c[n] = (self.0[n] - acc) / o.0[0];
        }
        Jet(c)
    }

    fn exp(self) -> Self {
        let mut c = [0.0; 5];
        c[0] = self.0[0].exp();
        for n in 1..5 {
            c[n] = (1..=n).map(|k| k as f64 * self.0[k] * c[n - k]).sum::<f64>() / n as f64;
        }
        Jet(c)
    }

    fn powi(self, p: u32) -> Self {
        (0..p).fold(Jet::constant(1.0), |acc, _| acc.mul(self))
    }

    fn derivative(&self, order: usize) -> f64 {
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0][order];
        self.0[order] * fact
    }
}

/// `σ(t) = e^{−1/t}` for `t > 0`, else 0.
fn sigma(t: Jet) -> Jet {
    if t.0[0] <= 0.0 {
        Jet::constant(0.0)
    } else {
        Jet::constant(-1.0).div(t).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: Jet) -> Jet {
    let a = sigma(t);
    let b = sigma(t.affine(-1.0, 1.0));
    a.div(a.add(b))
}

/// Bump equal to 1 on `[−1, 1]`, 0 outside `(−2, 2)`.
fn bump(z: Jet) -> Jet {
    let x = z.0[0];
    if x.abs() <= 1.0 {
        Jet::constant(1.0)
    } else if x.abs() >= 2.0 {
        Jet::constant(0.0)
    } else if x > 0.0 {
        smooth_step(z.affine(-1.0, 2.0))
    } else {
        smooth_step(z.affine(1.0, 2.0))
    }
}

/// `f_k(z) = z^{k+1} B(z)`: polynomial on `[−1, 1]`, compactly supported in
/// `[−2, 2]`, with bounded derivatives of every order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CasimirFunction {
    k: u32,
}

impl CasimirFunction {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(SqgError::Configuration("Casimir index starts at 1".into()));
        }
        Ok(Self { k })
    }

    pub fn index(&self) -> u32 {
        self.k
    }

    fn jet(&self, z: f64) -> Jet {
        let v = Jet::variable(z);
        v.powi(self.k + 1).mul(bump(v))
    }

    pub fn value(&self, z: f64) -> f64 {
        self.jet(z).0[0]
    }

    /// `f_k^{(order)}(z)` for `order ≤ 4`.
    pub fn derivative(&self, z: f64, order: usize) -> f64 {
        assert!(order <= 4, "derivatives are available up to fourth order");
        self.jet(z).derivative(order)
    }
}

/// The family `f_1, …, f_n`.
pub fn casimir_family(n: usize) -> Vec<CasimirFunction> {
    (1..=n as u32).map(|k| CasimirFunction { k }).collect()
}

/// The two pieces of `‖θ‖²_{H^{3/2}} ± ∫|∇θ|²∇θ·∇(−Δ)^{−1/2}θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationI {
    pub quadratic: f64,
    pub cubic: f64,
}

impl DissipationI {
    /// Sign produced by the Itô drift of `‖θ‖²_{H^{−1/2}}`.
    pub fn derived(&self) -> f64 {
        self.quadratic + self.cubic
    }

    /// Opposite sign on the cubic term.
    pub fn printed(&self) -> f64 {
        self.quadratic - self.cubic
    }
}

pub fn dissipation_i(field: &SpectralField, grid: &Grid) -> Result<DissipationI> {
    let kin = grid.kinematics(field, false)?;
    let psi = field.fractional_laplacian(-0.5);
    let px = grid.to_physical(&psi.dx())?;
    let py = grid.to_physical(&psi.dy())?;
    Ok(DissipationI { quadratic: field.sobolev_sq(1.5), cubic: cubic_pairing(&kin.tx, &kin.ty, &px, &py) })
}

fn cubic_pairing(tx: &RealField, ty: &RealField, px: &RealField, py: &RealField) -> f64 {
    let h = 2.0 * PI / tx.len() as f64;
    tx.samples()
        .iter()
        .zip(ty.samples())
        .zip(px.samples().iter().zip(py.samples()))
        .map(|((a, b), (c, d))| (a * a + b * b) * (a * c + b * d))
        .sum::<f64>()
        * h
        * h
}

/// Scalar observable `θ ↦ ℝ` with a stable string identifier.
#[derive(Clone)]
pub enum Observable {
    /// `"M"`
    Mass,
    /// `"E_mhalf"`
    EnergyMinusHalf,
    /// `"H2_diss"`: `∫|Δθ|²`
    H2Diss,
    /// `"W14_diss"`: `∫|∇θ|⁴`
    W14Diss,
    /// `"I_diss"` with the derived sign
    IDiss,
    /// `"I_diss_printed"`
    IDissPrinted,
    /// `"casimir_<k>"`
    Casimir(u32),
    /// `"Hs_<s>"`: `∫|(−Δ)^{s/2}θ|²`
    Sobolev(f64),
    /// `"L2_sq"`: `∫θ²`
    L2Sq,
    /// `"Hmhalf_sq"`: `‖θ‖²_{H^{−1/2}}`
    HMinusHalfSq,
    /// `"diss_sum"`: `∫|Δθ|² + ∫|∇θ|⁴`
    DissSum,
    /// `"noise_proj"`: `Σ a_j² (∫θ e_j)²`
    NoiseProjection,
    /// `"Mq_diss_<q>"`: `M^{q−1}(∫|Δθ|² + ∫|∇θ|⁴)`
    MassWeightedDiss(u32),
    /// `"powerq_gap_<q>"`: `M^{q−1}·diss − (A_0/2)M^{q−1} − ((q−1)/2)M^{q−2}·noise_proj`
    PowerQGap(u32),
    /// Arbitrary user evaluator.
    Custom(String, Arc<dyn Fn(&SpectralField) -> f64 + Send + Sync>),
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Mass => "M".into(),
            Observable::EnergyMinusHalf => "E_mhalf".into(),
            Observable::H2Diss => "H2_diss".into(),
            Observable::W14Diss => "W14_diss".into(),
            Observable::IDiss => "I_diss".into(),
            Observable::IDissPrinted => "I_diss_printed".into(),
            Observable::Casimir(k) => format!("casimir_{k}"),
            Observable::Sobolev(s) => format!("Hs_{s}"),
            Observable::L2Sq => "L2_sq".into(),
            Observable::HMinusHalfSq => "Hmhalf_sq".into(),
            Observable::DissSum => "diss_sum".into(),
            Observable::NoiseProjection => "noise_proj".into(),
            Observable::MassWeightedDiss(q) => format!("Mq_diss_{q}"),
            Observable::PowerQGap(q) => format!("powerq_gap_{q}"),
            Observable::Custom(name, _) => name.clone(),
        }
    }

    /// Parses a registry identifier (custom observables cannot be parsed).
    pub fn parse(name: &str) -> Result<Self> {
        let simple = match name {
            "M" => Some(Observable::Mass),
            "E_mhalf" => Some(Observable::EnergyMinusHalf),
            "H2_diss" => Some(Observable::H2Diss),
            "W14_diss" => Some(Observable::W14Diss),
            "I_diss" => Some(Observable::IDiss),
            "I_diss_printed" => Some(Observable::IDissPrinted),
            "L2_sq" => Some(Observable::L2Sq),
            "Hmhalf_sq" => Some(Observable::HMinusHalfSq),
            "diss_sum" => Some(Observable::DissSum),
            "noise_proj" => Some(Observable::NoiseProjection),
            _ => None,
        };
        if let Some(o) = simple {
            return Ok(o);
        }
        let unknown = || SqgError::Configuration(format!("unknown observable '{name}'"));
        let positive = |s: &str| s.parse::<u32>().ok().filter(|q| *q >= 1).ok_or_else(unknown);
        if let Some(k) = name.strip_prefix("casimir_") {
            return Ok(Observable::Casimir(positive(k)?));
        }
        if let Some(q) = name.strip_prefix("Mq_diss_") {
            return Ok(Observable::MassWeightedDiss(positive(q)?));
        }
        if let Some(q) = name.strip_prefix("powerq_gap_") {
            return Ok(Observable::PowerQGap(positive(q)?));
        }
        if let Some(s) = name.strip_prefix("Hs_") {
            let s: f64 = s.parse().map_err(|_| unknown())?;
            if s.is_finite() {
                return Ok(Observable::Sobolev(s));
            }
        }
        Err(unknown())
    }

    fn needs_gradient(&self) -> bool {
        matches!(
            self,
            Observable::W14Diss
                | Observable::IDiss
                | Observable::IDissPrinted
                | Observable::DissSum
                | Observable::MassWeightedDiss(_)
                | Observable::PowerQGap(_)
        )
    }

    fn needs_cubic(&self) -> bool {
        matches!(self, Observable::IDiss | Observable::IDissPrinted)
    }
}

/// Evaluates a list of observables sharing one set of physical-space
/// transforms per field.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    observables: Vec<Observable>,
    grid: Grid,
    noise: NoiseSpec,
    a0: f64,
}

impl ObservableSet {
    pub fn new(observables: Vec<Observable>, grid: Grid, noise: NoiseSpec) -> Self {
        let a0 = noise.spectral_sum(0.0);
        Self { observables, grid, noise, a0 }
    }

    pub fn from_names(names: &[&str], grid: Grid, noise: NoiseSpec) -> Result<Self> {
        let obs = names.iter().map(|n| Observable::parse(n)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(obs, grid, noise))
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(Observable::name).collect()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn evaluate(&self, field: &SpectralField) -> Result<Vec<f64>> {
        let need_grad = self.observables.iter().any(Observable::needs_gradient);
        let need_cubic = self.observables.iter().any(Observable::needs_cubic);
        let need_phys = self.observables.iter().any(|o| matches!(o, Observable::Casimir(_)));

        let (w14, cubic) = if need_grad {
            let kin = self.grid.kinematics(field, false)?;
            let w14 = kin.tx.zip_map(&kin.ty, |a, b| (a * a + b * b).powi(2)).integral();
            let cubic = if need_cubic {
                let psi = field.fractional_laplacian(-0.5);
                let px = self.grid.to_physical(&psi.dx())?;
                let py = self.grid.to_physical(&psi.dy())?;
                cubic_pairing(&kin.tx, &kin.ty, &px, &py)
            } else {
                f64::NAN
            };
            (w14, cubic)
        } else {
            (f64::NAN, f64::NAN)
        };
        let phys = if need_phys { Some(self.grid.to_physical(field)?) } else { None };

        let m = mass_m(field);
        let h2 = h2_dissipation(field);
        let weighted = |q: u32| m.powi(q as i32 - 1) * (h2 + w14);
        let out = self
            .observables
            .iter()
            .map(|o| match o {
                Observable::Mass => m,
                Observable::EnergyMinusHalf => energy_minus_half(field),
                Observable::H2Diss => h2,
                Observable::W14Diss => w14,
                Observable::IDiss => field.sobolev_sq(1.5) + cubic,
                Observable::IDissPrinted => field.sobolev_sq(1.5) - cubic,
                Observable::Casimir(k) => {
                    let f = CasimirFunction { k: *k };
                    phys.as_ref().expect("computed above").map(|z| f.value(z)).integral() / TORUS_AREA
                }
                Observable::Sobolev(s) => field.sobolev_sq(*s),
                Observable::L2Sq => field.l2_sq(),
                Observable::HMinusHalfSq => field.sobolev_sq(-0.5),
                Observable::DissSum => h2 + w14,
                Observable::NoiseProjection => self.noise.projection_energy(field),
                Observable::MassWeightedDiss(q) => weighted(*q),
                Observable::PowerQGap(q) => {
                    let qf = *q as f64;
                    let forcing = 0.5 * self.a0 * m.powi(*q as i32 - 1)
                        + if *q >= 2 {
                            0.5 * (qf - 1.0) * m.powi(*q as i32 - 2) * self.noise.projection_energy(field)
                        } else {
                            0.0
                        };
                    weighted(*q) - forcing
                }
                Observable::Custom(_, f) => f(field),
            })
            .collect();
        Ok(out)
    }
}

/// Which Itô balance to check along an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BalanceIdentity {
    /// `E‖θ(t)‖² + 2α∫E(‖Δθ‖² + ∫|∇θ|⁴) = E‖θ₀‖² + αA₀t`
    L2,
    /// `E‖θ(t)‖²_{H^{−1/2}} + 2α∫E[I(θ)] = E‖θ₀‖²_{H^{−1/2}} + αA_{−1/2}t`
    HMinusHalf,
    /// Balance for `E M^q` including the quadratic-variation term.
    MassPower(u32),
}

impl BalanceIdentity {
    pub fn id(&self) -> String {
        match self {
            BalanceIdentity::L2 => "l2_balance".into(),
            BalanceIdentity::HMinusHalf => "h_minus_half_balance".into(),
            BalanceIdentity::MassPower(q) => format!("mass_power_balance_q{q}"),
        }
    }

    /// Observables the ensemble must record.
    pub fn required_observables(&self) -> Vec<Observable> {
        match self {
            BalanceIdentity::L2 => vec![Observable::L2Sq, Observable::DissSum],
            BalanceIdentity::HMinusHalf => vec![Observable::HMinusHalfSq, Observable::IDiss],
            BalanceIdentity::MassPower(_) => {
                vec![Observable::Mass, Observable::DissSum, Observable::NoiseProjection]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub identity: String,
    pub t_start: f64,
    pub t_end: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub monte_carlo_se: f64,
    /// Residual after subtracting the recorded discrete martingale (same
    /// expectation, much smaller variance), when one is available.
    pub corrected_residual: Option<f64>,
    pub corrected_se: Option<f64>,
    pub members: usize,
}

impl BalanceReport {
    /// The sharpest available `(residual, se)` pair.
    pub fn best(&self) -> (f64, f64) {
        match (self.corrected_residual, self.corrected_se) {
            (Some(r), Some(s)) => (r, s),
            _ => (self.residual, self.monte_carlo_se),
        }
    }
}

fn series<'a>(t: &'a Trajectory, name: &str) -> Result<&'a [f64]> {
    t.series(name).ok_or_else(|| {
        SqgError::Configuration(format!("trajectory does not record observable '{name}'"))
    })
}

fn uniform_spacing(t: &Trajectory) -> Result<f64> {
    if t.times.len() < 2 {
        return Err(SqgError::Estimation("balance needs at least two observations".into()));
    }
    let h = t.times[1] - t.times[0];
    for w in t.times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(SqgError::Configuration(format!(
                "observation stride does not divide the window (spacing {} vs {h})",
                w[1] - w[0]
            )));
        }
    }
    Ok(h)
}

/// Residual of an Itô balance over the full recorded window of each member.
pub fn ito_residual(
    identity: BalanceIdentity,
    members: &[Trajectory],
    noise: &NoiseSpec,
    alpha: f64,
) -> Result<BalanceReport> {
    if members.is_empty() {
        return Err(SqgError::Estimation("no ensemble members".into()));
    }
    let h = uniform_spacing(&members[0])?;
    let (t_start, t_end) = (members[0].times[0], *members[0].times.last().expect("non-empty"));
    let window = t_end - t_start;

    let mut lhs = RunningMoments::new();
    let mut rhs = RunningMoments::new();
    let mut raw = RunningMoments::new();
    let mut corrected = RunningMoments::new();
    let mut has_martingale = true;

    for t in members {
        let ht = uniform_spacing(t)?;
        if (ht - h).abs() > 1e-12 * h || t.times.len() != members[0].times.len() {
            return Err(SqgError::Configuration("members use different observation strides".into()));
        }
        let (l, r, mart) = match identity {
            BalanceIdentity::L2 => {
                let f = series(t, "L2_sq")?;
                let d = series(t, "diss_sum")?;
                let l = f[f.len() - 1] + 2.0 * alpha * trapezoid(d, h);
                let r = f[0] + alpha * noise.spectral_sum(0.0) * window;
                (l, r, t.martingale_l2.last().copied())
            }
            BalanceIdentity::HMinusHalf => {
                let f = series(t, "Hmhalf_sq")?;
                let d = series(t, "I_diss")?;
                let l = f[f.len() - 1] + 2.0 * alpha * trapezoid(d, h);
                let r = f[0] + alpha * noise.spectral_sum(-0.5) * window;
                (l, r, t.martingale_hm.last().copied())
            }
            BalanceIdentity::MassPower(q) => {
                if q == 0 {
                    return Err(SqgError::Configuration("q must be at least 1".into()));
                }
                let m = series(t, "M")?;
                let d = series(t, "diss_sum")?;
                let s = series(t, "noise_proj")?;
                let qi = q as i32;
                let qf = q as f64;
                let a0 = noise.spectral_sum(0.0);
                let diss: Vec<f64> = m.iter().zip(d).map(|(m, d)| qf * m.powi(qi - 1) * d).collect();
                let forcing: Vec<f64> = m
                    .iter()
                    .zip(s)
                    .map(|(m, s)| {
                        let extra = if q >= 2 { (qf - 1.0) * m.powi(qi - 2) * s } else { 0.0 };
                        0.5 * qf * (a0 * m.powi(qi - 1) + extra)
                    })
                    .collect();
                let l = m[m.len() - 1].powi(qi) + alpha * trapezoid(&diss, h);
                let r = m[0].powi(qi) + alpha * trapezoid(&forcing, h);
                let mart = if q == 1 { t.martingale_l2.last().map(|v| 0.5 * v) } else { None };
                (l, r, mart)
            }
        };
        lhs.push(l);
        rhs.push(r);
        raw.push(l - r);
        match mart {
            Some(mv) if mv.is_finite() => corrected.push(l - r - mv),
            _ => has_martingale = false,
        }
    }

    let n = members.len();
    let (corrected_residual, corrected_se) = if has_martingale {
        (Some(corrected.mean()), Some(if n >= 2 { corrected.std_error() } else { f64::NAN }))
    } else {
        (None, None)
    };
    Ok(BalanceReport {
        identity: identity.id(),
        t_start,
        t_end,
        lhs: lhs.mean(),
        rhs: rhs.mean(),
        residual: raw.mean(),
        monte_carlo_se: if n >= 2 { raw.std_error() } else { f64::NAN },
        corrected_residual,
        corrected_se,
        members: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GridSpec, WaveVector};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn cos_mode(n: usize, kx: i32, amp: f64) -> SpectralField {
        let mut f = SpectralField::zeros(n);
        f.set(WaveVector::new(kx, 0), Complex64::new(0.5 * amp, 0.0)).unwrap();
        f
    }

    #[test]
    fn conserved_quantities_closed_forms() {
        assert_relative_eq!(mass_m(&cos_mode(3, 1, 1.0)), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(energy_minus_half(&cos_mode(3, 1, 1.0)), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(energy_minus_half(&cos_mode(3, 2, 1.0)), PI * PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn casimir_moments_of_cos() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        let f = cos_mode(4, 1, 1.0);
        assert_relative_eq!(casimir(&f, &grid, |z| z * z).unwrap(), 0.5, max_relative = 1e-14);
        assert!(casimir(&f, &grid, |z| z * z * z).unwrap().abs() < 1e-15);
        assert_relative_eq!(casimir(&f, &grid, |z| z.powi(4)).unwrap(), 0.375, max_relative = 1e-14);
    }

    #[test]
    fn casimir_family_shape() {
        let fam = casimir_family(4);
        assert_eq!(fam.len(), 4);
        assert_eq!(fam[1].value(0.5), 0.125);
        for f in &fam {
            assert_eq!(f.value(3.0), 0.0);
            assert_eq!(f.value(-3.0), 0.0);
            assert_eq!(f.value(0.0), 0.0);
        }
        let f1 = fam[0];
        for z in [-1.9, -0.3, 0.01, 1.5] {
            assert!(f1.value(z) > 0.0);
        }
        assert_eq!(f1.derivative(0.0, 1), 0.0);
        assert_eq!(fam[2].derivative(0.5, 1), 4.0 * 0.125);
        assert!(CasimirFunction::new(0).is_err());
    }

    #[test]
    fn jet_matches_closed_form_exp() {
        // d^n/dz^n e^{2z} = 2^n e^{2z}
        let j = Jet::variable(0.3).affine(2.0, 0.0).exp();
        for n in 0..5 {
            assert_relative_eq!(j.derivative(n), 2f64.powi(n as i32) * 0.6f64.exp(), max_relative = 1e-14);
        }
        // 1/(1+z) at z=1: derivatives (−1)^n n!/2^{n+1}
        let r = Jet::constant(1.0).div(Jet::variable(1.0).affine(1.0, 1.0));
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for n in 0..5 {
            let expect = (-1f64).powi(n as i32) * fact[n] / 2f64.powi(n as i32 + 1);
            assert_relative_eq!(r.derivative(n), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn dissipation_i_closed_form() {
        let grid = Grid::new(GridSpec::dealiased(5).unwrap());
        assert_eq!(dissipation_i(&SpectralField::zeros(5), &grid).unwrap().derived(), 0.0);
        let d = dissipation_i(&cos_mode(5, 1, 1.0), &grid).unwrap();
        assert_relative_eq!(d.quadratic, 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(d.cubic, 1.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(d.derived(), 3.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(d.printed(), 0.5 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn dissipation_i_homogeneity() {
        let grid = Grid::new(GridSpec::dealiased(5).unwrap());
        let eps = [1.0, 0.5, 0.25];
        let parts: Vec<_> = eps.iter().map(|&e| dissipation_i(&cos_mode(5, 1, e), &grid).unwrap()).collect();
        let slope = |f: &dyn Fn(&DissipationI) -> f64| {
            let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let ys: Vec<f64> = parts.iter().map(|p| f(p).ln()).collect();
            let xm = xs.iter().sum::<f64>() / 3.0;
            let ym = ys.iter().sum::<f64>() / 3.0;
            let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
            let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
            num / den
        };
        assert_relative_eq!(slope(&|p| p.quadratic), 2.0, max_relative = 1e-10);
        assert_relative_eq!(slope(&|p| p.cubic), 4.0, max_relative = 1e-10);
    }

    #[test]
    fn observable_registry_round_trips() {
        for name in [
            "M", "E_mhalf", "H2_diss", "W14_diss", "I_diss", "I_diss_printed", "casimir_3", "Hs_1.5",
            "L2_sq", "Hmhalf_sq", "diss_sum", "noise_proj", "Mq_diss_2", "powerq_gap_3",
        ] {
            assert_eq!(Observable::parse(name).unwrap().name(), name);
        }
        for bad in ["casimir_0", "foo", "Hs_x", "powerq_gap_", "Mq_diss_-1"] {
            assert!(Observable::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn observable_set_matches_direct_evaluators() {
        let grid = Grid::new(GridSpec::dealiased(6).unwrap());
        let noise = NoiseSpec::default_for_cutoff(6);
        let set = ObservableSet::from_names(
            &["M", "E_mhalf", "H2_diss", "W14_diss", "I_diss", "casimir_1", "diss_sum", "powerq_gap_1"],
            grid.clone(),
            noise.clone(),
        )
        .unwrap();
        let f = cos_mode(6, 1, 0.8);
        let v = set.evaluate(&f).unwrap();
        assert_relative_eq!(v[0], mass_m(&f));
        assert_relative_eq!(v[1], energy_minus_half(&f));
        assert_relative_eq!(v[2], h2_dissipation(&f));
        assert_relative_eq!(v[3], grid.grad_l4_4(&f).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(v[4], dissipation_i(&f, &grid).unwrap().derived(), max_relative = 1e-14);
        // f_1 = z² on the plateau: mean of θ² = M / (2π²)
        assert_relative_eq!(v[5], mass_m(&f) / (2.0 * PI * PI), max_relative = 1e-13);
        assert_relative_eq!(v[7], v[6] - noise.spectral_sum(0.0) / 2.0, max_relative = 1e-14);
    }
}
