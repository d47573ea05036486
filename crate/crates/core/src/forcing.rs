//! Additive noise `η = Σ_j a_j e_j W_j` in the real eigenbasis of `−Δ`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SqgError};
use crate::spectral::{SpectralField, WaveVector};

/// `1/(π√2)`: makes `cos(k·x)` and `sin(k·x)` unit vectors in `L²([0,2π]²)`.
pub const EIGEN_NORMALIZATION: f64 = 1.0 / (PI * SQRT_2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Cosine,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFunction {
    pub lambda: f64,
    pub mode: WaveVector,
    pub parity: Parity,
    pub normalization: f64,
}

impl BasisFunction {
    /// Fourier coefficient of `e_j` at `mode` (the one at `−mode` is its conjugate).
    pub fn coefficient(&self) -> Complex64 {
        let c = 0.5 * self.normalization;
        match self.parity {
            Parity::Cosine => Complex64::new(c, 0.0),
            Parity::Sine => Complex64::new(0.0, -c),
        }
    }

    /// `∫ θ e_j dx`.
    pub fn project(&self, field: &SpectralField) -> f64 {
        let c = field.get(self.mode);
        let scale = 4.0 * PI * PI * 2.0 * 0.5 * self.normalization;
        match self.parity {
            Parity::Cosine => scale * c.re,
            Parity::Sine => -scale * c.im,
        }
    }

    pub fn to_field(&self, cutoff: usize) -> Result<SpectralField> {
        let mut f = SpectralField::zeros(cutoff);
        f.set(self.mode, self.coefficient())?;
        Ok(f)
    }
}

/// Real eigenfunctions of `−Δ`, one representative per pair `{k, −k}`, sorted
/// by `(λ, kx, ky, parity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    entries: Vec<BasisFunction>,
}

impl EigenBasis {
    pub fn enumerate(max_lambda: f64) -> Self {
        let r = max_lambda.max(0.0).sqrt().floor() as i32;
        let mut entries = Vec::new();
        for kx in 0..=r {
            for ky in -r..=r {
                if kx == 0 && ky <= 0 {
                    continue;
                }
                let k = WaveVector::new(kx, ky);
                let lambda = k.norm_sq() as f64;
                if lambda > max_lambda {
                    continue;
                }
                for parity in [Parity::Cosine, Parity::Sine] {
                    entries.push(BasisFunction {
                        lambda,
                        mode: k,
                        parity,
                        normalization: EIGEN_NORMALIZATION,
                    });
                }
            }
        }
        entries.sort_by(|a, b| {
            a.lambda
                .total_cmp(&b.lambda)
                .then(a.mode.kx.cmp(&b.mode.kx))
                .then(a.mode.ky.cmp(&b.mode.ky))
                .then(a.parity.cmp(&b.parity))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[BasisFunction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_sup_norm(&self) -> u32 {
        self.entries.iter().map(|e| e.mode.sup_norm()).max().unwrap_or(0)
    }
}

/// Convenience: the basis for eigenvalues up to `max_lambda`.
pub fn enumerate_basis(max_lambda: f64) -> EigenBasis {
    EigenBasis::enumerate(max_lambda)
}

/// How amplitudes are assigned to the basis.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeRule {
    /// `a_j = scale · λ_j^exponent`.
    PowerLaw { scale: f64, exponent: f64 },
    /// Per-shell amplitude; shells not listed get zero.
    Shells(Vec<(f64, f64)>),
    /// Explicit `a_j` in basis order.
    Explicit(Vec<f64>),
}

/// Noise amplitudes aligned with an [`EigenBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    basis: EigenBasis,
    amplitudes: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(basis: EigenBasis, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(SqgError::Configuration(format!(
                "{} amplitudes for a basis of {} functions",
                amplitudes.len(),
                basis.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(SqgError::Configuration("non-finite noise amplitude".into()));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn from_rule(max_lambda: f64, rule: &AmplitudeRule) -> Result<Self> {
        let basis = EigenBasis::enumerate(max_lambda);
        let amplitudes = match rule {
            AmplitudeRule::PowerLaw { scale, exponent } => {
                basis.entries().iter().map(|e| scale * e.lambda.powf(*exponent)).collect()
            }
            AmplitudeRule::Shells(shells) => basis
                .entries()
                .iter()
                .map(|e| {
                    shells
                        .iter()
                        .find(|(l, _)| (l - e.lambda).abs() < 1e-9)
                        .map_or(0.0, |(_, a)| *a)
                })
                .collect(),
            AmplitudeRule::Explicit(a) => a.clone(),
        };
        Self::new(basis, amplitudes)
    }

    /// Default experiment forcing for cutoff `N`: `a_j = 1/λ_j` for `λ_j ≤ (N/2)²`.
    pub fn default_for_cutoff(cutoff: usize) -> Self {
        let half = (cutoff / 2).max(1) as f64;
        Self::from_rule(half * half, &AmplitudeRule::PowerLaw { scale: 1.0, exponent: -1.0 })
            .expect("power law amplitudes are finite")
    }

    /// No forcing at all.
    pub fn silent() -> Self {
        Self { basis: EigenBasis { entries: Vec::new() }, amplitudes: Vec::new() }
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisFunction, f64)> {
        self.basis.entries().iter().zip(self.amplitudes.iter().copied())
    }

    /// Number of forced functions `J` (index of the last nonzero amplitude).
    pub fn forced_count(&self) -> usize {
        self.amplitudes.iter().rposition(|a| *a != 0.0).map_or(0, |i| i + 1)
    }

    pub fn is_silent(&self) -> bool {
        self.forced_count() == 0
    }

    /// Smallest eigenvalue carrying a nonzero amplitude.
    pub fn min_forced_lambda(&self) -> Option<f64> {
        self.iter().find(|(_, a)| *a != 0.0).map(|(e, _)| e.lambda)
    }

    /// `A_s = Σ_j λ_j^s a_j²`.
    pub fn spectral_sum(&self, s: f64) -> f64 {
        self.iter().map(|(e, a)| e.lambda.powf(s) * a * a).sum()
    }

    /// `Σ_j a_j² (∫ θ e_j dx)²`, the quadratic variation density of `⟨θ, dη⟩`.
    pub fn projection_energy(&self, field: &SpectralField) -> f64 {
        self.iter()
            .filter(|(_, a)| *a != 0.0)
            .map(|(e, a)| {
                let p = e.project(field);
                a * a * p * p
            })
            .sum()
    }

    /// `Σ_j a_j √dt ξ_j e_j`.
    pub fn sample_increment(&self, dt: f64, rng: &mut RngStream, cutoff: usize) -> Result<SpectralField> {
        let sd = dt.max(0.0).sqrt();
        self.sample_scaled(rng, cutoff, |_| sd)
    }

    /// `Σ_j a_j σ_j ξ_j e_j` with per-function standard deviations `σ_j`.
    /// One normal is drawn per basis function regardless of its amplitude, so
    /// the stream position depends only on the basis size.
    pub fn sample_scaled(
        &self,
        rng: &mut RngStream,
        cutoff: usize,
        sigma: impl Fn(&BasisFunction) -> f64,
    ) -> Result<SpectralField> {
        if self.basis.max_sup_norm() as usize > cutoff {
            return Err(SqgError::Dimension(format!(
                "forcing reaches |k|∞ = {} beyond cutoff {cutoff}",
                self.basis.max_sup_norm()
            )));
        }
        let mut out = SpectralField::zeros(cutoff);
        let entries = self.basis.entries();
        let mut i = 0;
        while i < entries.len() {
            let e = entries[i];
            // cosine and sine partners are adjacent in the ordering
            let mut c = Complex64::new(0.0, 0.0);
            let mut j = i;
            while j < entries.len() && entries[j].mode == e.mode {
                let f = &entries[j];
                let xi = rng.normal();
                c += f.coefficient() * (self.amplitudes[j] * sigma(f) * xi);
                j += 1;
            }
            let prev = out.get(e.mode);
            out.set(e.mode, prev + c)?;
            i = j;
        }
        Ok(out)
    }
}

/// Counter-based Gaussian stream: `(seed, stream, counter)` fixes the output.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    /// Resumes a stream at a given 32-bit word position.
    pub fn at(seed: u64, stream: u64, counter: u128) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(counter);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Underlying generator, for callers that need `rand` distributions.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream == other.stream && self.counter() == other.counter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn first_shells() {
        let b1 = EigenBasis::enumerate(1.0);
        assert_eq!(b1.len(), 4);
        assert!(b1.entries().iter().all(|e| e.lambda == 1.0));
        let b2 = EigenBasis::enumerate(2.0);
        assert_eq!(b2.len(), 8);
        assert_eq!(b2.entries().iter().filter(|e| e.lambda == 2.0).count(), 4);
        let modes: Vec<_> = b2.entries().iter().map(|e| (e.mode.kx, e.mode.ky, e.parity)).collect();
        assert_eq!(modes[0], (0, 1, Parity::Cosine));
        assert_eq!(modes[1], (0, 1, Parity::Sine));
        assert_eq!(modes[4], (1, -1, Parity::Cosine));
        assert_eq!(EigenBasis::enumerate(25.0), EigenBasis::enumerate(25.0));
    }

    #[test]
    fn ordering_is_total() {
        let b = EigenBasis::enumerate(40.0);
        for w in b.entries().windows(2) {
            let key = |e: &BasisFunction| (e.lambda as i64, e.mode.kx, e.mode.ky, e.parity);
            assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn unit_norm_by_quadrature() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        for e in EigenBasis::enumerate(10.0).entries() {
            let f = e.to_field(4).unwrap();
            let q = grid.to_physical(&f).unwrap().map(|v| v * v).integral();
            assert_relative_eq!(q, 1.0, max_relative = 1e-13);
            assert_relative_eq!(e.project(&f), 1.0, max_relative = 1e-13);
            assert!(grid.to_physical(&f).unwrap().mean().abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_sums() {
        let ones4 = NoiseSpec::new(EigenBasis::enumerate(1.0), vec![1.0; 4]).unwrap();
        assert_eq!(ones4.spectral_sum(0.0), 4.0);
        assert_eq!(ones4.spectral_sum(-0.5), 4.0);
        let ones8 = NoiseSpec::new(EigenBasis::enumerate(2.0), vec![1.0; 8]).unwrap();
        let direct: f64 = (0..4).map(|_| 1.0).sum::<f64>() + (0..4).map(|_| 2f64.powf(-0.5)).sum::<f64>();
        assert_relative_eq!(ones8.spectral_sum(-0.5), direct, max_relative = 1e-15);
        assert_relative_eq!(ones8.spectral_sum(-0.5), 6.828427124746190, max_relative = 1e-14);
        let zeros = NoiseSpec::new(EigenBasis::enumerate(2.0), vec![0.0; 8]).unwrap();
        for s in [-1.0, 0.0, 2.5] {
            assert_eq!(zeros.spectral_sum(s), 0.0);
        }
        assert!(NoiseSpec::new(EigenBasis::enumerate(2.0), vec![1.0; 3]).is_err());
    }

    #[test]
    fn shell_rule() {
        let spec = NoiseSpec::from_rule(4.0, &AmplitudeRule::Shells(vec![(2.0, 0.5)])).unwrap();
        assert_relative_eq!(spec.spectral_sum(0.0), 4.0 * 0.25);
        assert_eq!(spec.min_forced_lambda(), Some(2.0));
    }

    #[test]
    fn zero_dt_is_zero_field() {
        let spec = NoiseSpec::default_for_cutoff(8);
        let mut rng = RngStream::new(1, 0);
        assert_eq!(spec.sample_increment(0.0, &mut rng, 8).unwrap(), SpectralField::zeros(8));
    }

    #[test]
    fn increments_are_reproducible() {
        let spec = NoiseSpec::default_for_cutoff(8);
        let mut a = RngStream::at(11, 3, 40);
        let mut b = RngStream::at(11, 3, 40);
        let x = spec.sample_increment(0.1, &mut a, 8).unwrap();
        let y = spec.sample_increment(0.1, &mut b, 8).unwrap();
        assert_eq!(x, y);
        assert_eq!(a, b);
        // resuming from a recorded counter continues the same sequence
        let mut c = RngStream::at(11, 3, a.counter());
        assert_eq!(spec.sample_increment(0.1, &mut a, 8).unwrap(), spec.sample_increment(0.1, &mut c, 8).unwrap());
        assert_eq!(x.hermitian_defect(), 0.0);
    }

    #[test]
    fn forcing_beyond_cutoff_is_rejected() {
        let spec = NoiseSpec::default_for_cutoff(16);
        let mut rng = RngStream::new(0, 0);
        assert!(spec.sample_increment(1.0, &mut rng, 4).is_err());
    }

    #[test]
    fn projection_energy_of_single_function() {
        let spec = NoiseSpec::new(EigenBasis::enumerate(1.0), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let e0 = spec.basis().entries()[0];
        let f = e0.to_field(3).unwrap().scaled(2.0);
        assert_relative_eq!(spec.projection_energy(&f), 4.0, max_relative = 1e-13);
    }
}
