//! Real, zero-mean scalar fields on the torus `[0, 2π]²` in truncated Fourier
//! representation.
//!
//! Convention: `θ(x) = Σ_k θ̂_k e^{ik·x}` over the square lattice
//! `max(|kx|, |ky|) ≤ N`, so that `∫θ² dx = (2π)² Σ |θ̂_k|²`. Nonlinear terms are
//! evaluated pseudospectrally on a zero-padded physical grid; with a padding
//! factor of 2 the grid has at least `4N + 1` points per direction, enough for
//! the Galerkin projection of cubic products (and the mean of quartic ones) to
//! be alias free.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SqgError};

const TWO_PI_SQ: f64 = 4.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector {
    pub kx: i32,
    pub ky: i32,
}

impl WaveVector {
    pub const fn new(kx: i32, ky: i32) -> Self {
        Self { kx, ky }
    }

    /// `|k|²`, the eigenvalue of `−Δ` for this mode.
    pub fn norm_sq(self) -> i64 {
        let (x, y) = (self.kx as i64, self.ky as i64);
        x * x + y * y
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn is_zero(self) -> bool {
        self.kx == 0 && self.ky == 0
    }

    pub fn neg(self) -> Self {
        Self::new(-self.kx, -self.ky)
    }

    pub fn sup_norm(self) -> u32 {
        self.kx.unsigned_abs().max(self.ky.unsigned_abs())
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.kx, self.ky)
    }
}

/// Galerkin cutoff and padding of the physical grid used for products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cutoff: usize,
    pub padding: usize,
}

impl GridSpec {
    pub fn new(cutoff: usize, padding: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(SqgError::Dimension("cutoff must be at least 1".into()));
        }
        if padding == 0 {
            return Err(SqgError::Dimension("padding factor must be at least 1".into()));
        }
        Ok(Self { cutoff, padding })
    }

    /// Standard dealiased grid for the cubic nonlinearity.
    pub fn dealiased(cutoff: usize) -> Result<Self> {
        Self::new(cutoff, 2)
    }

    /// Physical points per direction: `padding · (2N + 1)` rounded up to the
    /// next 5-smooth length.
    pub fn physical_len(&self) -> usize {
        next_smooth(self.padding * (2 * self.cutoff + 1))
    }
}

fn next_smooth(mut n: usize) -> usize {
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Truncated Fourier coefficients of a real zero-mean field.
///
/// Stored densely on the `(2N+1)²` lattice, `kx` major. Every mutator keeps
/// `θ̂(−k) = conj θ̂(k)` and `θ̂(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(cutoff: usize) -> Self {
        let side = 2 * cutoff + 1;
        Self { cutoff, coeffs: vec![Complex64::new(0.0, 0.0); side * side] }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    fn index(&self, k: WaveVector) -> usize {
        let n = self.cutoff as i32;
        ((k.kx + n) as usize) * self.side() + (k.ky + n) as usize
    }

    pub fn contains(&self, k: WaveVector) -> bool {
        k.sup_norm() as usize <= self.cutoff
    }

    /// Coefficient at `k`; zero outside the cutoff lattice.
    pub fn get(&self, k: WaveVector) -> Complex64 {
        if self.contains(k) {
            self.coeffs[self.index(k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets `θ̂(k) = c` and `θ̂(−k) = conj c`. For `k = 0` this is a no-op.
    pub fn set(&mut self, k: WaveVector, c: Complex64) -> Result<()> {
        if !self.contains(k) {
            return Err(SqgError::Dimension(format!(
                "mode {k} outside cutoff {}",
                self.cutoff
            )));
        }
        if k.is_zero() {
            return Ok(());
        }
        let i = self.index(k);
        let j = self.index(k.neg());
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj();
        Ok(())
    }

    /// All lattice modes in storage (canonical) order, including `k = 0`.
    pub fn modes(&self) -> impl Iterator<Item = WaveVector> {
        let n = self.cutoff as i32;
        (-n..=n).flat_map(move |kx| (-n..=n).map(move |ky| WaveVector::new(kx, ky)))
    }

    /// Coefficients in canonical order (`kx` from −N to N, `ky` inner).
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Rebuilds a field from canonical-order coefficients, enforcing the
    /// zero-mean and Hermitian invariants only by validation.
    pub fn from_coefficients(cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let side = 2 * cutoff + 1;
        if coeffs.len() != side * side {
            return Err(SqgError::Dimension(format!(
                "expected {} coefficients for cutoff {cutoff}, got {}",
                side * side,
                coeffs.len()
            )));
        }
        let field = Self { cutoff, coeffs };
        if field.get(WaveVector::new(0, 0)) != Complex64::new(0.0, 0.0) {
            return Err(SqgError::Dimension("nonzero mean coefficient".into()));
        }
        if field.hermitian_defect() != 0.0 {
            return Err(SqgError::Dimension("coefficients are not Hermitian".into()));
        }
        Ok(field)
    }

    /// Largest `|θ̂(k) − conj θ̂(−k)|` plus `|θ̂(0)|`; zero for a valid field.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = self.get(WaveVector::new(0, 0)).norm();
        for k in self.modes() {
            let d = (self.coeffs[self.index(k)] - self.coeffs[self.index(k.neg())].conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero-pads (larger cutoff) or truncates (Galerkin projection) to `cutoff`.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(cutoff);
        let n = cutoff.min(self.cutoff) as i32;
        for kx in -n..=n {
            for ky in -n..=n {
                let k = WaveVector::new(kx, ky);
                let i = out.index(k);
                out.coeffs[i] = self.get(k);
            }
        }
        out
    }

    fn map_real_multiplier(&self, f: impl Fn(WaveVector) -> f64) -> Self {
        let mut out = self.clone();
        for (k, c) in self.modes().zip(out.coeffs.iter_mut()) {
            *c = if k.is_zero() { Complex64::new(0.0, 0.0) } else { *c * f(k) };
        }
        out
    }

    /// Multiplies by `i·m(k)` where `m` is odd in `k`; keeps the field real.
    fn map_imag_multiplier(&self, f: impl Fn(WaveVector) -> f64) -> Self {
        let mut out = self.clone();
        for (k, c) in self.modes().zip(out.coeffs.iter_mut()) {
            *c = if k.is_zero() {
                Complex64::new(0.0, 0.0)
            } else {
                *c * Complex64::new(0.0, f(k))
            };
        }
        out
    }

    /// `(−Δ)^s θ`: coefficient at `k` multiplied by `|k|^{2s}`.
    pub fn fractional_laplacian(&self, s: f64) -> Self {
        self.map_real_multiplier(|k| (k.norm_sq() as f64).powf(s))
    }

    /// Scales each coefficient by a real even multiplier.
    pub fn apply_multiplier(&self, f: impl Fn(WaveVector) -> f64) -> Self {
        self.map_real_multiplier(f)
    }

    pub fn dx(&self) -> Self {
        self.map_imag_multiplier(|k| k.kx as f64)
    }

    pub fn dy(&self) -> Self {
        self.map_imag_multiplier(|k| k.ky as f64)
    }

    /// `u = (−∂_y, ∂_x)(−Δ)^{−1/2} θ`, i.e. `û = i(−ky, kx)/|k| · θ̂`.
    pub fn riesz_velocity(&self) -> (Self, Self) {
        let u1 = self.map_imag_multiplier(|k| -(k.ky as f64) / k.norm());
        let u2 = self.map_imag_multiplier(|k| k.kx as f64 / k.norm());
        (u1, u2)
    }

    /// Spectral divergence `i(kx f̂ + ky ĝ)` of a vector field.
    pub fn divergence(fx: &Self, fy: &Self) -> Self {
        let mut out = fx.dx();
        out.add_assign(&fy.dy());
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.axpy(1.0, other);
    }

    pub fn sub_assign(&mut self, other: &Self) {
        self.axpy(-1.0, other);
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch in axpy");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += *o * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `∫ θ φ dx`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch in inner product");
        TWO_PI_SQ
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum::<f64>()
    }

    /// `∫ θ² dx`.
    pub fn l2_sq(&self) -> f64 {
        TWO_PI_SQ * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `∫ |(−Δ)^{s/2} θ|² dx = (2π)² Σ |k|^{2s} |θ̂_k|²`.
    pub fn sobolev_sq(&self, s: f64) -> f64 {
        TWO_PI_SQ
            * self
                .modes()
                .zip(&self.coeffs)
                .filter(|(k, _)| !k.is_zero())
                .map(|(k, c)| (k.norm_sq() as f64).powf(s) * c.norm_sqr())
                .sum::<f64>()
    }

    /// Weighted sum `(2π)² Σ w(k) |θ̂_k|²` for a precomputed lattice weight.
    pub(crate) fn weighted_energy(&self, weights: &[f64]) -> f64 {
        TWO_PI_SQ * self.coeffs.iter().zip(weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()
    }

    /// `∫ θ φ w(−Δ) dx` for a precomputed lattice weight.
    pub(crate) fn weighted_inner(&self, other: &Self, weights: &[f64]) -> f64 {
        TWO_PI_SQ
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .zip(weights)
                .map(|((a, b), w)| w * (a.re * b.re + a.im * b.im))
                .sum::<f64>()
    }

    /// Multiplies coefficientwise by a precomputed lattice weight.
    pub(crate) fn scale_by(&mut self, weights: &[f64]) {
        for (c, w) in self.coeffs.iter_mut().zip(weights) {
            *c *= *w;
        }
    }

    /// Lattice table of `w(k)` in storage order.
    pub fn lattice_table(cutoff: usize, f: impl Fn(WaveVector) -> f64) -> Vec<f64> {
        Self::zeros(cutoff).modes().map(f).collect()
    }

    /// Gaussian random field with independent modes on `0 < |k| ≤ kmax` and
    /// amplitude `|k|^{−slope}`, normalized to `∫θ² = l2_target`.
    pub fn random_band_limited<R: Rng + ?Sized>(
        cutoff: usize,
        kmax: f64,
        slope: f64,
        l2_target: f64,
        rng: &mut R,
    ) -> Self {
        let mut f = Self::zeros(cutoff);
        let n = cutoff as i32;
        for kx in 0..=n {
            for ky in -n..=n {
                let k = WaveVector::new(kx, ky);
                if kx == 0 && ky <= 0 {
                    continue;
                }
                if k.norm() > kmax {
                    continue;
                }
                let amp = k.norm().powf(-slope);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                f.set(k, Complex64::new(re, im) * amp).expect("inside cutoff");
            }
        }
        let e = f.l2_sq();
        if e > 0.0 {
            f.scale((l2_target / e).sqrt());
        }
        f
    }
}

/// Samples on the uniform `M × M` grid, `data[i·M + j] = θ(2πi/M, 2πj/M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    len: usize,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(len: usize) -> Self {
        Self { len, data: vec![0.0; len * len] }
    }

    pub fn from_fn(len: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 2.0 * PI / len as f64;
        let mut data = Vec::with_capacity(len * len);
        for i in 0..len {
            for j in 0..len {
                data.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self { len, data }
    }

    pub fn from_samples(len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * len {
            return Err(SqgError::Dimension(format!(
                "expected {} samples, got {}",
                len * len,
                data.len()
            )));
        }
        Ok(Self { len, data })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { len: self.len, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len, other.len);
        Self {
            len: self.len,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Trapezoid (spectrally exact for band-limited integrands) `∫ f dx`.
    pub fn integral(&self) -> f64 {
        let h = 2.0 * PI / self.len as f64;
        self.data.iter().sum::<f64>() * h * h
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// FFT plans for one [`GridSpec`]. Immutable and shareable across threads.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    len: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).field("len", &self.len).finish()
    }
}

/// Physical-space gradient and Riesz velocity of one field.
pub(crate) struct PhysicalKinematics {
    pub tx: RealField,
    pub ty: RealField,
    pub u1: Option<RealField>,
    pub u2: Option<RealField>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Self {
        let len = spec.physical_len();
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            spec,
            len,
            r2c: real.plan_fft_forward(len),
            c2r: real.plan_fft_inverse(len),
            col_fwd: cplx.plan_fft_forward(len),
            col_inv: cplx.plan_fft_inverse(len),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn cutoff(&self) -> usize {
        self.spec.cutoff
    }

    /// Physical points per direction.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check_field(&self, field: &SpectralField) -> Result<()> {
        if field.cutoff() != self.spec.cutoff {
            return Err(SqgError::Dimension(format!(
                "field cutoff {} does not match grid cutoff {}",
                field.cutoff(),
                self.spec.cutoff
            )));
        }
        Ok(())
    }

    fn check_dealiased(&self) -> Result<()> {
        if self.spec.padding < 2 {
            return Err(SqgError::Aliasing { padding: self.spec.padding });
        }
        Ok(())
    }

    pub fn to_physical(&self, field: &SpectralField) -> Result<RealField> {
        self.check_field(field)?;
        let m = self.len;
        let half = m / 2 + 1;
        let n = self.spec.cutoff as i32;
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = vec![zero; m * half];
        let mut col = vec![zero; m];
        let mut scratch = vec![zero; self.col_inv.get_inplace_scratch_len()];
        for ky in 0..=n {
            col.fill(zero);
            let mut any = false;
            for kx in -n..=n {
                let c = field.get(WaveVector::new(kx, ky));
                if c != zero {
                    any = true;
                }
                col[kx.rem_euclid(m as i32) as usize] = c;
            }
            if !any {
                continue;
            }
            self.col_inv.process_with_scratch(&mut col, &mut scratch);
            for (i, v) in col.iter().enumerate() {
                spec[i * half + ky as usize] = *v;
            }
        }
        let mut out = vec![0.0; m * m];
        let mut rscratch = self.c2r.make_scratch_vec();
        for (row, dst) in spec.chunks_exact_mut(half).zip(out.chunks_exact_mut(m)) {
            row[0].im = 0.0;
            if m % 2 == 0 {
                row[half - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(row, dst, &mut rscratch)
                .expect("c2r buffer sizes are fixed by the plan");
        }
        Ok(RealField { len: m, data: out })
    }

    /// Galerkin projection of grid samples onto the cutoff lattice; the mean
    /// is discarded.
    pub fn to_spectral(&self, real: &RealField) -> Result<SpectralField> {
        if real.len != self.len {
            return Err(SqgError::Dimension(format!(
                "real field has {} points per side, grid expects {}",
                real.len, self.len
            )));
        }
        let m = self.len;
        let half = m / 2 + 1;
        let n = self.spec.cutoff as i32;
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = vec![zero; m * half];
        let mut row_in = vec![0.0; m];
        let mut rscratch = self.r2c.make_scratch_vec();
        for (src, dst) in real.data.chunks_exact(m).zip(spec.chunks_exact_mut(half)) {
            row_in.copy_from_slice(src);
            self.r2c
                .process_with_scratch(&mut row_in, dst, &mut rscratch)
                .expect("r2c buffer sizes are fixed by the plan");
        }
        let norm = 1.0 / (m as f64 * m as f64);
        let mut out = SpectralField::zeros(self.spec.cutoff);
        let mut col = vec![zero; m];
        let mut scratch = vec![zero; self.col_fwd.get_inplace_scratch_len()];
        for ky in 0..=n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = spec[i * half + ky as usize];
            }
            self.col_fwd.process_with_scratch(&mut col, &mut scratch);
            let kx_start = if ky == 0 { 1 } else { -n };
            for kx in kx_start..=n {
                let c = col[kx.rem_euclid(m as i32) as usize] * norm;
                out.set(WaveVector::new(kx, ky), c).expect("inside cutoff");
            }
        }
        Ok(out)
    }

    pub(crate) fn kinematics(&self, field: &SpectralField, velocity: bool) -> Result<PhysicalKinematics> {
        let tx = self.to_physical(&field.dx())?;
        let ty = self.to_physical(&field.dy())?;
        let (u1, u2) = if velocity {
            let (u1, u2) = field.riesz_velocity();
            (Some(self.to_physical(&u1)?), Some(self.to_physical(&u2)?))
        } else {
            (None, None)
        };
        Ok(PhysicalKinematics { tx, ty, u1, u2 })
    }

    /// Galerkin projection of `u·∇θ` with `u` the Riesz velocity of `θ`.
    pub fn advection_term(&self, field: &SpectralField) -> Result<SpectralField> {
        self.check_dealiased()?;
        self.check_field(field)?;
        let kin = self.kinematics(field, true)?;
        let prod = advection_product(&kin);
        self.to_spectral(&prod)
    }

    /// Galerkin projection of the 4-Laplacian `∇·(|∇θ|²∇θ)`.
    pub fn p_laplacian_term(&self, field: &SpectralField) -> Result<SpectralField> {
        self.check_dealiased()?;
        self.check_field(field)?;
        let kin = self.kinematics(field, false)?;
        let (fx, fy) = p_laplacian_flux(&kin);
        Ok(SpectralField::divergence(&self.to_spectral(&fx)?, &self.to_spectral(&fy)?))
    }

    /// Explicit part of the stochastic SQG drift,
    /// `−[u·∇θ] + α ∇·(|∇θ|²∇θ)`, with each term switchable.
    pub fn sqg_tendency(
        &self,
        field: &SpectralField,
        alpha: f64,
        advection: bool,
        p_laplacian: bool,
    ) -> Result<SpectralField> {
        self.check_dealiased()?;
        self.check_field(field)?;
        let p_laplacian = p_laplacian && alpha != 0.0;
        if !advection && !p_laplacian {
            return Ok(SpectralField::zeros(field.cutoff()));
        }
        let kin = self.kinematics(field, advection)?;
        let mut out = if advection {
            let mut adv = self.to_spectral(&advection_product(&kin))?;
            adv.scale(-1.0);
            adv
        } else {
            SpectralField::zeros(field.cutoff())
        };
        if p_laplacian {
            let (fx, fy) = p_laplacian_flux(&kin);
            let div = SpectralField::divergence(&self.to_spectral(&fx)?, &self.to_spectral(&fy)?);
            out.axpy(alpha, &div);
        }
        Ok(out)
    }

    /// `∫ |∇θ|⁴ dx` by quadrature on the padded grid.
    pub fn grad_l4_4(&self, field: &SpectralField) -> Result<f64> {
        let kin = self.kinematics(field, false)?;
        Ok(kin.tx.zip_map(&kin.ty, |a, b| (a * a + b * b).powi(2)).integral())
    }

    pub fn l2_sq(&self, field: &SpectralField) -> f64 {
        field.l2_sq()
    }

    pub fn sobolev_sq(&self, field: &SpectralField, s: f64) -> f64 {
        field.sobolev_sq(s)
    }
}

fn advection_product(kin: &PhysicalKinematics) -> RealField {
    let u1 = kin.u1.as_ref().expect("velocity requested");
    let u2 = kin.u2.as_ref().expect("velocity requested");
    let data = u1
        .data
        .iter()
        .zip(&u2.data)
        .zip(kin.tx.data.iter().zip(&kin.ty.data))
        .map(|((a, b), (x, y))| a * x + b * y)
        .collect();
    RealField { len: u1.len, data }
}

fn p_laplacian_flux(kin: &PhysicalKinematics) -> (RealField, RealField) {
    let fx = kin.tx.zip_map(&kin.ty, |a, b| (a * a + b * b) * a);
    let fy = kin.tx.zip_map(&kin.ty, |a, b| (a * a + b * b) * b);
    (fx, fy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cos_x(n: usize) -> SpectralField {
        let mut f = SpectralField::zeros(n);
        f.set(WaveVector::new(1, 0), Complex64::new(0.5, 0.0)).unwrap();
        f
    }

    fn mode(n: usize, kx: i32, ky: i32, c: Complex64) -> SpectralField {
        let mut f = SpectralField::zeros(n);
        f.set(WaveVector::new(kx, ky), c).unwrap();
        f
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.coefficients()
            .iter()
            .zip(b.coefficients())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(GridSpec::new(64, 2).unwrap().physical_len(), 270);
        assert_eq!(GridSpec::new(128, 2).unwrap().physical_len(), 540);
        assert_eq!(GridSpec::new(8, 2).unwrap().physical_len(), 36);
        assert!(GridSpec::new(0, 2).is_err());
    }

    #[test]
    fn zero_round_trip() {
        let grid = Grid::new(GridSpec::dealiased(6).unwrap());
        let z = SpectralField::zeros(6);
        let p = grid.to_physical(&z).unwrap();
        assert!(p.samples().iter().all(|&v| v == 0.0));
        assert_eq!(grid.to_spectral(&p).unwrap(), z);
    }

    #[test]
    fn cos_x_samples() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        let p = grid.to_physical(&cos_x(4)).unwrap();
        let expect = RealField::from_fn(grid.len(), |x, _| x.cos());
        for (a, b) in p.samples().iter().zip(expect.samples()) {
            assert!((a - b).abs() < 1e-14);
        }
        let back = grid.to_spectral(&p).unwrap();
        assert!(max_diff(&back, &cos_x(4)) < 1e-15);
    }

    #[test]
    fn parseval_against_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = SpectralField::random_band_limited(8, 20.0, 0.0, 3.0, &mut rng);
        let grid = Grid::new(GridSpec::dealiased(8).unwrap());
        let quad = grid.to_physical(&f).unwrap().map(|v| v * v).integral();
        assert_relative_eq!(quad, f.l2_sq(), max_relative = 1e-12);
        assert_relative_eq!(f.l2_sq(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        assert!(matches!(grid.to_physical(&cos_x(5)), Err(SqgError::Dimension(_))));
        assert!(matches!(grid.to_spectral(&RealField::zeros(10)), Err(SqgError::Dimension(_))));
        assert!(SpectralField::zeros(2).set(WaveVector::new(3, 0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn fractional_laplacian_multipliers() {
        let f = cos_x(4);
        assert!(max_diff(&f.fractional_laplacian(0.5), &f) < 1e-15);
        let c2 = mode(4, 2, 0, Complex64::new(0.5, 0.0));
        assert!(max_diff(&c2.fractional_laplacian(0.5), &c2.scaled(2.0)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = SpectralField::random_band_limited(6, 8.0, 1.0, 1.0, &mut rng);
        assert!(max_diff(&r.fractional_laplacian(0.7).fractional_laplacian(-0.7), &r) < 1e-15);
    }

    #[test]
    fn riesz_on_single_modes() {
        let (u1, u2) = cos_x(3).riesz_velocity();
        assert_eq!(u1, SpectralField::zeros(3));
        // −sin x
        let minus_sin = mode(3, 1, 0, Complex64::new(0.0, 0.5));
        assert!(max_diff(&u2, &minus_sin) < 1e-15);

        let sin_y = mode(3, 0, 1, Complex64::new(0.0, -0.5));
        let (u1, u2) = sin_y.riesz_velocity();
        let minus_cos_y = mode(3, 0, 1, Complex64::new(-0.5, 0.0));
        assert!(max_diff(&u1, &minus_cos_y) < 1e-15);
        assert_eq!(u2, SpectralField::zeros(3));
    }

    #[test]
    fn norms_on_closed_forms() {
        let grid = Grid::new(GridSpec::dealiased(4).unwrap());
        assert_relative_eq!(cos_x(4).l2_sq(), 2.0 * PI * PI, max_relative = 1e-15);
        let c2 = mode(4, 2, 0, Complex64::new(0.5, 0.0));
        assert_relative_eq!(c2.sobolev_sq(1.5), 16.0 * PI * PI, max_relative = 1e-14);
        // ∫∫ sin⁴x = 2π · 3π/4
        assert_relative_eq!(grid.grad_l4_4(&cos_x(4)).unwrap(), 1.5 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn advection_closed_forms() {
        let grid = Grid::new(GridSpec::dealiased(6).unwrap());
        assert!(grid.advection_term(&cos_x(6)).unwrap().l2_sq() < 1e-28);
        let mut shell = cos_x(6);
        shell.add_assign(&mode(6, 0, 1, Complex64::new(0.0, -0.5)));
        assert!(grid.advection_term(&shell).unwrap().l2_sq() < 1e-28);
    }

    #[test]
    fn p_laplacian_of_cos_x() {
        let grid = Grid::new(GridSpec::dealiased(5).unwrap());
        let out = grid.p_laplacian_term(&cos_x(5)).unwrap();
        let mut expect = mode(5, 1, 0, Complex64::new(-0.375, 0.0));
        expect.add_assign(&mode(5, 3, 0, Complex64::new(0.375, 0.0)));
        assert!(max_diff(&out, &expect) < 1e-14);
        assert_relative_eq!(out.inner(&cos_x(5)), -1.5 * PI * PI, max_relative = 1e-13);
        assert_eq!(grid.p_laplacian_term(&SpectralField::zeros(5)).unwrap(), SpectralField::zeros(5));
    }

    #[test]
    fn aliasing_rejected() {
        let grid = Grid::new(GridSpec::new(4, 1).unwrap());
        assert!(matches!(grid.advection_term(&cos_x(4)), Err(SqgError::Aliasing { padding: 1 })));
        assert!(matches!(grid.p_laplacian_term(&cos_x(4)), Err(SqgError::Aliasing { .. })));
        // plain transforms are fine without padding
        assert!(grid.to_physical(&cos_x(4)).is_ok());
    }

    #[test]
    fn resize_projects() {
        let mut f = cos_x(4);
        f.set(WaveVector::new(4, -3), Complex64::new(0.1, 0.2)).unwrap();
        let small = f.resized(3);
        assert_eq!(small.get(WaveVector::new(4, -3)), Complex64::new(0.0, 0.0));
        assert_eq!(small.resized(4).get(WaveVector::new(1, 0)), Complex64::new(0.5, 0.0));
        assert_eq!(small.hermitian_defect(), 0.0);
    }

    #[test]
    fn from_coefficients_validates() {
        let f = cos_x(2);
        let ok = SpectralField::from_coefficients(2, f.coefficients().to_vec()).unwrap();
        assert_eq!(ok, f);
        let mut bad = f.coefficients().to_vec();
        bad[0] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_coefficients(2, bad).is_err());
        assert!(SpectralField::from_coefficients(3, f.coefficients().to_vec()).is_err());
    }
}
