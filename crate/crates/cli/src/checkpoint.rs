//! Binary checkpoints of a single stepper state.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `SQGF` |
//! | 4 | format version (u32) |
//! | 4 | endianness marker `0x01020304` (u32) |
//! | 4 | cutoff N (u32) |
//! | 8 | time (f64) |
//! | 8 | alpha (f64) |
//! | 8 | step (u64) |
//! | 8 | seed (u64) |
//! | 8 | stream (u64) |
//! | 16 | RNG word counter (u128) |
//! | 8 | coefficient count (u64) |
//! | 16·count | coefficients, `re, im` interleaved, canonical mode order |

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sqg_core::{RngStream, SpectralField, StepperState};

pub const MAGIC: [u8; 4] = *b"SQGF";
pub const VERSION: u32 = 1;
const ENDIAN_MARKER: u32 = 0x0102_0304;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 * 5 + 16 + 8;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic {0:?})")]
    Magic([u8; 4]),
    #[error("unsupported checkpoint version {found} (expected {VERSION})")]
    Version { found: u32 },
    #[error("checkpoint written with foreign byte order")]
    Endianness,
    #[error("truncated checkpoint: {0}")]
    Truncated(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub alpha: f64,
    pub state: StepperState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.state;
        let coeffs = s.field.coefficients();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * coeffs.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&ENDIAN_MARKER.to_le_bytes());
        out.extend_from_slice(&(s.field.cutoff() as u32).to_le_bytes());
        out.extend_from_slice(&s.time.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&s.step.to_le_bytes());
        out.extend_from_slice(&s.rng.seed().to_le_bytes());
        out.extend_from_slice(&s.rng.stream().to_le_bytes());
        out.extend_from_slice(&s.rng.counter().to_le_bytes());
        out.extend_from_slice(&(coeffs.len() as u64).to_le_bytes());
        for c in coeffs {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(CheckpointError::Magic(magic));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(CheckpointError::Version { found: version });
        }
        let marker = r.u32("endianness marker")?;
        if marker != ENDIAN_MARKER {
            return Err(if marker == ENDIAN_MARKER.swap_bytes() {
                CheckpointError::Endianness
            } else {
                CheckpointError::Corrupt(format!("endianness marker {marker:#010x}"))
            });
        }
        let cutoff = r.u32("cutoff")? as usize;
        let time = r.f64("time")?;
        let alpha = r.f64("alpha")?;
        let step = r.u64("step")?;
        let seed = r.u64("seed")?;
        let stream = r.u64("stream")?;
        let counter = u128::from_le_bytes(r.take(16, "rng counter")?.try_into().expect("16 bytes"));
        let count = r.u64("coefficient count")? as usize;
        let expected = (2 * cutoff + 1).pow(2);
        if count != expected {
            return Err(CheckpointError::Corrupt(format!("{count} coefficients for cutoff {cutoff}")));
        }
        let need = count.checked_mul(16).ok_or_else(|| CheckpointError::Corrupt("coefficient count".into()))?;
        if r.remaining() < need {
            return Err(CheckpointError::Truncated(format!(
                "{} of {need} payload bytes present",
                r.remaining()
            )));
        }
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            let re = r.f64("coefficient")?;
            let im = r.f64("coefficient")?;
            coeffs.push(Complex64::new(re, im));
        }
        if r.remaining() != 0 {
            return Err(CheckpointError::Corrupt(format!("{} trailing bytes", r.remaining())));
        }
        let field =
            SpectralField::from_coefficients(cutoff, coeffs).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let state = StepperState { time, step, field, rng: RngStream::at(seed, stream, counter) };
        Ok(Self { alpha, state })
    }

    /// Writes via a temporary file and rename so a crash never leaves a
    /// half-written checkpoint under the final name.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("partial");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.remaining() < n {
            return Err(CheckpointError::Truncated(format!("ends inside {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sqg_core::{InitialCondition, NoiseSpec, SimConfig, Stepper};

    fn sample() -> Checkpoint {
        let cfg = SimConfig { cutoff: 6, dt: 0.01, horizon: 0.05, seed: 17, ..Default::default() };
        let stepper = Stepper::new(&cfg, NoiseSpec::default_for_cutoff(6)).unwrap();
        let ic = InitialCondition::RandomBandLimited { kmax: 5.0, slope: 1.0, l2: 2.0 };
        let mut state = stepper.initial_state(&ic, 3).unwrap();
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
        }
        Checkpoint { alpha: cfg.alpha, state }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back.state.field.coefficients().len(), c.state.field.coefficients().len());
        for (a, b) in back.state.field.coefficients().iter().zip(c.state.field.coefficients()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back, c);
        assert_eq!(back.state.rng.counter(), c.state.rng.counter());
    }

    #[test]
    fn header_layout() {
        let b = sample().to_bytes();
        assert_eq!(&b[..4], b"SQGF");
        assert_eq!(&b[8..12], &[4, 3, 2, 1]);
        assert_eq!(b.len(), HEADER_LEN + 16 * 13 * 13);
    }

    #[test]
    fn rejects_damaged_input() {
        let b = sample().to_bytes();
        for cut in [0, 3, 30, HEADER_LEN, b.len() - 1] {
            assert!(matches!(Checkpoint::from_bytes(&b[..cut]), Err(CheckpointError::Truncated(_))), "cut {cut}");
        }
        let mut v = b.clone();
        v[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(Checkpoint::from_bytes(&v), Err(CheckpointError::Version { found: 2 })));
        let mut e = b.clone();
        e[8..12].copy_from_slice(&ENDIAN_MARKER.to_be_bytes());
        assert!(matches!(Checkpoint::from_bytes(&e), Err(CheckpointError::Endianness)));
        let mut m = b;
        m[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&m), Err(CheckpointError::Magic(_))));
    }
}
