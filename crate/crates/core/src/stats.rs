//! Small statistics toolkit: mergeable running moments, batch means, trapezoid.

/// Welford accumulator; merges with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (NaN below two samples).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// i.i.d. standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub count: u64,
}

impl Estimate {
    pub fn iid(samples: &[f64]) -> Self {
        let m: RunningMoments = samples.iter().copied().collect();
        Self { mean: m.mean(), se: m.std_error(), count: m.count() }
    }

    /// Is `|mean − target| ≤ k·se`?
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Means of `n_batches` contiguous batches of equal size; a remainder at the
/// start is dropped so that the last sample is always used.
pub fn batch_means(samples: &[f64], n_batches: usize) -> Vec<(f64, u64)> {
    if n_batches == 0 || samples.len() < n_batches {
        return Vec::new();
    }
    let size = samples.len() / n_batches;
    let skip = samples.len() - size * n_batches;
    samples[skip..]
        .chunks_exact(size)
        .map(|c| (c.iter().sum::<f64>() / size as f64, size as u64))
        .collect()
}

/// Weighted batch-means standard error of the overall mean.
pub fn batch_se(batches: &[(f64, u64)]) -> f64 {
    let b = batches.len();
    if b < 2 {
        return f64::NAN;
    }
    let total: f64 = batches.iter().map(|(_, n)| *n as f64).sum();
    let mean = batches.iter().map(|(m, n)| m * *n as f64).sum::<f64>() / total;
    let ss: f64 = batches
        .iter()
        .map(|(m, n)| {
            let w = *n as f64 / total;
            w * w * (m - mean) * (m - mean)
        })
        .sum();
    (ss * b as f64 / (b - 1) as f64).sqrt()
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Cumulative trapezoid integral, same length as `values`, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}
