//! Histograms, empirical CDFs, maximum-likelihood fits, and the shared
//! numeric formatting used by every CSV emitter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default bin count for spacing and quasienergy histograms.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("histogram range [{lo}, {hi}] is empty or not finite")]
    BadRange { lo: f64, hi: f64 },
    #[error("sample {value} outside histogram range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("sample {0} is not positive; exponential fit needs positive samples")]
    NonPositiveSample(f64),
}

/// Fixed-width histogram over [lo, hi]: bins are half-open [e_k, e_{k+1})
/// except the last, which is closed so `hi` itself is counted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    /// Bin edges, `bins + 1` ascending values.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Raw counts per bin; they always sum to the sample count.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of samples binned.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bin midpoints.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Probability density per bin: counts / (total · width). The resulting
    /// step function integrates to 1.
    pub fn density(&self) -> Vec<f64> {
        let width = self.edges[1] - self.edges[0];
        self.counts
            .iter()
            .map(|&c| c as f64 / (self.total as f64 * width))
            .collect()
    }

    /// CSV rendering: `bin_lo, bin_hi, count, density` per bin.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("bin_lo,bin_hi,count,density\n");
        let density = self.density();
        for (i, w) in self.edges.windows(2).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_g17(w[0]),
                fmt_g17(w[1]),
                self.counts[i],
                fmt_g17(density[i])
            );
        }
        out
    }
}

/// Bins `samples` into `bins` equal-width bins over `range`. Samples outside
/// the range are an error, not silently dropped.
pub fn histogram(samples: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if bins == 0 {
        return Err(StatsError::NoBins);
    }
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(StatsError::BadRange { lo, hi });
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in samples {
        if !(lo..=hi).contains(&v) {
            return Err(StatsError::OutOfRange { value: v, lo, hi });
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts, total: samples.len() as u64 })
}

/// Empirical cumulative distribution of a sample set.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::Empty);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
        Ok(Self { sorted })
    }

    /// Fraction of samples ≤ x; a right-continuous step from 0 to 1.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// The sorted samples backing this CDF.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Maximum-likelihood rate of an exponential distribution: 1 / mean.
/// All samples must be strictly positive.
pub fn exponential_mle(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    for &v in samples {
        if v.is_nan() || v <= 0.0 {
            return Err(StatsError::NonPositiveSample(v));
        }
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(1.0 / mean)
}

/// Formats a float with 17 significant digits in scientific notation, enough
/// to round-trip an f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}
