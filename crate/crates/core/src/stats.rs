//! Small statistical helpers: exponential goodness of fit, a one-sided rank
//! test, Gaussian kernel densities and outburst waiting times.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Exponential fit of a sample with the scale estimated from its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub n: usize,
    pub mean: f64,
    /// Kolmogorov-Smirnov distance to the fitted exponential.
    pub d: f64,
    /// `d` rescaled so one critical table serves every `n`.
    pub modified: f64,
}

impl ExponentialFit {
    /// Whether the exponential hypothesis is rejected at `alpha`.
    pub fn rejects(&self, alpha: f64) -> Result<bool> {
        Ok(self.modified > exponential_critical_value(alpha)?)
    }
}

/// Critical values of the modified statistic for an exponential with
/// estimated scale.
const EXP_CRITICAL: [(f64, f64); 5] = [
    (0.15, 0.926),
    (0.10, 0.990),
    (0.05, 1.094),
    (0.025, 1.190),
    (0.01, 1.308),
];

pub fn exponential_critical_value(alpha: f64) -> Result<f64> {
    EXP_CRITICAL
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or_else(|| Error::InvalidParameter(format!("no exponential critical value tabulated for alpha {alpha}")))
}

/// KS distance of `sample` to an exponential with the sample mean, with the
/// small-sample modification `(D - 0.2/n)(sqrt(n) + 0.26 + 0.5/sqrt(n))`.
pub fn exponential_gof(sample: &[f64]) -> Result<ExponentialFit> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            available: n,
        });
    }
    if sample.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter("exponential sample must be finite and >= 0".into()));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(Error::InvalidParameter("exponential sample has zero mean".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = 1.0 - (-v / mean).exp();
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    Ok(ExponentialFit {
        n,
        mean,
        d,
        modified: (d - 0.2 / nf) * (sq + 0.26 + 0.5 / sq),
    })
}

/// One-sided Mann-Whitney test that `x` tends to exceed `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTest {
    /// U statistic of `x`.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_greater(x: &[f64], y: &[f64]) -> Result<RankTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyPartition(if n1 == 0 { "first" } else { "second" }));
    }
    let mut all: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    if all.iter().any(|(v, _)| !v.is_finite()) {
        return Err(Error::InvalidParameter("rank test needs finite samples".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let (mut rank_sum_x, mut tie_term) = (0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_x += avg_rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (a, b, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_x - a * (a + 1.0) / 2.0;
    let mean = a * b / 2.0;
    let var = a * b / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let (z, p_value) = if var > 0.0 {
        let z = (u - mean - 0.5) / var.sqrt();
        (z, 1.0 - standard_normal().cdf(z))
    } else {
        (0.0, 1.0)
    };
    Ok(RankTest { u, z, p_value })
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    sample: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde {
    /// Silverman's rule `0.9 min(sd, IQR/1.34) n^(-1/5)`. `None` for fewer
    /// than two points or a zero bandwidth.
    pub fn silverman(sample: &[f64]) -> Option<Self> {
        let n = sample.len();
        if n < 2 || sample.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let nf = n as f64;
        let mean = sample.iter().sum::<f64>() / nf;
        let sd = (sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let bandwidth = 0.9 * spread * nf.powf(-0.2);
        (bandwidth > 0.0).then(|| Self {
            sample: sorted,
            bandwidth,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        norm * self
            .sample
            .iter()
            .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
            .sum::<f64>()
    }

    /// `points` evenly spaced evaluation points spanning the sample plus
    /// three bandwidths either side.
    pub fn grid(&self, points: usize) -> Vec<(f64, f64)> {
        let lo = self.sample[0] - 3.0 * self.bandwidth;
        let hi = self.sample[self.sample.len() - 1] + 3.0 * self.bandwidth;
        let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
        (0..points)
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.density(x))
            })
            .collect()
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, frac) = (pos.floor() as usize, pos.fract());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Indices where `series` first reaches `threshold` after being below it.
pub fn outburst_onsets(series: &[f64], threshold: f64) -> Vec<usize> {
    (1..series.len())
        .filter(|&i| series[i] >= threshold && series[i - 1] < threshold)
        .collect()
}

/// Ticks between consecutive outburst onsets.
pub fn waiting_times(series: &[f64], threshold: f64) -> Vec<f64> {
    outburst_onsets(series, threshold)
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64)
        .collect()
}
