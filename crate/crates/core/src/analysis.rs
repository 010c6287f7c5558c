//! S-map interaction coefficients, their variance under low and high
//! legitimacy, and detection of sustained-rebellion intervals.

use std::io::Write;

use crate::edm::{smap_predict, SMapParams};
use crate::error::{Error, Result};
use crate::stats::Kde;
use crate::timeseries::{build_generalized_embedding, format_value, Coordinate, EmbeddingSpec, Frame};

/// Column the interaction coefficient is taken with respect to.
pub const PROPAGANDA_COLUMN: &str = "propaganda";

/// Embedding used for coefficient analysis: the jailed/quiet state plus
/// propaganda at lag 0.
pub fn analysis_spec(tp: usize) -> EmbeddingSpec {
    EmbeddingSpec::jailed_quiet(tp)
        .with_coordinate(Coordinate::new(PROPAGANDA_COLUMN, 0))
        .expect("propaganda is not a jailed/quiet coordinate")
}

/// S-map coefficient of Active with respect to propaganda, per origin tick.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianSeries {
    pub times: Vec<i64>,
    /// NaN where the local fit could not identify the coefficient.
    pub coef: Vec<f64>,
    /// Entries whose fit was rank deficient or non-finite.
    pub flagged: Vec<bool>,
}

impl JacobianSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn finite_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.coef.iter().filter(|c| c.is_finite()).count() as f64 / self.len() as f64
    }

    /// CSV with columns `time,coef`; flagged entries are written as `nan`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "coef"])?;
        for (t, c) in self.times.iter().zip(&self.coef) {
            w.write_record([t.to_string(), format_value(*c)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Forecast horizon of the analysis embedding.
pub const ANALYSIS_TP: usize = 5;

/// Interaction coefficients with the default analysis embedding.
pub fn interaction_coefficients(frame: &Frame, theta: f64) -> Result<JacobianSeries> {
    interaction_coefficients_with(frame, &analysis_spec(ANALYSIS_TP), theta)
}

/// Interaction coefficients over the whole record of `frame`, each origin
/// forecast from every other row (leave-one-out).
pub fn interaction_coefficients_with(frame: &Frame, spec: &EmbeddingSpec, theta: f64) -> Result<JacobianSeries> {
    let slot = spec
        .coordinates()
        .iter()
        .position(|c| c.column == PROPAGANDA_COLUMN && c.lag == 0)
        .ok_or_else(|| Error::InvalidParameter("embedding has no propaganda(t) coordinate".into()))?;
    let emb = build_generalized_embedding(frame, spec)?;
    let params = SMapParams {
        exclusion_radius: Some(0),
        ..SMapParams::new(theta)
    };
    let out = smap_predict(&emb, &emb, &params)?;
    let mut coef = Vec::with_capacity(out.len());
    let mut flagged = Vec::with_capacity(out.len());
    for o in &out {
        // intercept occupies slot 0
        let c = o.coefficients[slot + 1];
        let bad = o.rank_deficient || !c.is_finite();
        coef.push(if bad { f64::NAN } else { c });
        flagged.push(bad);
    }
    Ok(JacobianSeries {
        times: emb.times().to_vec(),
        coef,
        flagged,
    })
}

/// Legitimacy side of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Low,
    High,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::High => "high",
        }
    }
}

/// How a window's legitimacy is summarized before comparing to the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Mean legitimacy over the window.
    WindowMean,
    /// Legitimacy at the window's first tick.
    Instantaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    /// Windows with legitimacy below this are `Low`, the rest `High`.
    pub threshold: f64,
    pub window: usize,
    pub stride: usize,
    pub labeling: Labeling,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            window: 100,
            stride: 10,
            labeling: Labeling::WindowMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowVariance {
    pub window_start: i64,
    pub regime: Regime,
    pub variance: f64,
}

/// Windowed coefficient variances split by legitimacy regime.
#[derive(Debug, Clone, PartialEq)]
pub struct VariancePartition {
    pub windows: Vec<WindowVariance>,
    pub options: PartitionOptions,
}

impl VariancePartition {
    pub fn sample(&self, regime: Regime) -> Vec<f64> {
        self.windows
            .iter()
            .filter(|w| w.regime == regime)
            .map(|w| w.variance)
            .collect()
    }

    /// Gaussian density of one regime's variances; `None` when degenerate.
    pub fn density(&self, regime: Regime) -> Option<Kde> {
        Kde::silverman(&self.sample(regime))
    }

    /// Appends the windows of another partition, e.g. from another run.
    pub fn extend(&mut self, other: &VariancePartition) {
        self.windows.extend_from_slice(&other.windows);
    }

    /// CSV with columns `window_start,legitimacy_regime,variance`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["window_start", "legitimacy_regime", "variance"])?;
        for win in &self.windows {
            w.write_record([
                win.window_start.to_string(),
                win.regime.name().to_owned(),
                format_value(win.variance),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sliding-window sample variance of the coefficient series, each window
/// labeled by legitimacy. `legitimacy[i]` belongs to `jacobians.times[i]`.
/// Flagged entries are skipped; windows with fewer than two usable values
/// are omitted.
pub fn partition_variance(
    jacobians: &JacobianSeries,
    legitimacy: &[f64],
    options: &PartitionOptions,
) -> Result<VariancePartition> {
    if legitimacy.len() != jacobians.len() {
        return Err(Error::DimensionMismatch {
            expected: jacobians.len(),
            got: legitimacy.len(),
        });
    }
    if options.window < 2 || options.stride == 0 {
        return Err(Error::InvalidParameter("window must be >= 2 and stride >= 1".into()));
    }
    if options.window > jacobians.len() {
        return Err(Error::InsufficientData {
            required: options.window,
            available: jacobians.len(),
        });
    }
    let mut windows = Vec::new();
    for start in (0..=jacobians.len() - options.window).step_by(options.stride) {
        let range = start..start + options.window;
        let values: Vec<f64> = jacobians.coef[range.clone()]
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .collect();
        if values.len() < 2 {
            continue;
        }
        let level = match options.labeling {
            Labeling::WindowMean => legitimacy[range].iter().sum::<f64>() / options.window as f64,
            Labeling::Instantaneous => legitimacy[start],
        };
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        windows.push(WindowVariance {
            window_start: jacobians.times[start],
            regime: if level < options.threshold { Regime::Low } else { Regime::High },
            variance,
        });
    }
    Ok(VariancePartition {
        windows,
        options: *options,
    })
}

/// Values of `column` at the given ticks.
pub fn column_at(frame: &Frame, column: &str, times: &[i64]) -> Result<Vec<f64>> {
    let col = frame.column(column)?;
    times
        .iter()
        .map(|&t| {
            frame
                .row_of(t)
                .map(|r| col[r])
                .ok_or_else(|| Error::InvalidParameter(format!("tick {t} outside frame")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapOptions {
    pub active_floor: f64,
    pub min_duration: usize,
}

impl Default for TrapOptions {
    fn default() -> Self {
        Self {
            active_floor: 100.0,
            min_duration: 200,
        }
    }
}

/// Inclusive tick intervals of sustained rebellion, sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrappedIntervals {
    pub intervals: Vec<(i64, i64)>,
}

impl TrappedIntervals {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// CSV with columns `start,end`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["start", "end"])?;
        for (s, e) in &self.intervals {
            w.write_record([s.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Maximal runs of ticks with Active at or above the floor lasting at
/// least `min_duration` ticks.
pub fn detect_trapped_state(frame: &Frame, options: &TrapOptions) -> Result<TrappedIntervals> {
    let active = frame.column("active")?;
    let mut intervals = Vec::new();
    let mut run_start = None;
    for i in 0..=active.len() {
        let high = i < active.len() && active[i] >= options.active_floor;
        match (high, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if i - s >= options.min_duration.max(1) {
                    intervals.push((frame.time_at(s), frame.time_at(i - 1)));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(TrappedIntervals { intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn active_frame(active: Vec<f64>) -> Frame {
        Frame::from_columns(&[("active", active)]).unwrap()
    }

    #[test]
    fn zero_series_has_no_trap() {
        let t = detect_trapped_state(&active_frame(vec![0.0; 1000]), &TrapOptions::default()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn plateau_is_one_interval() {
        // frame ticks start at 1
        let a: Vec<f64> = (1..=800).map(|t| if (100..=500).contains(&t) { 150.0 } else { 3.0 }).collect();
        let f = active_frame(a);
        let t = detect_trapped_state(&f, &TrapOptions::default()).unwrap();
        assert_eq!(t.intervals, vec![(100, 500)]);
    }

    #[test]
    fn short_burst_ignored_and_end_of_record_closes() {
        let mut a = vec![0.0; 600];
        a[10..150].fill(200.0);
        a[350..].fill(120.0);
        let t = detect_trapped_state(&active_frame(a), &TrapOptions::default()).unwrap();
        assert_eq!(t.intervals, vec![(351, 600)]);
    }

    fn planted_frame(slope: f64, noise: f64, constant_propaganda: bool) -> Frame {
        let n = 600;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let jailed: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..50.0)).collect();
        let quiet: Vec<f64> = (0..n).map(|_| rng.random_range(900.0..1000.0)).collect();
        let prop: Vec<f64> = (0..n)
            .map(|_| if constant_propaganda { 0.3 } else { rng.random_range(0.06..0.6) })
            .collect();
        let mut active = vec![0.0; n];
        for t in 0..n - 5 {
            active[t + 5] = slope * prop[t] + noise * (rng.random::<f64>() - 0.5);
        }
        Frame::from_columns(&[("quiet", quiet), ("active", active), ("jailed", jailed), ("propaganda", prop)]).unwrap()
    }

    #[test]
    fn planted_coefficient_recovered() {
        let f = planted_frame(3.0, 0.01, false);
        let j = interaction_coefficients(&f, 0.5).unwrap();
        assert!(j.finite_fraction() > 0.99);
        for c in j.coef.iter().filter(|c| c.is_finite()) {
            assert!((c - 3.0).abs() < 0.3, "{c}");
        }
    }

    #[test]
    fn constant_propaganda_is_flagged() {
        let f = planted_frame(3.0, 0.01, true);
        let j = interaction_coefficients(&f, 0.5).unwrap();
        assert!(j.flagged.iter().all(|&b| b));
        assert!(j.coef.iter().all(|c| c.is_nan()));
    }

    fn series(coef: Vec<f64>) -> JacobianSeries {
        JacobianSeries {
            times: (0..coef.len() as i64).collect(),
            flagged: vec![false; coef.len()],
            coef,
        }
    }

    #[test]
    fn constant_coefficient_has_zero_variance() {
        let j = series(vec![1.5; 500]);
        let leg: Vec<f64> = (0..500).map(|i| if i < 250 { 0.65 } else { 0.8 }).collect();
        let p = partition_variance(&j, &leg, &PartitionOptions::default()).unwrap();
        assert!(!p.sample(Regime::Low).is_empty() && !p.sample(Regime::High).is_empty());
        assert!(p.windows.iter().all(|w| w.variance == 0.0));
    }

    #[test]
    fn planted_variance_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let leg: Vec<f64> = (0..n).map(|i| if (i / 1000) % 2 == 0 { 0.65 } else { 0.8 }).collect();
        // sd 2 under low legitimacy, 1 under high
        let coef: Vec<f64> = leg
            .iter()
            .map(|&l| {
                let z: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
                if l < 0.7 { 2.0 * z } else { z }
            })
            .collect();
        let opts = PartitionOptions {
            labeling: Labeling::Instantaneous,
            ..Default::default()
        };
        let p = partition_variance(&series(coef), &leg, &opts).unwrap();
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let ratio = mean(p.sample(Regime::Low)) / mean(p.sample(Regime::High));
        assert!((ratio / 4.0 - 1.0).abs() < 0.25, "{ratio}");
    }

    #[test]
    fn window_longer_than_record() {
        let err = partition_variance(&series(vec![0.0; 50]), &[0.8; 50], &PartitionOptions::default());
        assert!(matches!(err, Err(Error::InsufficientData { .. })));
    }
}
