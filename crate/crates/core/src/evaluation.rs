//! Forecast-skill scans over embedding dimension, horizon and S-map theta,
//! and the fixed-interval out-of-sample protocol.

use std::io::Write;

use crate::edm::{pearson_rho, simplex_predict, smap_predict, SMapParams, SkillReport};
use crate::error::{Error, Result};
use crate::timeseries::{
    build_delay_embedding, build_generalized_embedding, format_value, split_library_prediction,
    Embedding, EmbeddingSpec, Frame, TimeRange,
};

/// Default library share of a scan.
pub const DEFAULT_SPLIT: f64 = 0.6;
/// Theta grid searched by [`theta_scan`].
pub const THETA_GRID: [f64; 8] = [0.0, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 9.0];
/// Library origins of the out-of-sample protocol.
pub const DEFAULT_LIB: TimeRange = TimeRange { first: 1, last: 1500 };
/// Prediction origins of the out-of-sample protocol.
pub const DEFAULT_PRED: TimeRange = TimeRange {
    first: 1601,
    last: 3100,
};

/// Which parameter a scan varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    E,
    Tp,
    Theta,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::E => "E",
            Self::Tp => "Tp",
            Self::Theta => "theta",
        }
    }
}

/// Skill per scanned parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axis_kind: ScanAxis,
    /// Strictly increasing parameter values.
    pub axis: Vec<f64>,
    pub skills: Vec<SkillReport>,
    /// Parameters held fixed during the scan, as `(name, value)`.
    pub fixed: Vec<(String, String)>,
}

impl ScanResult {
    /// Rho per axis value, NaN where degenerate.
    pub fn rho(&self) -> Vec<f64> {
        self.skills.iter().map(SkillReport::rho_or_nan).collect()
    }

    /// Rho at a given axis value.
    pub fn rho_at(&self, value: f64) -> Option<f64> {
        let i = self.axis.iter().position(|&v| v == value)?;
        self.skills[i].rho
    }

    /// Axis value with the highest rho; ties go to the smaller value.
    pub fn best(&self) -> Option<(f64, SkillReport)> {
        let mut best: Option<(f64, SkillReport)> = None;
        for (&v, s) in self.axis.iter().zip(&self.skills) {
            let Some(r) = s.rho else { continue };
            if best.is_none_or(|(_, b)| r > b.rho.unwrap_or(f64::NEG_INFINITY)) {
                best = Some((v, *s));
            }
        }
        best
    }

    /// CSV with columns `param,rho,mae,rmse,n`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["param", "rho", "mae", "rmse", "n"])?;
        for (&v, s) in self.axis.iter().zip(&self.skills) {
            w.write_record([
                format_value(v),
                format_value(s.rho_or_nan()),
                format_value(s.mae),
                format_value(s.rmse),
                s.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fails if any prediction origin also appears among the library origins.
pub fn check_no_leakage(library: &Embedding, prediction: &Embedding) -> Result<()> {
    let mut lib: Vec<i64> = library.times().to_vec();
    lib.sort_unstable();
    match prediction.times().iter().find(|t| lib.binary_search(t).is_ok()) {
        Some(&t) => Err(Error::Leakage(t)),
        None => Ok(()),
    }
}

/// Library and prediction origin ranges shared by every point of a scan:
/// valid origins `first..=last` cut at `split`.
fn aligned_split(first: usize, last: usize, split: f64) -> Result<(TimeRange, TimeRange)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidParameter(format!("split {split} must lie in (0, 1)")));
    }
    let n = last + 1 - first;
    let n_lib = (n as f64 * split).floor() as usize;
    if n_lib == 0 || n_lib == n {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    let cut = (first + n_lib) as i64;
    Ok((
        TimeRange::new(first as i64, cut - 1),
        TimeRange::new(cut, last as i64),
    ))
}

/// Simplex skill with library rows within `Tp + (E - 1)` ticks of a query
/// excluded, so no neighbor shares observations with the query's target.
fn simplex_skill(emb: &Embedding, lib: TimeRange, pred: TimeRange, tp: usize) -> Result<SkillReport> {
    let (library, prediction) = split_library_prediction(emb, lib, pred, false)?;
    check_no_leakage(&library, &prediction)?;
    let radius = tp + emb.dim() - 1;
    let forecasts = simplex_predict(&library, &prediction, None, Some(radius))?;
    pearson_rho(&forecasts, prediction.targets())
}

/// Simplex skill for `E = 1..=e_max` on a univariate series (tau = 1).
///
/// Every E uses the same library and prediction origins, those valid at
/// `e_max`, so the skills are directly comparable.
pub fn embed_dimension_scan(series: &[f64], e_max: usize, tp: usize, split: f64) -> Result<ScanResult> {
    if e_max == 0 {
        return Err(Error::InvalidParameter("E_max must be >= 1".into()));
    }
    let required = e_max + tp + 1;
    if series.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: series.len(),
        });
    }
    let (lib, pred) = aligned_split(e_max - 1, series.len() - 1 - tp, split)?;
    let mut skills = Vec::with_capacity(e_max);
    for e in 1..=e_max {
        let emb = build_delay_embedding(series, e, 1, tp)?;
        skills.push(simplex_skill(&emb, lib, pred, tp)?);
    }
    Ok(ScanResult {
        axis_kind: ScanAxis::E,
        axis: (1..=e_max).map(|e| e as f64).collect(),
        skills,
        fixed: vec![
            ("Tp".into(), tp.to_string()),
            ("tau".into(), "1".into()),
            ("split".into(), split.to_string()),
        ],
    })
}

/// Simplex skill for `Tp = 1..=tp_max` at fixed `e` (tau = 1), with
/// origins aligned across horizons.
pub fn tp_scan(series: &[f64], e: usize, tp_max: usize, split: f64) -> Result<ScanResult> {
    if e == 0 || tp_max == 0 {
        return Err(Error::InvalidParameter("E and Tp_max must be >= 1".into()));
    }
    let required = e + tp_max + 1;
    if series.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: series.len(),
        });
    }
    let (lib, pred) = aligned_split(e - 1, series.len() - 1 - tp_max, split)?;
    let mut skills = Vec::with_capacity(tp_max);
    for tp in 1..=tp_max {
        let emb = build_delay_embedding(series, e, 1, tp)?;
        skills.push(simplex_skill(&emb, lib, pred, tp)?);
    }
    Ok(ScanResult {
        axis_kind: ScanAxis::Tp,
        axis: (1..=tp_max).map(|t| t as f64).collect(),
        skills,
        fixed: vec![
            ("E".into(), e.to_string()),
            ("tau".into(), "1".into()),
            ("split".into(), split.to_string()),
        ],
    })
}

/// S-map skill on `validation` for each theta in `grid` (sorted ascending).
pub fn theta_scan(library: &Embedding, validation: &Embedding, grid: &[f64]) -> Result<ScanResult> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("theta grid must be non-empty and increasing".into()));
    }
    check_no_leakage(library, validation)?;
    let mut skills = Vec::with_capacity(grid.len());
    for &theta in grid {
        let out = smap_predict(library, validation, &SMapParams::new(theta))?;
        let forecasts: Vec<f64> = out.iter().map(|o| o.prediction).collect();
        skills.push(pearson_rho(&forecasts, validation.targets())?);
    }
    Ok(ScanResult {
        axis_kind: ScanAxis::Theta,
        axis: grid.to_vec(),
        skills,
        fixed: vec![("E".into(), library.dim().to_string())],
    })
}

/// Picks theta by [`theta_scan`] inside `lib`: the first `split` share of
/// library rows fits, the remainder validates.
pub fn select_theta(frame: &Frame, spec: &EmbeddingSpec, lib: TimeRange, split: f64) -> Result<ScanResult> {
    let emb = build_generalized_embedding(frame, spec)?.filter_times(|t| lib.contains(t));
    if emb.len() < 2 {
        return Err(Error::EmptyPartition("library"));
    }
    let (first, last) = (emb.times()[0], emb.times()[emb.len() - 1]);
    let (fit, val) = aligned_split(first as usize, last as usize, split)?;
    let (fit, val) = split_library_prediction(&emb, fit, val, false)?;
    theta_scan(&fit, &val, &THETA_GRID)
}

/// Out-of-sample forecasts with the matching observations.
#[derive(Debug, Clone, PartialEq)]
pub struct OutOfSample {
    /// Origin tick of each forecast.
    pub times: Vec<i64>,
    pub predicted: Vec<f64>,
    pub observed: Vec<f64>,
    pub skill: SkillReport,
    /// Forecasts whose local fit was rank deficient.
    pub rank_deficient: usize,
}

impl OutOfSample {
    /// CSV with columns `time,observed,predicted`; `time` is the origin tick.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "observed", "predicted"])?;
        for i in 0..self.times.len() {
            w.write_record([
                self.times[i].to_string(),
                format_value(self.observed[i]),
                format_value(self.predicted[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// S-map forecasts for prediction origins in `pred` from a library of
/// origins in `lib`.
pub fn forecast_out_of_sample(
    frame: &Frame,
    spec: &EmbeddingSpec,
    lib: TimeRange,
    pred: TimeRange,
    theta: f64,
) -> Result<OutOfSample> {
    let emb = build_generalized_embedding(frame, spec)?;
    let (library, prediction) = split_library_prediction(&emb, lib, pred, false)?;
    check_no_leakage(&library, &prediction)?;
    let out = smap_predict(&library, &prediction, &SMapParams::new(theta))?;
    let predicted: Vec<f64> = out.iter().map(|o| o.prediction).collect();
    let skill = pearson_rho(&predicted, prediction.targets())?;
    Ok(OutOfSample {
        times: prediction.times().to_vec(),
        observed: prediction.targets().to_vec(),
        predicted,
        skill,
        rank_deficient: out.iter().filter(|o| o.rank_deficient).count(),
    })
}

/// Skill of [`forecast_out_of_sample`].
pub fn evaluate_out_of_sample(
    frame: &Frame,
    spec: &EmbeddingSpec,
    lib: TimeRange,
    pred: TimeRange,
    theta: f64,
) -> Result<SkillReport> {
    forecast_out_of_sample(frame, spec, lib, pred, theta).map(|o| o.skill)
}
