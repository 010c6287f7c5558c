//! Logistic propaganda controller driven by S-map forecasts of Active.

use rand::seq::index;
use rand::Rng;

use crate::abm::{LegitimacySchedule, PropagandaPolicy};
use crate::edm::{smap_single, SMapParams};
use crate::error::{Error, Result};
use crate::timeseries::{build_generalized_embedding, EmbeddingSpec, Frame};

/// Logistic response `P(A) = (P_max - P_min) / (1 + exp(-m (A - A0))) + P_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub p_min: f64,
    pub p_max: f64,
    /// Logistic slope `m`.
    pub slope: f64,
    /// Active count at the logistic midpoint `A0`.
    pub midpoint: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            p_min: 0.06,
            p_max: 0.6,
            slope: 0.05,
            midpoint: 50.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min < self.p_max) || !(self.slope > 0.0) || !self.midpoint.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "controller needs p_min < p_max and slope > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Propaganda level for a forecast Active count. Clamped to
/// `[p_min, p_max]` so rounding at saturation never leaves the bounds.
pub fn propaganda_response(a_hat: f64, params: &ControllerParams) -> f64 {
    let span = params.p_max - params.p_min;
    let p = span / (1.0 + (-params.slope * (a_hat - params.midpoint)).exp()) + params.p_min;
    p.clamp(params.p_min, params.p_max)
}

/// Number of legitimacy changes in a random schedule.
pub const LEGITIMACY_CHANGES: usize = 20;
pub const LEGITIMACY_LOW: f64 = 0.6;
pub const LEGITIMACY_HIGH: f64 = 0.85;

/// Random piecewise-constant legitimacy over `(0, total_ticks)`.
pub fn make_legitimacy_schedule(seed: u64, total_ticks: i64) -> Result<LegitimacySchedule> {
    make_legitimacy_schedule_from(seed, 0, total_ticks)
}

/// Random legitimacy starting at tick `start`, changing at
/// [`LEGITIMACY_CHANGES`] distinct ticks drawn uniformly from
/// `(start, end)`. Every value lies in `(0.6, 0.85]`.
pub fn make_legitimacy_schedule_from(seed: u64, start: i64, end: i64) -> Result<LegitimacySchedule> {
    let interior = end - start - 1;
    if interior < LEGITIMACY_CHANGES as i64 {
        return Err(Error::InvalidParameter(format!(
            "schedule span {start}..{end} too short for {LEGITIMACY_CHANGES} changes"
        )));
    }
    let mut rng = crate::abm::schedule_rng(seed);
    let mut change_times: Vec<i64> = index::sample(&mut rng, interior as usize, LEGITIMACY_CHANGES)
        .into_iter()
        .map(|i| start + 1 + i as i64)
        .collect();
    change_times.sort_unstable();
    let values = (0..=LEGITIMACY_CHANGES)
        .map(|_| LEGITIMACY_HIGH - (LEGITIMACY_HIGH - LEGITIMACY_LOW) * rng.random::<f64>())
        .collect();
    Ok(LegitimacySchedule {
        start,
        change_times,
        values,
    })
}

/// Closed-loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Completed ticks required before the controller engages.
    pub warmup_ticks: usize,
    pub spec: EmbeddingSpec,
    pub theta: f64,
    /// Propaganda used until warmup completes.
    pub initial_propaganda: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            warmup_ticks: 3000,
            spec: EmbeddingSpec::jailed_quiet(5),
            theta: 2.0,
            initial_propaganda: 0.1,
        }
    }
}

impl LoopConfig {
    /// Smallest library the loop will fit an S-map on.
    pub fn min_library(&self) -> usize {
        self.spec.dim() + 2
    }

    pub fn validate(&self) -> Result<()> {
        let need = self.spec.max_lag() + self.spec.tp() + self.min_library();
        if self.warmup_ticks < need {
            return Err(Error::InvalidParameter(format!(
                "warmup of {} ticks shorter than the {need} needed for a first library",
                self.warmup_ticks
            )));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::InvalidParameter("theta must be >= 0".into()));
        }
        Ok(())
    }
}

/// One controller decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    pub propaganda: f64,
    /// S-map forecast of the target `Tp` ticks past the last observation.
    pub forecast: Option<f64>,
    /// No usable forecast; `propaganda` repeats the previous level.
    pub held: bool,
}

/// Propaganda for the tick after `history`.
///
/// Until `warmup_ticks` observations exist the initial propaganda is
/// returned. Afterwards every history row whose target is already observed
/// forms the library, the state at the latest observation is the query, and
/// the S-map forecast passes through [`propaganda_response`]. A forecast
/// that cannot be made holds `previous`.
pub fn closed_loop_controller(
    history: &Frame,
    config: &LoopConfig,
    params: &ControllerParams,
    previous: f64,
) -> Result<ControlDecision> {
    if history.len() < config.warmup_ticks {
        return Ok(ControlDecision {
            propaganda: config.initial_propaganda,
            forecast: None,
            held: false,
        });
    }
    let hold = ControlDecision {
        propaganda: previous,
        forecast: None,
        held: true,
    };
    let last = history.len() - 1;
    let Some(query) = config.spec.state_at(history, last)? else {
        return Ok(hold);
    };
    // rows with origin <= last - Tp have observed targets
    let library = match build_generalized_embedding(history, &config.spec) {
        Ok(lib) => lib,
        Err(Error::InsufficientData { .. }) => return Ok(hold),
        Err(e) => return Err(e),
    };
    if library.len() < config.min_library() {
        return Ok(hold);
    }
    let out = smap_single(&library, &query, history.time_at(last), &SMapParams::new(config.theta))?;
    if !out.prediction.is_finite() {
        return Ok(hold);
    }
    Ok(ControlDecision {
        propaganda: propaganda_response(out.prediction, params),
        forecast: Some(out.prediction),
        held: false,
    })
}

/// Picks the in-loop theta from the history available when warmup ends.
pub type ThetaTuner = Box<dyn FnMut(&Frame, &EmbeddingSpec) -> Result<f64> + Send>;

/// [`closed_loop_controller`] as a simulation policy.
pub struct EdmController {
    pub config: LoopConfig,
    pub params: ControllerParams,
    last: Option<ControlDecision>,
    held: usize,
    tuner: Option<ThetaTuner>,
}

impl std::fmt::Debug for EdmController {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EdmController")
            .field("config", &self.config)
            .field("params", &self.params)
            .field("last", &self.last)
            .field("held", &self.held)
            .field("tuning_pending", &self.tuner.is_some())
            .finish()
    }
}

impl EdmController {
    pub fn new(config: LoopConfig, params: ControllerParams) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        Ok(Self {
            config,
            params,
            last: None,
            held: 0,
            tuner: None,
        })
    }

    /// Replaces theta with the tuner's choice once warmup completes.
    pub fn with_theta_tuning(mut self, tuner: ThetaTuner) -> Self {
        self.tuner = Some(tuner);
        self
    }

    /// Decisions that held the previous level for lack of a forecast.
    pub fn held_count(&self) -> usize {
        self.held
    }
}

impl PropagandaPolicy for EdmController {
    fn next_propaganda(&mut self, history: &Frame) -> Result<f64> {
        let previous = self
            .last
            .map_or(self.config.initial_propaganda, |d| d.propaganda);
        if history.len() >= self.config.warmup_ticks {
            if let Some(mut tune) = self.tuner.take() {
                self.config.theta = tune(history, &self.config.spec)?;
            }
        }
        let d = closed_loop_controller(history, &self.config, &self.params, previous)?;
        self.held += usize::from(d.held);
        self.last = Some(d);
        Ok(d.propaganda)
    }

    fn last_forecast(&self) -> Option<f64> {
        self.last.and_then(|d| d.forecast)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_midpoint_and_tails() {
        let p = ControllerParams::default();
        assert_eq!(propaganda_response(50.0, &p), 0.33);
        assert!((propaganda_response(1000.0, &p) - 0.6).abs() < 1e-9);
        assert!(propaganda_response(1000.0, &p) <= 0.6);
        // 0.54 / (1 + e^2.5) + 0.06
        let expected = 0.54 / (1.0 + 2.5f64.exp()) + 0.06;
        assert!((propaganda_response(0.0, &p) - expected).abs() < 1e-15);
        assert!((propaganda_response(0.0, &p) - 0.1010).abs() < 5e-5);
    }

    #[test]
    fn schedule_values_and_determinism() {
        let a = make_legitimacy_schedule(3, 5000).unwrap();
        assert_eq!(a, make_legitimacy_schedule(3, 5000).unwrap());
        assert_eq!(a.change_times.len(), LEGITIMACY_CHANGES);
        assert_eq!(a.values.len(), LEGITIMACY_CHANGES + 1);
        assert!(a.change_times.windows(2).all(|w| w[0] < w[1]));
        assert!(a.change_times.iter().all(|&t| t > 0 && t < 5000));
        assert!(a.values.iter().all(|&v| v > 0.6 && v <= 0.85));
        assert!(make_legitimacy_schedule(3, 20).is_err());
        // smallest span that fits: every interior tick is a change point
        let tight = make_legitimacy_schedule(1, 21).unwrap();
        assert_eq!(tight.change_times, (1..=20).collect::<Vec<_>>());
    }

    fn history(active: impl Fn(usize) -> f64, n: usize) -> Frame {
        let jailed: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64).collect();
        let quiet: Vec<f64> = (0..n).map(|i| 1000.0 - ((i * 3) % 17) as f64).collect();
        let act: Vec<f64> = (0..n).map(active).collect();
        Frame::from_columns(&[("quiet", quiet), ("active", act), ("jailed", jailed)]).unwrap()
    }

    fn small_config() -> LoopConfig {
        LoopConfig {
            warmup_ticks: 40,
            ..Default::default()
        }
    }

    #[test]
    fn warmup_returns_initial_propaganda() {
        let h = history(|_| 3.0, 39);
        let d = closed_loop_controller(&h, &small_config(), &ControllerParams::default(), 0.5).unwrap();
        assert_eq!(d.propaganda, 0.1);
        assert_eq!(d.forecast, None);
    }

    #[test]
    fn constant_active_is_forecast_exactly() {
        let h = history(|_| 80.0, 60);
        let p = ControllerParams::default();
        let d = closed_loop_controller(&h, &small_config(), &p, 0.1).unwrap();
        assert!((d.forecast.unwrap() - 80.0).abs() < 1e-8);
        assert!((d.propaganda - propaganda_response(80.0, &p)).abs() < 1e-10);
    }

    #[test]
    fn warmup_too_short_rejected() {
        let cfg = LoopConfig {
            warmup_ticks: 5,
            ..Default::default()
        };
        assert!(EdmController::new(cfg, ControllerParams::default()).is_err());
    }
}
