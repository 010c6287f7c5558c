//! Named scenario runs built from a [`Config`].

use crate::abm::{run_scenario, LegitimacySchedule};
use crate::config::Config;
use crate::control::{make_legitimacy_schedule, make_legitimacy_schedule_from, EdmController};
use crate::error::{Error, Result};
use crate::evaluation::select_theta;
use crate::timeseries::{Frame, TimeRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegitimacyMode {
    /// The configured legitimacy throughout.
    Constant,
    /// The configured legitimacy until `schedule_start`, then a random schedule.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRequest {
    pub seed: u64,
    pub steps: usize,
    pub control: bool,
    pub legitimacy: LegitimacyMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub frame: Frame,
    pub schedule: LegitimacySchedule,
    /// Controller decisions that held the previous propaganda level.
    pub held: usize,
    /// In-loop theta, when control was on.
    pub theta: Option<f64>,
}

/// Runs one scenario.
pub fn run(config: &Config, request: &RunRequest) -> Result<RunOutput> {
    let schedule = match request.legitimacy {
        LegitimacyMode::Constant => LegitimacySchedule::constant(config.legitimacy),
        LegitimacyMode::Random => {
            make_legitimacy_schedule_from(request.seed, config.schedule_start, request.steps as i64)?
        }
    };
    let params = config.world_params();
    if !request.control {
        let frame = run_scenario(&params, request.seed, request.steps, &schedule, None)?;
        return Ok(RunOutput {
            frame,
            schedule,
            held: 0,
            theta: None,
        });
    }
    let mut controller = EdmController::new(config.loop_config(), config.controller_params())?;
    if config.auto_theta {
        controller = controller.with_theta_tuning(theta_tuner());
    }
    let frame = run_scenario(&params, request.seed, request.steps, &schedule, Some(&mut controller))?;
    Ok(RunOutput {
        frame,
        schedule,
        held: controller.held_count(),
        theta: Some(controller.config.theta),
    })
}

/// Chooses theta from the warmup history: the first 80% of its rows fit,
/// the rest validate.
fn theta_tuner() -> crate::control::ThetaTuner {
    Box::new(|history, spec| {
        let last = history.time_at(history.len() - 1);
        let scan = select_theta(history, spec, TimeRange::new(history.start(), last), 0.8)?;
        scan.best()
            .map(|(theta, _)| theta)
            .ok_or_else(|| Error::Numerical("no theta gave a usable forecast".into()))
    })
}

/// Uncontrolled run whose random legitimacy schedule spans the whole
/// record, used for the out-of-sample model comparison.
pub fn comparison_frame(config: &Config, seed: u64) -> Result<Frame> {
    let steps = config.comparison_steps;
    let schedule = make_legitimacy_schedule(seed, steps as i64)?;
    run_scenario(&config.world_params(), seed, steps, &schedule, None)
}
