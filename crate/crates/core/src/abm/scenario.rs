use super::params::WorldParams;
use super::world::World;
use crate::error::Result;
use crate::timeseries::Frame;

/// Column names of a scenario frame, in CSV order.
pub const FRAME_COLUMNS: [&str; 5] = ["quiet", "active", "jailed", "legitimacy", "propaganda"];
/// Extra column written by controlled runs.
pub const FORECAST_COLUMN: &str = "forecast_active";

/// Legitimacy over time: `values[0]` from `start`, then `values[i + 1]` from
/// `change_times[i]` on. Before `start` the world keeps its nominal value.
#[derive(Debug, Clone, PartialEq)]
pub struct LegitimacySchedule {
    pub start: i64,
    pub change_times: Vec<i64>,
    pub values: Vec<f64>,
}

impl LegitimacySchedule {
    pub fn constant(value: f64) -> Self {
        Self {
            start: i64::MIN,
            change_times: Vec::new(),
            values: vec![value],
        }
    }

    /// Legitimacy in force at tick `t`, or `None` before the schedule starts.
    pub fn at(&self, t: i64) -> Option<f64> {
        if t < self.start {
            return None;
        }
        let seg = self.change_times.partition_point(|&c| c <= t);
        Some(self.values[seg])
    }
}

/// Government policy choosing propaganda from the observations so far.
pub trait PropagandaPolicy {
    /// Propaganda for the coming tick. `history` holds every completed tick
    /// and nothing later.
    fn next_propaganda(&mut self, history: &Frame) -> Result<f64>;

    /// Forecast behind the most recent decision, if one was made.
    fn last_forecast(&self) -> Option<f64> {
        None
    }
}

/// Runs `steps` ticks of a fresh world. Ticks are numbered from 1.
///
/// Without a policy propaganda stays at `params.propaganda`. With one, the
/// frame gains a `forecast_active` column (NaN where no forecast was made).
pub fn run_scenario(
    params: &WorldParams,
    seed: u64,
    steps: usize,
    legitimacy: &LegitimacySchedule,
    mut policy: Option<&mut dyn PropagandaPolicy>,
) -> Result<Frame> {
    let mut world = World::new(params.clone(), seed)?;
    let mut history = Frame::empty(1, &FRAME_COLUMNS);
    let mut forecasts = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t = world.time() + 1;
        if let Some(l) = legitimacy.at(t) {
            world.set_legitimacy(l);
        }
        if let Some(p) = policy.as_deref_mut() {
            let propaganda = p.next_propaganda(&history)?;
            world.set_propaganda(propaganda);
            forecasts.push(p.last_forecast().unwrap_or(f64::NAN));
        }
        let obs = world.step();
        history.push_row(&[
            obs.quiet as f64,
            obs.active as f64,
            obs.jailed as f64,
            obs.legitimacy,
            obs.propaganda,
        ])?;
    }
    if policy.is_some() {
        history.set_column(FORECAST_COLUMN, forecasts)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lookup() {
        let s = LegitimacySchedule {
            start: 10,
            change_times: vec![20, 30],
            values: vec![0.7, 0.8, 0.65],
        };
        assert_eq!(s.at(9), None);
        assert_eq!(s.at(10), Some(0.7));
        assert_eq!(s.at(19), Some(0.7));
        assert_eq!(s.at(20), Some(0.8));
        assert_eq!(s.at(1000), Some(0.65));
        assert_eq!(LegitimacySchedule::constant(0.8).at(-5), Some(0.8));
    }

    #[test]
    fn uncontrolled_run_holds_propaganda() {
        let params = WorldParams::default();
        let f = run_scenario(&params, 2, 50, &LegitimacySchedule::constant(0.82), None).unwrap();
        assert_eq!(f.len(), 50);
        assert_eq!(f.start(), 1);
        assert!(f.column("propaganda").unwrap().iter().all(|&p| p == params.propaganda));
        assert!(f.column(FORECAST_COLUMN).is_err());
    }

    struct Recorder(Vec<usize>);

    impl PropagandaPolicy for Recorder {
        fn next_propaganda(&mut self, history: &Frame) -> Result<f64> {
            self.0.push(history.len());
            Ok(0.2)
        }
    }

    #[test]
    fn policy_sees_only_completed_ticks() {
        let mut rec = Recorder(Vec::new());
        let f = run_scenario(
            &WorldParams::default(),
            1,
            20,
            &LegitimacySchedule::constant(0.8),
            Some(&mut rec),
        )
        .unwrap();
        assert_eq!(rec.0, (0..20).collect::<Vec<_>>());
        assert!(f.column("propaganda").unwrap().iter().all(|&p| p == 0.2));
        assert!(f.column(FORECAST_COLUMN).unwrap().iter().all(|v| v.is_nan()));
    }
}
