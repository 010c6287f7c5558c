//! Agent-based model of civil disobedience: citizens on a torus grid decide
//! between Quiet and Active against a propaganda threshold, cops jail Active
//! citizens within their vision.

mod params;
pub mod rules;
mod scenario;
mod world;

pub use params::{CopRatioScope, WorldParams, TOTAL_AGENTS};
pub use rules::{arrest_probability, decides_active, grievance, K_ARREST};
pub use world::{ArrestEvent, Citizen, CitizenState, Cop, GovState, TickObservation, World};
pub use scenario::{run_scenario, LegitimacySchedule, PropagandaPolicy, FORECAST_COLUMN, FRAME_COLUMNS};
pub(crate) use world::schedule_rng;
