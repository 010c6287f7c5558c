//! Empirical dynamic modeling (simplex and S-map forecasting on delay and
//! generalized embeddings) together with an agent-based civil-disobedience
//! model whose government sets propaganda from S-map forecasts.
//!
//! The usual entry points are [`experiment::run`] for scenarios,
//! [`evaluation`] for skill scans and out-of-sample forecasts, and
//! [`analysis`] for interaction coefficients and trapped-state detection.

pub mod abm;
pub mod analysis;
pub mod config;
pub mod control;
pub mod edm;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod stats;
pub mod timeseries;

pub use config::Config;
pub use edm::SkillReport;
pub use error::{Error, Result};
pub use timeseries::{Coordinate, Embedding, EmbeddingSpec, Frame, TimeRange};
