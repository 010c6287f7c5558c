//! Flat key-value run configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abm::{CopRatioScope, WorldParams};
use crate::analysis::{Labeling, PartitionOptions, TrapOptions};
use crate::control::{ControllerParams, LoopConfig};
use crate::error::{Error, Result};
use crate::timeseries::{EmbeddingSpec, TimeRange};

/// Every tunable of a run. Missing keys take their defaults; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // world
    pub width: usize,
    pub height: usize,
    pub n_citizens: usize,
    pub n_cops: usize,
    pub vision: usize,
    pub max_jail_term: u32,
    pub k_arrest: f64,
    /// 0 means unlimited.
    pub jail_capacity: usize,
    pub legitimacy: f64,
    pub propaganda: f64,
    pub cop_ratio_scope: CopRatioScope,
    pub cop_ratio_floor: bool,

    // scenario
    pub steps: usize,
    /// First tick of a random legitimacy schedule.
    pub schedule_start: i64,
    /// Length of the comparison dataset, whose schedule starts at tick 0.
    pub comparison_steps: usize,

    // controller
    pub p_min: f64,
    pub p_max: f64,
    pub slope: f64,
    pub midpoint: f64,
    pub warmup_ticks: usize,
    pub tp: usize,
    pub theta: f64,
    /// Choose the in-loop theta from the warmup data.
    pub auto_theta: bool,

    // evaluation
    pub scan_e_max: usize,
    pub scan_tp_max: usize,
    pub scan_split: f64,
    /// Library origins, `first:last`.
    pub lib: String,
    /// Prediction origins, `first:last`.
    pub pred: String,

    // analysis
    pub analysis_theta: f64,
    pub variance_window: usize,
    pub variance_stride: usize,
    pub legitimacy_threshold: f64,
    pub legitimacy_labeling: LabelingKey,
    pub trap_active_floor: f64,
    pub trap_min_duration: usize,
    /// Active level whose upward crossing marks an outburst.
    pub outburst_threshold: f64,
}

/// Config spelling of [`Labeling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingKey {
    WindowMean,
    Instantaneous,
}

impl Default for Config {
    fn default() -> Self {
        let world = WorldParams::default();
        let ctl = ControllerParams::default();
        let lp = LoopConfig::default();
        let part = PartitionOptions::default();
        let trap = TrapOptions::default();
        Self {
            width: world.width,
            height: world.height,
            n_citizens: world.n_citizens,
            n_cops: world.n_cops,
            vision: world.vision,
            max_jail_term: world.max_jail_term,
            k_arrest: world.k_arrest,
            jail_capacity: world.jail_capacity.unwrap_or(0),
            legitimacy: world.legitimacy,
            propaganda: world.propaganda,
            cop_ratio_scope: world.cop_ratio_scope,
            cop_ratio_floor: world.cop_ratio_floor,
            steps: 6000,
            schedule_start: 3000,
            comparison_steps: 3100,
            p_min: ctl.p_min,
            p_max: ctl.p_max,
            slope: ctl.slope,
            midpoint: ctl.midpoint,
            warmup_ticks: lp.warmup_ticks,
            tp: lp.spec.tp(),
            theta: lp.theta,
            auto_theta: false,
            scan_e_max: 10,
            scan_tp_max: 10,
            scan_split: crate::evaluation::DEFAULT_SPLIT,
            lib: "1:1500".into(),
            pred: "1601:3100".into(),
            analysis_theta: 2.0,
            variance_window: part.window,
            variance_stride: part.stride,
            legitimacy_threshold: part.threshold,
            legitimacy_labeling: LabelingKey::WindowMean,
            trap_active_floor: trap.active_floor,
            trap_min_duration: trap.min_duration,
            outburst_threshold: 50.0,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies one `key=value` override using TOML value syntax; bare
    /// words are taken as strings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        if !table.contains_key(key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_owned()));
        table.insert(key.to_owned(), parsed);
        let next: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.world_params().validate()?;
        self.controller_params().validate()?;
        self.loop_config().validate()?;
        self.lib_range()?;
        self.pred_range()?;
        if !(self.scan_split > 0.0 && self.scan_split < 1.0) {
            return Err(Error::Config("scan_split must lie in (0, 1)".into()));
        }
        if self.variance_window < 2 || self.variance_stride == 0 {
            return Err(Error::Config("variance_window must be >= 2 and variance_stride >= 1".into()));
        }
        Ok(())
    }

    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            width: self.width,
            height: self.height,
            n_citizens: self.n_citizens,
            n_cops: self.n_cops,
            vision: self.vision,
            max_jail_term: self.max_jail_term,
            k_arrest: self.k_arrest,
            jail_capacity: (self.jail_capacity > 0).then_some(self.jail_capacity),
            legitimacy: self.legitimacy,
            propaganda: self.propaganda,
            cop_ratio_scope: self.cop_ratio_scope,
            cop_ratio_floor: self.cop_ratio_floor,
        }
    }

    pub fn controller_params(&self) -> ControllerParams {
        ControllerParams {
            p_min: self.p_min,
            p_max: self.p_max,
            slope: self.slope,
            midpoint: self.midpoint,
        }
    }

    /// The jailed/quiet embedding at the configured horizon.
    pub fn embedding_spec(&self) -> EmbeddingSpec {
        EmbeddingSpec::jailed_quiet(self.tp)
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            warmup_ticks: self.warmup_ticks,
            spec: self.embedding_spec(),
            theta: self.theta,
            initial_propaganda: self.propaganda,
        }
    }

    pub fn partition_options(&self) -> PartitionOptions {
        PartitionOptions {
            threshold: self.legitimacy_threshold,
            window: self.variance_window,
            stride: self.variance_stride,
            labeling: match self.legitimacy_labeling {
                LabelingKey::WindowMean => Labeling::WindowMean,
                LabelingKey::Instantaneous => Labeling::Instantaneous,
            },
        }
    }

    pub fn trap_options(&self) -> TrapOptions {
        TrapOptions {
            active_floor: self.trap_active_floor,
            min_duration: self.trap_min_duration,
        }
    }

    pub fn lib_range(&self) -> Result<TimeRange> {
        self.lib.parse()
    }

    pub fn pred_range(&self) -> Result<TimeRange> {
        self.pred.parse()
    }
}
