use crate::error::{Error, Result};

use super::rules::K_ARREST;

/// Total agent population the world is sized for.
pub const TOTAL_AGENTS: usize = 1200;

/// Where a deciding citizen counts cops and Active citizens for its cop ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopRatioScope {
    /// Every cell within the citizen's vision radius.
    Vision,
    /// The citizen's own cell and its eight neighbours.
    Adjacent,
}

/// Static parameters of the civil-disobedience world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldParams {
    pub width: usize,
    pub height: usize,
    pub n_citizens: usize,
    pub n_cops: usize,
    /// Cell radius for movement, cop ratio and arrest search.
    pub vision: usize,
    /// Jail terms are drawn uniformly from `1..=max_jail_term`.
    pub max_jail_term: u32,
    pub k_arrest: f64,
    /// `None` means unlimited.
    pub jail_capacity: Option<usize>,
    pub legitimacy: f64,
    pub propaganda: f64,
    pub cop_ratio_scope: CopRatioScope,
    /// Truncate the cop ratio to an integer before computing arrest probability.
    pub cop_ratio_floor: bool,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            width: 40,
            height: 40,
            n_citizens: 1120,
            n_cops: 80,
            vision: 7,
            max_jail_term: 30,
            k_arrest: K_ARREST,
            jail_capacity: Some(400),
            legitimacy: 0.85,
            propaganda: 0.1,
            cop_ratio_scope: CopRatioScope::Vision,
            cop_ratio_floor: true,
        }
    }
}

impl WorldParams {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.width == 0 || self.height == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if self.vision == 0 {
            return bad("vision must be >= 1".into());
        }
        if self.n_citizens + self.n_cops > self.cells() {
            return bad(format!(
                "{} agents do not fit on {} cells",
                self.n_citizens + self.n_cops,
                self.cells()
            ));
        }
        if self.max_jail_term == 0 {
            return bad("max_jail_term must be >= 1".into());
        }
        if !(self.legitimacy > 0.0 && self.legitimacy <= 1.0) {
            return bad(format!("legitimacy {} outside (0, 1]", self.legitimacy));
        }
        if !(self.propaganda.is_finite() && self.propaganda >= 0.0) {
            return bad(format!("propaganda {} must be finite and >= 0", self.propaganda));
        }
        if !(self.k_arrest.is_finite() && self.k_arrest > 0.0) {
            return bad("k_arrest must be positive".into());
        }
        Ok(())
    }
}
