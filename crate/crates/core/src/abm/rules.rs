//! Per-citizen decision rules. Pure functions, shared by the simulator and tests.

/// Arrest-rate constant giving a 90% arrest probability at a cop ratio of one.
pub const K_ARREST: f64 = std::f64::consts::LN_10;

/// Grievance of a citizen with the given perceived hardship under `legitimacy`.
#[inline]
pub fn grievance(perceived_hardship: f64, legitimacy: f64) -> f64 {
    perceived_hardship * (1.0 - legitimacy)
}

/// Estimated arrest probability `1 - exp(-k * cop_ratio)`.
#[inline]
pub fn arrest_probability(cop_ratio: f64, k: f64) -> f64 {
    debug_assert!(cop_ratio >= 0.0);
    1.0 - (-k * cop_ratio).exp()
}

/// Threshold rule: a free citizen is Active iff net grievance exceeds propaganda.
#[inline]
pub fn decides_active(
    grievance: f64,
    risk_aversion: f64,
    arrest_probability: f64,
    propaganda: f64,
) -> bool {
    grievance - risk_aversion * arrest_probability > propaganda
}
