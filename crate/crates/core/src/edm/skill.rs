use crate::error::{Error, Result};

/// Forecast skill over the finite (prediction, observation) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkillReport {
    /// Pearson correlation; `None` when either side has zero variance.
    pub rho: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

impl SkillReport {
    pub fn is_degenerate(&self) -> bool {
        self.rho.is_none()
    }

    /// `rho` for tabulation, NaN when degenerate.
    pub fn rho_or_nan(&self) -> f64 {
        self.rho.unwrap_or(f64::NAN)
    }
}

/// Pearson correlation, mean absolute error and RMSE of `predictions`
/// against `observations`, skipping pairs with a non-finite member.
pub fn pearson_rho(predictions: &[f64], observations: &[f64]) -> Result<SkillReport> {
    if predictions.len() != observations.len() {
        return Err(Error::DimensionMismatch {
            expected: observations.len(),
            got: predictions.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = predictions
        .iter()
        .zip(observations)
        .filter(|(p, o)| p.is_finite() && o.is_finite())
        .map(|(&p, &o)| (p, o))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    let nf = n as f64;
    let mp = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mo = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy, mut abs, mut sq) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(p, o) in &pairs {
        let (dp, d_o) = (p - mp, o - mo);
        sxy += dp * d_o;
        sxx += dp * dp;
        syy += d_o * d_o;
        abs += (p - o).abs();
        sq += (p - o) * (p - o);
    }
    let rho = (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
    Ok(SkillReport {
        rho,
        mae: abs / nf,
        rmse: (sq / nf).sqrt(),
        n,
    })
}
