use super::knn::{knn, Exclusion};
use crate::error::Result;
use crate::timeseries::Embedding;

/// Normalized simplex weights for neighbor distances sorted ascending.
///
/// `exp(-d / d_min)` with `d_min` the smallest nonzero distance. When the
/// nearest neighbor sits at distance zero, the zero-distance neighbors
/// share the weight uniformly.
pub fn simplex_weights(distances: &[f64]) -> Vec<f64> {
    let zeros = distances.iter().filter(|&&d| d == 0.0).count();
    let raw: Vec<f64> = if zeros > 0 {
        distances.iter().map(|&d| if d == 0.0 { 1.0 } else { 0.0 }).collect()
    } else {
        let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        distances.iter().map(|&d| (-d / d_min).exp()).collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Simplex projection: each query's forecast is the weighted mean of the
/// targets of its `k` nearest library rows (`k` defaults to E + 1).
pub fn simplex_predict(
    library: &Embedding,
    queries: &Embedding,
    k: Option<usize>,
    exclusion_radius: Option<usize>,
) -> Result<Vec<f64>> {
    let k = k.unwrap_or(library.dim() + 1);
    let targets = library.targets();
    queries
        .rows()
        .zip(queries.times())
        .map(|(q, &t)| {
            let exclusion = exclusion_radius.map(|radius| Exclusion { query_time: t, radius });
            let nn = knn(library, q, k, exclusion)?;
            let w = simplex_weights(&nn.distances);
            Ok(nn.indices.iter().zip(&w).map(|(&i, w)| w * targets[i]).sum())
        })
        .collect()
}
