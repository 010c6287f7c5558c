use nalgebra::{DMatrix, DVector};

use super::knn::{check_query, knn, Exclusion};
use super::lstsq::solve_least_squares;
use crate::error::{Error, Result};
use crate::timeseries::Embedding;

/// One S-map forecast with its fitted local linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct SMapOutput {
    pub prediction: f64,
    /// Intercept followed by one coefficient per embedding coordinate.
    pub coefficients: Vec<f64>,
    pub theta: f64,
    /// Mean distance from the query to its neighbors.
    pub mean_distance: f64,
    /// Rank of the weighted design matrix.
    pub rank: usize,
    /// The weighted design matrix lacked full column rank; the
    /// coefficients are the minimum-norm solution.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMapParams {
    /// Kernel localization, `theta >= 0`.
    pub theta: f64,
    /// Neighbor count; `None` uses every library row.
    pub k: Option<usize>,
    pub exclusion_radius: Option<usize>,
}

impl SMapParams {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            k: None,
            exclusion_radius: None,
        }
    }
}

/// S-map forecast for a single query vector.
///
/// Neighbors are weighted by `exp(-theta * d / D)` with `D` their mean
/// distance; the forecast comes from a weighted linear regression of the
/// neighbors' targets on `(1, coordinates)`.
pub fn smap_single(
    library: &Embedding,
    query: &[f64],
    query_time: i64,
    params: &SMapParams,
) -> Result<SMapOutput> {
    check_query(library, query)?;
    if !(params.theta >= 0.0 && params.theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta {} must be >= 0", params.theta)));
    }
    let e = library.dim();
    if library.len() < e + 2 {
        return Err(Error::InsufficientData {
            required: e + 2,
            available: library.len(),
        });
    }
    let exclusion = params
        .exclusion_radius
        .map(|radius| Exclusion { query_time, radius });
    let nn = knn(library, query, params.k.unwrap_or(library.len()), exclusion)?;
    let targets = library.targets();
    let k = nn.len();
    let mean_distance = nn.distances.iter().sum::<f64>() / k as f64;

    if mean_distance == 0.0 {
        let common = nn.indices.iter().map(|&i| targets[i]).sum::<f64>() / k as f64;
        let mut coefficients = vec![0.0; e + 1];
        coefficients[0] = common;
        return Ok(SMapOutput {
            prediction: common,
            coefficients,
            theta: params.theta,
            mean_distance,
            rank: 1,
            rank_deficient: true,
        });
    }

    let weights: Vec<f64> = nn
        .distances
        .iter()
        .map(|d| (-params.theta * d / mean_distance).exp())
        .collect();
    let a = DMatrix::from_fn(k, e + 1, |r, c| {
        let x = if c == 0 { 1.0 } else { library.row(nn.indices[r])[c - 1] };
        weights[r] * x
    });
    let b = DVector::from_fn(k, |r, _| weights[r] * targets[nn.indices[r]]);
    let sol = solve_least_squares(a, b);
    let c = sol.coefficients.as_slice();
    let prediction = c[0] + c[1..].iter().zip(query).map(|(ci, yi)| ci * yi).sum::<f64>();
    Ok(SMapOutput {
        prediction,
        coefficients: c.to_vec(),
        theta: params.theta,
        mean_distance,
        rank: sol.rank,
        rank_deficient: sol.rank < e + 1,
    })
}

/// S-map forecasts for every row of `queries`.
pub fn smap_predict(
    library: &Embedding,
    queries: &Embedding,
    params: &SMapParams,
) -> Result<Vec<SMapOutput>> {
    queries
        .rows()
        .zip(queries.times())
        .map(|(q, &t)| smap_single(library, q, t, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_library() -> Embedding {
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                let (x1, x2) = (i as f64 * 0.7, (j * j) as f64 * 0.3 - i as f64);
                rows.push(vec![x1, x2]);
                ys.push(2.0 + 3.0 * x1 - x2);
            }
        }
        Embedding::from_rows(&rows, &ys, None).unwrap()
    }

    #[test]
    fn recovers_exact_linear_rule() {
        let lib = linear_library();
        for theta in [0.0, 0.5, 3.0, 9.0] {
            let out = smap_single(&lib, &[1.3, -0.4], 0, &SMapParams::new(theta)).unwrap();
            assert!((out.coefficients[0] - 2.0).abs() < 1e-8);
            assert!((out.coefficients[1] - 3.0).abs() < 1e-8);
            assert!((out.coefficients[2] + 1.0).abs() < 1e-8);
            assert!((out.prediction - (2.0 + 3.9 + 0.4)).abs() < 1e-8);
            assert!(!out.rank_deficient);
        }
    }

    #[test]
    fn coincident_neighbors() {
        let rows = vec![vec![1.0, 1.0]; 5];
        let lib = Embedding::from_rows(&rows, &[3.0; 5], None).unwrap();
        let out = smap_single(&lib, &[1.0, 1.0], 0, &SMapParams::new(2.0)).unwrap();
        assert_eq!(out.prediction, 3.0);
        assert_eq!(out.coefficients, vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_coordinate_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 5.0]).collect();
        let ys: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let lib = Embedding::from_rows(&rows, &ys, None).unwrap();
        let out = smap_single(&lib, &[4.5, 5.0], 0, &SMapParams::new(1.0)).unwrap();
        assert!(out.rank_deficient);
        assert!((out.prediction - 9.0).abs() < 1e-8);
    }

    #[test]
    fn too_small_library() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let lib = Embedding::from_rows(&rows, &[1.0, 2.0, 3.0], None).unwrap();
        assert!(matches!(
            smap_single(&lib, &[0.0, 0.0], 0, &SMapParams::new(0.0)),
            Err(Error::InsufficientData { required: 4, .. })
        ));
    }

    #[test]
    fn negative_theta_rejected() {
        let lib = linear_library();
        assert!(smap_single(&lib, &[0.0, 0.0], 0, &SMapParams::new(-1.0)).is_err());
    }
}
