//! Rank-revealing linear least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: DVector<f64>,
    /// Numerical rank of the design matrix.
    pub rank: usize,
}

impl LstsqSolution {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.coefficients.len()
    }
}

/// Minimum-norm minimizer of `||a c - b||_2`.
///
/// Tall systems are first reduced with a Householder QR to a square
/// triangular factor, whose SVD then decides the rank. Singular values at or
/// below `eps * max(rows, cols) * sigma_max` are treated as zero.
pub fn solve_least_squares(a: DMatrix<f64>, b: DVector<f64>) -> LstsqSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "response length must match design rows");
    let (square, rhs) = if m > n {
        let qr = a.qr();
        let mut qtb = b;
        qr.q_tr_mul(&mut qtb);
        (qr.r(), qtb.rows(0, n).into_owned())
    } else {
        (a, b)
    };
    let svd = square.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = f64::EPSILON * m.max(n) as f64 * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return LstsqSolution {
            coefficients: DVector::zeros(n),
            rank,
        };
    }
    let coefficients = svd
        .solve(&rhs, tol)
        .expect("U and V were requested from the SVD");
    LstsqSolution { coefficients, rank }
}
