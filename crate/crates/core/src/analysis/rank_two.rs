use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTwoReport {
    pub min_found: f64,
    /// -M/4.
    pub bound: f64,
    pub pass: bool,
}

/// Smallest eigenvalue of y 1^T + 1 y^T.
pub fn min_eig_rank_two(y: &[f64]) -> f64 {
    let m = y.len();
    let a = DMatrix::from_fn(m, m, |i, j| y[i] + y[j]);
    SymmetricEigen::new(a)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Checks lambda_min(y 1^T + 1 y^T) >= -M/4 over random points of [0,1]^M
/// and, for M <= 12, over all binary vertices.
pub fn rank_two_check(m: usize, n_random: usize, include_vertices: bool, seed: u64) -> Result<RankTwoReport> {
    if m == 0 {
        return Err(Error::Invalid("M must be at least 1".into()));
    }
    let bound = -(m as f64) / 4.0;
    let mut min_found = f64::INFINITY;
    if include_vertices && m <= 12 {
        for mask in 0u32..(1u32 << m) {
            let y: Vec<f64> = (0..m).map(|k| ((mask >> k) & 1) as f64).collect();
            min_found = min_found.min(min_eig_rank_two(&y));
        }
    }
    let mut rng = crate::rng::substream(seed, crate::rng::STREAM_SAMPLING);
    for _ in 0..n_random {
        let y: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        min_found = min_found.min(min_eig_rank_two(&y));
    }
    Ok(RankTwoReport {
        min_found,
        bound,
        pass: min_found >= bound - 1e-9,
    })
}
