use nalgebra::DMatrix;

use crate::applications::ev::EvParams;
use crate::error::{Error, Result};
use crate::game::StrategyProfile;
use crate::linalg::numerical_rank;

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// The coupling multipliers are uniquely determined.
    pub unique: bool,
    /// First agent interior at every tight slot and at some slack slot.
    pub witness_agent: Option<usize>,
    /// Slots where the cap is tight.
    pub tight: Vec<usize>,
}

/// Uniqueness of the multipliers of the EV cap at a Nash equilibrium.
///
/// A witness agent settles the question directly. Without one, the
/// multiplier differences compatible with every agent's stationarity are
/// collected as a linear system over the tight slots; the multipliers are
/// unique exactly when that system has a trivial nullspace.
pub fn dual_uniqueness_ev(
    x_bar: &StrategyProfile,
    params: &EvParams,
    lambda_bar: &[f64],
    tol: f64,
) -> Result<UniquenessReport> {
    let (m, n) = (x_bar.m(), x_bar.n());
    if params.n != n || params.theta.len() != m || lambda_bar.len() != n {
        return Err(Error::Dimension("EV parameters do not match the profile".into()));
    }
    let sigma = x_bar.aggregate();
    let tight: Vec<usize> = (0..n).filter(|&t| sigma[t] >= params.cap[t] - tol).collect();
    if tight.is_empty() {
        return Ok(UniquenessReport {
            unique: true,
            witness_agent: None,
            tight,
        });
    }
    let interior = |i: usize, t: usize| {
        let v = x_bar.agent(i)[t];
        v > tol && v < params.xtilde[i][t] - tol
    };
    let is_tight = |t: usize| tight.contains(&t);
    let witness = (0..m).find(|&i| {
        tight.iter().all(|&t| interior(i, t)) && (0..n).any(|t| !is_tight(t) && interior(i, t))
    });
    if witness.is_some() {
        return Ok(UniquenessReport {
            unique: true,
            witness_agent: witness,
            tight,
        });
    }
    // rows of the homogeneous system on multiplier differences over `tight`
    let k = tight.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let free: Vec<usize> = (0..k).filter(|&j| interior(i, tight[j])).collect();
        if free.is_empty() {
            continue;
        }
        let budget_active = x_bar.agent(i).iter().sum::<f64>() <= params.theta[i] + tol;
        let slack_interior = (0..n).any(|t| !is_tight(t) && interior(i, t));
        if !budget_active || slack_interior {
            for &j in &free {
                let mut r = vec![0.0; k];
                r[j] = 1.0;
                rows.push(r);
            }
        } else {
            for w in free.windows(2) {
                let mut r = vec![0.0; k];
                r[w[0]] = 1.0;
                r[w[1]] = -1.0;
                rows.push(r);
            }
        }
    }
    let unique = if rows.is_empty() {
        false
    } else {
        let a = DMatrix::from_fn(rows.len(), k, |r, c| rows[r][c]);
        numerical_rank(&a, 1e-9) == k
    };
    Ok(UniquenessReport {
        unique,
        witness_agent: None,
        tight,
    })
}
