use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, ConstraintSet, StrategyProfile};
use crate::linalg::{lstsq, numerical_rank};
use crate::operators::{build_operator, Flavor};

/// Active-set tolerance.
pub const ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// |F_i + A_i^T lambda + Gamma_i^T mu_i|inf, worst agent.
    pub stationarity: f64,
    /// max_j |lambda_j (b - A x)_j|.
    pub complementarity: f64,
    /// Smallest sign-constrained multiplier (coupling and active individual rows).
    pub dual_feasibility: f64,
    /// Some agent's active rows are linearly dependent.
    pub degenerate: bool,
}

/// KKT residuals of (x_bar, lambda_bar) with least-squares individual multipliers.
pub fn kkt_residual(
    game: &AggregativeGame,
    flavor: Flavor,
    x_bar: &StrategyProfile,
    lambda_bar: &[f64],
) -> Result<KktReport> {
    let (m, n) = (game.m(), game.n());
    if lambda_bar.len() != game.coupling().rows() {
        return Err(Error::Dimension("lambda has the wrong length".into()));
    }
    let f = build_operator(game, flavor).evaluate(x_bar.entries());
    let mut stationarity: f64 = 0.0;
    let mut dual = lambda_bar.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut degenerate = false;
    for i in 0..m {
        let xi = x_bar.agent(i);
        let mut g: Vec<f64> = f[i * n..(i + 1) * n].to_vec();
        let at = game.coupling().agent_transpose(i, lambda_bar, n);
        g.iter_mut().zip(&at).for_each(|(a, b)| *a += b);
        let (ineq, eq) = active_rows(&game.individual()[i], xi);
        let k = ineq.len() + eq.len();
        if k == 0 {
            stationarity = stationarity.max(crate::linalg::norm_inf(&g));
            continue;
        }
        let gm = DMatrix::from_fn(n, k, |t, j| {
            if j < ineq.len() {
                ineq[j][t]
            } else {
                eq[j - ineq.len()][t]
            }
        });
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mu = lstsq(&gm, &rhs);
        let fit = crate::linalg::mat_vec(&gm, &mu);
        let r = g.iter().zip(&fit).fold(0.0_f64, |a, (x, y)| a.max((x + y).abs()));
        stationarity = stationarity.max(r);
        for v in &mu[..ineq.len()] {
            dual = dual.min(*v);
        }
        let eq_rank = if eq.is_empty() {
            0
        } else {
            numerical_rank(&gm.columns(ineq.len(), eq.len()).into_owned(), 1e-9)
        };
        if numerical_rank(&gm, 1e-9) < ineq.len() + eq_rank {
            degenerate = true;
        }
    }
    let res = game.coupling().residual(x_bar.entries());
    let complementarity = lambda_bar
        .iter()
        .zip(&res)
        .fold(0.0_f64, |a, (l, r)| a.max((l * r).abs()));
    Ok(KktReport {
        stationarity,
        complementarity,
        dual_feasibility: if dual.is_finite() { dual } else { 0.0 },
        degenerate,
    })
}

/// Gradients of the active inequality rows (written as g(x) <= 0) and of the
/// equality rows of a set at x.
fn active_rows(set: &ConstraintSet, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = x.len();
    let unit = |t: usize, s: f64| {
        let mut v = vec![0.0; n];
        v[t] = s;
        v
    };
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    let boxed = |lo: &[f64], hi: &[f64], ineq: &mut Vec<Vec<f64>>, eq: &mut Vec<Vec<f64>>| {
        for t in 0..n {
            if hi[t] - lo[t] <= ACTIVE_TOL {
                eq.push(unit(t, 1.0));
            } else if x[t] <= lo[t] + ACTIVE_TOL {
                ineq.push(unit(t, -1.0));
            } else if x[t] >= hi[t] - ACTIVE_TOL {
                ineq.push(unit(t, 1.0));
            }
        }
    };
    match set {
        ConstraintSet::Box { lo, hi } => boxed(lo, hi, &mut ineq, &mut eq),
        ConstraintSet::BoxBudget { lo, hi, theta } => {
            boxed(lo, hi, &mut ineq, &mut eq);
            if x.iter().sum::<f64>() <= theta + ACTIVE_TOL {
                ineq.push(vec![-1.0; n]);
            }
        }
        ConstraintSet::FlowPolytope {
            system, lo, hi, ..
        } => {
            boxed(lo, hi, &mut ineq, &mut eq);
            let b = system.matrix();
            for r in 0..b.nrows() {
                eq.push((0..n).map(|t| b[(r, t)]).collect());
            }
        }
        ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => {
            if let Some((lo, hi)) = bounds {
                boxed(lo, hi, &mut ineq, &mut eq);
            }
            for h in halfspaces {
                if crate::linalg::dot(&h.a, x) >= h.beta - ACTIVE_TOL {
                    ineq.push(h.a.clone());
                }
            }
        }
    }
    (ineq, eq)
}
