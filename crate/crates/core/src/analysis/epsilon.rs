use crate::error::{Error, Result};
use crate::game::{AggregativeGame, ConstraintSet, Coupling, Halfspace, StrategyProfile};
use crate::linalg::{dist_inf, dot};
use crate::projection::{dykstra, ProjectorSpec, DYKSTRA_MAX_ITER, DYKSTRA_TOL};

const MAX_ITER: usize = 20_000;
const GRAD_MAP_TOL: f64 = 1e-9;
/// Consecutive steps without a meaningful decrease before giving up.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub epsilon: f64,
    /// Best cost improvement of each agent.
    pub improvement: Vec<f64>,
}

/// Largest cost reduction any agent achieves by deviating unilaterally within
/// its coupled feasible set, with the deviation entering the aggregate.
pub fn epsilon_nash(game: &AggregativeGame, x_bar: &StrategyProfile) -> Result<EpsilonReport> {
    let (m, n) = (game.m(), game.n());
    if x_bar.m() != m || x_bar.n() != n {
        return Err(Error::Dimension("profile does not match the game".into()));
    }
    let mf = m as f64;
    let total: Vec<f64> = x_bar.aggregate().iter().map(|v| v * mf).collect();
    let mut improvement = Vec::with_capacity(m);
    for i in 0..m {
        let xi = x_bar.agent(i);
        let others: Vec<f64> = total.iter().zip(xi).map(|(s, v)| s - v).collect();
        let set = deviation_set(game, i, x_bar, &others)?;
        let phi = |y: &[f64]| -> f64 {
            let z: Vec<f64> = y.iter().zip(&others).map(|(a, b)| (a + b) / mf).collect();
            game.cost().value(i, y, &z)
        };
        let grad = |y: &[f64]| -> Vec<f64> {
            let z: Vec<f64> = y.iter().zip(&others).map(|(a, b)| (a + b) / mf).collect();
            let mut g = game.cost().grad_own(i, y, &z);
            let ga = game.cost().grad_agg(i, y, &z);
            g.iter_mut().zip(&ga).for_each(|(a, b)| *a += b / mf);
            g
        };
        let start = set.project(xi)?;
        let best = projected_gradient(&phi, &grad, &|y| set.project(y), start)?;
        improvement.push((phi(xi) - phi(&best)).max(0.0));
    }
    let epsilon = improvement.iter().cloned().fold(0.0, f64::max);
    Ok(EpsilonReport {
        epsilon,
        improvement,
    })
}

/// Feasible deviations of agent i with everybody else held at x_bar.
enum DeviationSet {
    Plain(ConstraintSet),
    WithHalfspaces(Vec<ProjectorSpec>),
}

impl DeviationSet {
    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            DeviationSet::Plain(s) => s.project(y),
            DeviationSet::WithHalfspaces(ps) => match dykstra(y, ps, DYKSTRA_TOL, DYKSTRA_MAX_ITER) {
                Err(Error::Dykstra { last, gap, .. }) if gap < 1e-8 => Ok(last),
                r => r,
            },
        }
    }
}

fn deviation_set(
    game: &AggregativeGame,
    i: usize,
    x_bar: &StrategyProfile,
    others: &[f64],
) -> Result<DeviationSet> {
    let n = game.n();
    let set = &game.individual()[i];
    match game.coupling() {
        Coupling::PerComponentCap { cap, m } => {
            let room: Vec<f64> = (0..n).map(|t| cap[t] * *m as f64 - others[t]).collect();
            Ok(DeviationSet::Plain(set.with_upper_cap(&room)))
        }
        Coupling::Dense { a, b } => {
            if b.is_empty() {
                return Ok(DeviationSet::Plain(set.clone()));
            }
            let ax = crate::linalg::mat_vec(a, x_bar.entries());
            let mut ps = vec![ProjectorSpec::Individual(set.clone())];
            for r in 0..b.len() {
                let row: Vec<f64> = (0..n).map(|t| a[(r, i * n + t)]).collect();
                if row.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let own = dot(&row, x_bar.agent(i));
                ps.push(ProjectorSpec::Halfspace(Halfspace {
                    a: row,
                    beta: b[r] - (ax[r] - own),
                }));
            }
            if ps.len() == 1 {
                return Ok(DeviationSet::Plain(set.clone()));
            }
            Ok(DeviationSet::WithHalfspaces(ps))
        }
    }
}

/// Projected gradient with backtracking on the local Lipschitz estimate.
fn projected_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    proj: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    let mut y = start;
    let mut fy = f(&y);
    let mut step = 1.0;
    let mut stalled = 0;
    for _ in 0..MAX_ITER {
        let g = grad(&y);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let ny = proj(&trial)?;
            let d: Vec<f64> = ny.iter().zip(&y).map(|(a, b)| a - b).collect();
            let fny = f(&ny);
            let model = fy + dot(&g, &d) + dot(&d, &d) / (2.0 * step);
            if fny <= model + 1e-15 * (1.0 + fy.abs()) {
                accepted = Some((ny, fny));
                break;
            }
            step *= 0.5;
        }
        let Some((ny, fny)) = accepted else {
            break;
        };
        let moved = dist_inf(&ny, &y);
        if fy - fny <= 1e-14 * (1.0 + fy.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        y = ny;
        fy = fny;
        // gradient-mapping norm
        if moved <= 1e-13 * (1.0 + crate::linalg::norm_inf(&y)) || moved / step <= GRAD_MAP_TOL
            || stalled >= STALL_LIMIT
        {
            break;
        }
        step *= 2.0;
    }
    Ok(y)
}
