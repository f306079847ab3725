use crate::error::{Error, Result};
use crate::game::{AggregativeGame, ConstraintSet, CostModel, Usage};
use crate::graph::{edge_endpoints, shortest_path};
use crate::linalg::{dist_inf, dot, sym_eig_range};

/// Optimal response of agent `i` to the signal `z` and price `lambda`:
/// argmin over X^i of J^i(x, z) + lambda^T A_i x.
pub fn best_response(
    game: &AggregativeGame,
    i: usize,
    z: &[f64],
    lambda: &[f64],
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<Vec<f64>> {
    let set = game.individual().get(i).ok_or(Error::Index {
        index: i,
        count: game.m(),
    })?;
    let start = set.project(&vec![0.0; game.n()])?;
    best_response_from(game, i, z, lambda, &start, inner_tol, inner_max_iter)
}

/// As `best_response`, warm-started at `start`.
pub fn best_response_from(
    game: &AggregativeGame,
    i: usize,
    z: &[f64],
    lambda: &[f64],
    start: &[f64],
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<Vec<f64>> {
    let n = game.n();
    if i >= game.m() {
        return Err(Error::Index {
            index: i,
            count: game.m(),
        });
    }
    if z.len() != n || lambda.len() != game.coupling().rows() {
        return Err(Error::Dimension("signal or price has the wrong length".into()));
    }
    if lambda.iter().any(|l| *l < 0.0) {
        return Err(Error::Invalid("lambda must be nonnegative".into()));
    }
    let set = &game.individual()[i];
    let shift = game.coupling().agent_transpose(i, lambda, n);
    let l_br = match game.cost() {
        CostModel::Quadratic { q, .. } => {
            let (lo, hi) = sym_eig_range(q);
            if lo < -1e-12 {
                return Err(Error::NonConvex(format!("Q has eigenvalue {lo}")));
            }
            hi
        }
        CostModel::PriceTimesUsage { usage, price } => match usage {
            Usage::Zero => {
                let mut r = price.value(z);
                r.iter_mut().zip(&shift).for_each(|(a, b)| *a += b);
                return linear_response(set, &r);
            }
            Usage::Proximal { gamma, .. } => {
                if gamma[i] < 0.0 {
                    return Err(Error::NonConvex(format!("gamma_{i} = {}", gamma[i])));
                }
                gamma[i]
            }
        },
    };
    let grad = |x: &[f64]| -> Vec<f64> {
        let mut g = game.cost().grad_own(i, x, z);
        g.iter_mut().zip(&shift).for_each(|(a, b)| *a += b);
        g
    };
    if l_br <= 0.0 {
        return linear_response(set, &grad(start));
    }
    let step = 1.0 / l_br;
    let mut x = start.to_vec();
    let mut g = grad(&x);
    for _ in 0..inner_max_iter {
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let nx = set.project(&y)?;
        let change = dist_inf(&nx, &x);
        let ng = grad(&nx);
        let d: Vec<f64> = nx.iter().zip(&x).map(|(a, b)| a - b).collect();
        let curv = dot(&ng, &d) - dot(&g, &d);
        if curv < -1e-12 * (1.0 + dot(&d, &d)) {
            return Err(Error::NonConvex(format!(
                "negative curvature {curv:e} along the iterates of agent {i}"
            )));
        }
        x = nx;
        g = ng;
        if change <= inner_tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(format!(
        "best response of agent {i} after {inner_max_iter} iterations"
    )))
}

/// Exact minimiser of r^T x over the set.
pub(crate) fn linear_response(set: &ConstraintSet, r: &[f64]) -> Result<Vec<f64>> {
    match set {
        ConstraintSet::Box { lo, hi } => Ok(box_vertex(lo, hi, r)),
        ConstraintSet::BoxBudget { lo, hi, theta } => {
            let mut x = box_vertex(lo, hi, r);
            let mut missing = theta - x.iter().sum::<f64>();
            if missing > 0.0 {
                let mut idx: Vec<usize> = (0..r.len()).filter(|&t| x[t] < hi[t]).collect();
                idx.sort_by(|&a, &b| r[a].partial_cmp(&r[b]).unwrap().then(a.cmp(&b)));
                for t in idx {
                    if missing <= 0.0 {
                        break;
                    }
                    let add = (hi[t] - x[t]).min(missing);
                    x[t] += add;
                    missing -= add;
                }
            }
            Ok(x)
        }
        ConstraintSet::FlowPolytope {
            system,
            b_od,
            lo,
            hi,
        } => {
            let unit = lo.iter().all(|v| *v == 0.0) && hi.iter().all(|v| *v >= 1.0);
            if !unit || r.iter().any(|c| *c < 0.0) {
                return Err(Error::Invalid(
                    "linear response on a flow polytope needs unit capacities and nonnegative costs"
                        .into(),
                ));
            }
            let edges = edge_endpoints(system.matrix());
            let origin = b_od.iter().position(|v| *v < 0.0);
            let dest = b_od.iter().position(|v| *v > 0.0);
            let mut x = vec![0.0; r.len()];
            if let (Some(o), Some(d)) = (origin, dest) {
                let path = shortest_path(system.rows(), &edges, r, o, d)
                    .ok_or_else(|| Error::Infeasible("destination unreachable".into()))?;
                for e in path {
                    x[e] = 1.0;
                }
            }
            Ok(x)
        }
        ConstraintSet::HalfspaceIntersection { .. } => Err(Error::Invalid(
            "linear response over a general halfspace set is not supported".into(),
        )),
    }
}

fn box_vertex(lo: &[f64], hi: &[f64], r: &[f64]) -> Vec<f64> {
    (0..r.len())
        .map(|t| if r[t] < 0.0 { hi[t] } else { lo[t] })
        .collect()
}
