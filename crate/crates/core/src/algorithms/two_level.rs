use super::{
    auto_step_size, best_response_from, check_divergence, initial_point, max_violation,
    operator_constants, set_radius, Algorithm, EquilibriumResult, Scheme, SolverConfig, StepSize,
    TraceRow, DIVERGENCE_FACTOR,
};
use crate::error::{Error, Result};
use crate::game::{aggregate_slice, AggregativeGame};
use crate::linalg::dist_inf;
use crate::operators::Flavor;

/// Two-level scheme for Wardrop equilibria: an averaged optimal-response
/// inner loop for fixed prices, then a projected dual step.
pub fn two_level_wardrop(game: &AggregativeGame, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    two_level_wardrop_traced(game, cfg, &mut Vec::new())
}

pub fn two_level_wardrop_traced(
    game: &AggregativeGame,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRow>,
) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let (m, n) = (game.m(), game.n());
    let coupling = game.coupling();
    let rows = coupling.rows();
    let a_norm = coupling.norm();
    let (consts, _) = operator_constants(game, Flavor::Wardrop, cfg)?;
    if !(consts.alpha > 0.0) {
        return Err(Error::NotStronglyMonotone(format!(
            "Wardrop operator has alpha = {}",
            consts.alpha
        )));
    }
    let tau = match cfg.tau {
        StepSize::Fixed(t) => t,
        StepSize::Auto if rows > 0 && a_norm > 0.0 => {
            auto_step_size(consts.alpha, consts.lipschitz, a_norm, Scheme::TwoLevel)?
        }
        StepSize::Auto => 0.0,
    };
    let limit = DIVERGENCE_FACTOR * set_radius(game);
    let b = coupling.rhs().to_vec();
    let mut x = initial_point(game)?;
    let mut lambda = vec![0.0; rows];
    trace.clear();
    let mut primal = 0;
    let mut dual = 0;
    let mut inner_residual: f64 = 0.0;
    let mut converged = false;
    let mut k = 0;
    while k < cfg.max_iter {
        k += 1;
        // inner loop, warm-started from the current strategies
        let mut xt = x.clone();
        let mut z = aggregate_slice(&xt, m, n);
        let mut inner_ok = false;
        for h in 1..=cfg.inner_max_iter {
            let mut next = Vec::with_capacity(m * n);
            for i in 0..m {
                next.extend(best_response_from(
                    game,
                    i,
                    &z,
                    &lambda,
                    &xt[i * n..(i + 1) * n],
                    cfg.inner_tol * 1e-2,
                    cfg.inner_max_iter,
                )?);
            }
            primal += 1;
            xt = next;
            let s = aggregate_slice(&xt, m, n);
            let fp = dist_inf(&s, &z);
            if fp <= cfg.inner_tol {
                inner_residual = inner_residual.max(fp);
                inner_ok = true;
                break;
            }
            let w = 1.0 / h as f64;
            z.iter_mut().zip(&s).for_each(|(a, b)| *a += w * (b - *a));
        }
        if !inner_ok {
            return Err(Error::NoConvergence(format!(
                "inner loop did not reach a fixed point in {} iterations at outer step {k}; \
                 the optimal-response map may violate the contraction assumption",
                cfg.inner_max_iter
            )));
        }
        let ax = coupling.apply(&xt);
        let nl: Vec<f64> = (0..rows)
            .map(|r| (lambda[r] - tau * (b[r] - ax[r])).max(0.0))
            .collect();
        if rows > 0 {
            dual += 1;
        }
        let res = dist_inf(&xt, &x).max(dist_inf(&nl, &lambda));
        x = xt;
        lambda = nl;
        check_divergence(&x, limit, k, tau)?;
        let viol = max_violation(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
        if cfg.record_trace {
            trace.push(TraceRow {
                k,
                residual: res,
                max_violation: viol,
                primal_updates: primal,
                dual_updates: dual,
            });
        }
        if res <= cfg.tol && viol <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(EquilibriumResult {
        x: game.profile(x)?,
        lambda,
        flavor: Flavor::Wardrop,
        algorithm: Algorithm::TwoLevel,
        iterations: k,
        primal_updates: primal,
        dual_updates: dual,
        trace: std::mem::take(trace),
        converged,
        tau,
        inner_residual,
        warnings: Vec::new(),
    })
}
