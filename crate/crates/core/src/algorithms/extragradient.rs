use super::{
    auto_step_size, check_divergence, initial_point, max_violation, operator_constants, set_radius,
    Algorithm, EquilibriumResult, Scheme, SolverConfig, StepSize, TraceRow, DIVERGENCE_FACTOR,
};
use crate::error::Result;
use crate::game::AggregativeGame;
use crate::linalg::dist_inf;
use crate::operators::{build_operator, ExtendedOperator, Flavor};

/// Extragradient on the extended VI: two evaluations of T per iteration.
pub fn extragradient(game: &AggregativeGame, flavor: Flavor, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    extragradient_traced(game, flavor, cfg, &mut Vec::new())
}

pub fn extragradient_traced(
    game: &AggregativeGame,
    flavor: Flavor,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRow>,
) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let coupling = game.coupling();
    let t_op = ExtendedOperator::new(build_operator(game, flavor));
    let tau = match cfg.tau {
        StepSize::Auto => {
            let (c, _) = operator_constants(game, flavor, cfg)?;
            let lt = t_op.lipschitz(c.lipschitz)?;
            auto_step_size(0.0, lt, 0.0, Scheme::Extragradient)?
        }
        StepSize::Fixed(t) => t,
    };
    let limit = DIVERGENCE_FACTOR * set_radius(game);
    let rows = coupling.rows();
    let mut x = initial_point(game)?;
    let mut lambda = vec![0.0; rows];
    trace.clear();
    let mut converged = false;
    let mut k = 0;
    let step = |x: &[f64], l: &[f64], gx: &[f64], gl: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let y: Vec<f64> = x.iter().zip(gx).map(|(a, g)| a - tau * g).collect();
        let nx = game.project_profile(&y)?;
        let nl = l.iter().zip(gl).map(|(a, g)| (a - tau * g).max(0.0)).collect();
        Ok((nx, nl))
    };
    while k < cfg.max_iter {
        k += 1;
        let (gx, gl) = t_op.evaluate(&x, &lambda);
        let (hx, hl) = step(&x, &lambda, &gx, &gl)?;
        let (gx2, gl2) = t_op.evaluate(&hx, &hl);
        let (nx, nl) = step(&x, &lambda, &gx2, &gl2)?;
        let res = dist_inf(&nx, &x).max(dist_inf(&nl, &lambda));
        x = nx;
        lambda = nl;
        check_divergence(&x, limit, k, tau)?;
        let viol = max_violation(&coupling.residual(&x));
        if cfg.record_trace {
            trace.push(TraceRow {
                k,
                residual: res,
                max_violation: viol,
                primal_updates: 2 * k,
                dual_updates: 2 * k,
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
        flavor,
        algorithm: Algorithm::Extragradient,
        iterations: k,
        primal_updates: 2 * k,
        dual_updates: 2 * k,
        trace: std::mem::take(trace),
        converged,
        tau,
        inner_residual: 0.0,
        warnings: Vec::new(),
    })
}
