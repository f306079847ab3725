use super::{
    auto_step_size, check_divergence, initial_point, max_violation, operator_constants, set_radius,
    Algorithm, EquilibriumResult, Scheme, SolverConfig, StepSize, TraceRow, DIVERGENCE_FACTOR,
};
use crate::error::Result;
use crate::game::{aggregate_slice, AggregativeGame};
use crate::linalg::dist_inf;
use crate::operators::{build_operator, Flavor};

/// Asymmetric projection algorithm: one primal and one dual update per iteration.
pub fn asymmetric_projection(game: &AggregativeGame, flavor: Flavor, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    asymmetric_projection_traced(game, flavor, cfg, &mut Vec::new())
}

/// As [`asymmetric_projection`], recording the trace into `trace` so that it survives a failure.
pub fn asymmetric_projection_traced(
    game: &AggregativeGame,
    flavor: Flavor,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRow>,
) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let (m, n) = (game.m(), game.n());
    let coupling = game.coupling();
    let a_norm = coupling.norm();
    let op = build_operator(game, flavor);
    let mut warnings = Vec::new();
    let tau = match cfg.tau {
        StepSize::Auto => {
            let (c, _) = operator_constants(game, flavor, cfg)?;
            auto_step_size(c.alpha, c.lipschitz, a_norm, Scheme::Apa)?
        }
        StepSize::Fixed(t) => {
            if let Ok((c, _)) = operator_constants(game, flavor, cfg) {
                match auto_step_size(c.alpha, c.lipschitz, a_norm, Scheme::Apa) {
                    Ok(auto) if t > auto / super::STEP_SAFETY => warnings.push(format!(
                        "tau = {t} exceeds the convergence threshold {}",
                        auto / super::STEP_SAFETY
                    )),
                    Err(e) => warnings.push(format!("convergence threshold unavailable: {e}")),
                    _ => {}
                }
            }
            t
        }
    };
    let limit = DIVERGENCE_FACTOR * set_radius(game);
    let mut x = initial_point(game)?;
    let rows = coupling.rows();
    let b = coupling.rhs().to_vec();
    let mut lambda = vec![0.0; rows];
    let mut ax = coupling.apply(&x);
    let mut f = vec![0.0; m * n];
    trace.clear();
    let mut converged = false;
    let mut k = 0;
    let mut y = vec![0.0; n];
    while k < cfg.max_iter {
        k += 1;
        let sigma = aggregate_slice(&x, m, n);
        op.evaluate_with(&x, &sigma, &mut f);
        let at = coupling.apply_transpose(&lambda, m, n);
        let mut nx = Vec::with_capacity(m * n);
        for i in 0..m {
            for t in 0..n {
                let j = i * n + t;
                y[t] = x[j] - tau * (f[j] + at[j]);
            }
            nx.extend(game.individual()[i].project(&y)?);
        }
        let nax = coupling.apply(&nx);
        let nl: Vec<f64> = (0..rows)
            .map(|r| (lambda[r] - tau * (b[r] - 2.0 * nax[r] + ax[r])).max(0.0))
            .collect();
        let res = dist_inf(&nx, &x).max(dist_inf(&nl, &lambda));
        x = nx;
        lambda = nl;
        ax = nax;
        check_divergence(&x, limit, k, tau)?;
        let viol = max_violation(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
        if cfg.record_trace {
            trace.push(TraceRow {
                k,
                residual: res,
                max_violation: viol,
                primal_updates: k,
                dual_updates: k,
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
        algorithm: match flavor {
            Flavor::Nash => Algorithm::ApaNash,
            Flavor::Wardrop => Algorithm::ApaWardrop,
        },
        iterations: k,
        primal_updates: k,
        dual_updates: k,
        trace: std::mem::take(trace),
        converged,
        tau,
        inner_residual: 0.0,
        warnings,
    })
}
