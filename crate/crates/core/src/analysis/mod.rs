//! Equilibrium verification and the theoretical bounds relating Nash and
//! Wardrop equilibria.

mod bounds;
mod constants;
mod epsilon;
mod kkt;
mod rank_two;
mod uniqueness;
mod vi_gap;

pub use bounds::{distance_bounds, epsilon_bound, DistanceBounds, EpsilonBound};
pub use constants::{envelope, estimate_constants, ConstantSource, ConstantsEstimate, SLOPE_GRID_STEP};
pub use epsilon::{epsilon_nash, EpsilonReport};
pub use kkt::{kkt_residual, KktReport, ACTIVE_TOL};
pub use rank_two::{rank_two_check, min_eig_rank_two, RankTwoReport};
pub use uniqueness::{dual_uniqueness_ev, UniquenessReport};
pub use vi_gap::{vi_gap_sampled, ViGapReport};

use crate::error::Result;
use crate::game::{AggregativeGame, StrategyProfile};
use crate::operators::Flavor;

/// Everything `verify` reports about a candidate equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub flavor: Flavor,
    pub kkt_stationarity: f64,
    pub complementarity_gap: f64,
    pub dual_feasibility: f64,
    pub vi_gap_sampled: f64,
    pub max_individual_violation: f64,
    pub max_coupling_violation: f64,
    pub feasible: bool,
    pub epsilon_nash: f64,
    pub eps_bound: f64,
    pub eps_bound_specialized: Option<f64>,
    pub distance_bound: Option<f64>,
    pub sigma_distance: Option<f64>,
    pub r: f64,
    pub l2: f64,
    pub alpha: Option<f64>,
}

pub const REPORT_COLUMNS: [&str; 16] = [
    "flavor",
    "kkt_stationarity",
    "complementarity_gap",
    "dual_feasibility",
    "vi_gap_sampled",
    "max_individual_violation",
    "max_coupling_violation",
    "feasible",
    "epsilon_nash",
    "eps_bound",
    "eps_bound_specialized",
    "distance_bound",
    "sigma_distance",
    "R",
    "L2",
    "alpha",
];

impl VerificationReport {
    /// Values in `REPORT_COLUMNS` order; absent values are empty strings.
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        vec![
            self.flavor.name().to_string(),
            fmt_num(self.kkt_stationarity),
            fmt_num(self.complementarity_gap),
            fmt_num(self.dual_feasibility),
            fmt_num(self.vi_gap_sampled),
            fmt_num(self.max_individual_violation),
            fmt_num(self.max_coupling_violation),
            self.feasible.to_string(),
            fmt_num(self.epsilon_nash),
            fmt_num(self.eps_bound),
            opt(self.eps_bound_specialized),
            opt(self.distance_bound),
            opt(self.sigma_distance),
            fmt_num(self.r),
            fmt_num(self.l2),
            opt(self.alpha),
        ]
    }
}

/// Fixed-width scientific formatting used in every CSV artifact.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Residuals slightly below zero are reported as zero.
fn floor(v: f64, tol: f64) -> f64 {
    if v < 0.0 && v >= -tol {
        0.0
    } else {
        v
    }
}

/// Verifies a candidate equilibrium; `feas_tol` is the feasibility tolerance
/// behind the `feasible` flag.
pub fn verify(
    game: &AggregativeGame,
    flavor: Flavor,
    x_bar: &StrategyProfile,
    lambda_bar: &[f64],
    n_samples: usize,
    seed: u64,
    feas_tol: f64,
) -> Result<VerificationReport> {
    let tol = feas_tol;
    let kkt = kkt_residual(game, flavor, x_bar, lambda_bar)?;
    let feas = game.feasibility_report(x_bar, tol);
    let gap = vi_gap_sampled(game, flavor, x_bar, n_samples, seed)
        .map(|g| g.min_gap)
        .unwrap_or(f64::NAN);
    let eps = epsilon_nash(game, x_bar)?;
    let c = estimate_constants(game)?;
    let p2 = epsilon_bound(&c, game.m());
    let db = distance_bounds(&c, game.m()).ok();
    Ok(VerificationReport {
        flavor,
        kkt_stationarity: kkt.stationarity,
        complementarity_gap: kkt.complementarity,
        dual_feasibility: floor(kkt.dual_feasibility, 1e-9),
        vi_gap_sampled: floor(gap, 1e-9),
        max_individual_violation: feas.individual.iter().cloned().fold(0.0, f64::max),
        max_coupling_violation: feas.coupling_residual.iter().fold(0.0_f64, |m, r| m.max(-r)),
        feasible: feas.feasible,
        epsilon_nash: eps.epsilon,
        eps_bound: p2.generic,
        eps_bound_specialized: p2.specialized,
        distance_bound: db.map(|d| d.strategy_specialized.unwrap_or(d.strategy_bound)),
        sigma_distance: db.map(|d| d.sigma_specialized.unwrap_or(d.sigma_bound)),
        r: c.r,
        l2: c.l2,
        alpha: c.alpha,
    })
}
