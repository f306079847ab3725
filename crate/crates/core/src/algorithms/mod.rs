//! Decentralised equilibrium seeking: the two-level optimal-response scheme,
//! the asymmetric projection algorithm and extragradient.

mod apa;
mod best_response;
mod extragradient;
mod two_level;

pub use apa::{asymmetric_projection, asymmetric_projection_traced};
pub use best_response::{best_response, best_response_from};
pub use extragradient::{extragradient, extragradient_traced};
pub use two_level::{two_level_wardrop, two_level_wardrop_traced};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, StrategyProfile};
use crate::operators::{build_operator, monotonicity_analysis, Flavor, MonotonicityReport};

/// Safety factor on theoretical step-size thresholds.
pub const STEP_SAFETY: f64 = 0.9;
/// Factors applied to sampled (non-exact) constants.
pub const ALPHA_SAFETY: f64 = 0.9;
pub const LIPSCHITZ_SAFETY: f64 = 1.1;
/// Divergence guard relative to the radius of the individual sets.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    TwoLevel,
    Apa,
    Extragradient,
}

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    TwoLevel,
    ApaNash,
    ApaWardrop,
    Extragradient,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::TwoLevel,
        Algorithm::ApaNash,
        Algorithm::ApaWardrop,
        Algorithm::Extragradient,
    ];

    /// Equilibrium concept the solver targets. Extragradient runs on the
    /// Wardrop operator here; call [`extragradient`] directly for Nash.
    pub fn flavor(self) -> Flavor {
        match self {
            Algorithm::ApaNash => Flavor::Nash,
            _ => Flavor::Wardrop,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::TwoLevel => "two-level",
            Algorithm::ApaNash => "apa-nash",
            Algorithm::ApaWardrop => "apa-wardrop",
            Algorithm::Extragradient => "extragradient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two-level" => Some(Algorithm::TwoLevel),
            "apa-nash" => Some(Algorithm::ApaNash),
            "apa-wardrop" => Some(Algorithm::ApaWardrop),
            "extragradient" => Some(Algorithm::Extragradient),
            _ => None,
        }
    }
}

/// Operator constants supplied by the caller instead of being estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConstants {
    pub alpha: f64,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: StepSize,
    /// Stop once successive iterates differ by at most `tol` (inf-norm) and
    /// no coupling row is violated by more than `tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub seed: u64,
    pub constants: Option<OperatorConstants>,
    pub n_samples: usize,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: StepSize::Auto,
            tol: 1e-4,
            max_iter: 200_000,
            inner_tol: 1e-6,
            inner_max_iter: 10_000,
            seed: 0,
            constants: None,
            n_samples: 20,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let StepSize::Fixed(t) = self.tau {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Invalid(format!("step size must be positive, got {t}")));
            }
        }
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(Error::Invalid("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub residual: f64,
    pub max_violation: f64,
    pub primal_updates: usize,
    pub dual_updates: usize,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub x: StrategyProfile,
    pub lambda: Vec<f64>,
    pub flavor: Flavor,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub primal_updates: usize,
    pub dual_updates: usize,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub tau: f64,
    /// Largest inner fixed-point residual |sigma(x_or(z)) - z|inf at inner
    /// convergence (two-level scheme only).
    pub inner_residual: f64,
    pub warnings: Vec<String>,
}

impl EquilibriumResult {
    pub fn aggregate(&self) -> Vec<f64> {
        self.x.aggregate()
    }
}

/// Runs `algorithm`, leaving the trace in `trace` even when the solver fails.
pub fn solve_traced(
    game: &AggregativeGame,
    algorithm: Algorithm,
    flavor: Flavor,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRow>,
) -> Result<EquilibriumResult> {
    match algorithm {
        Algorithm::TwoLevel => {
            if flavor != Flavor::Wardrop {
                return Err(Error::Invalid("the two-level scheme computes Wardrop equilibria only".into()));
            }
            two_level_wardrop_traced(game, cfg, trace)
        }
        Algorithm::ApaNash | Algorithm::ApaWardrop => asymmetric_projection_traced(game, flavor, cfg, trace),
        Algorithm::Extragradient => extragradient_traced(game, flavor, cfg, trace),
    }
}

/// Runs `algorithm` on its own flavor.
pub fn solve(game: &AggregativeGame, algorithm: Algorithm, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    solve_traced(game, algorithm, algorithm.flavor(), cfg, &mut Vec::new())
}

/// 0.9 times the theoretical step-size threshold of a scheme. For the
/// extragradient scheme `l_f + a_norm` is taken as the Lipschitz constant of
/// the extended operator (pass `a_norm = 0` to supply it directly).
pub fn auto_step_size(alpha: f64, l_f: f64, a_norm: f64, scheme: Scheme) -> Result<f64> {
    if !(l_f >= 0.0) || !(a_norm >= 0.0) {
        return Err(Error::Invalid("constants must be nonnegative".into()));
    }
    match scheme {
        Scheme::TwoLevel => {
            if !(alpha > 0.0) {
                return Err(Error::NotStronglyMonotone(format!("alpha = {alpha}")));
            }
            if !(a_norm > 0.0) {
                return Err(Error::Invalid("two-level step needs |A| > 0".into()));
            }
            Ok(STEP_SAFETY * 2.0 * alpha / (a_norm * a_norm))
        }
        Scheme::Apa => {
            if !(alpha > 0.0) {
                return Err(Error::NotStronglyMonotone(format!("alpha = {alpha}")));
            }
            if !(l_f > 0.0) {
                return Err(Error::Invalid("APA step needs L_F > 0".into()));
            }
            let l2 = l_f * l_f;
            let a2 = a_norm * a_norm;
            let q = 4.0 * alpha * alpha * a2;
            // (-L^2 + sqrt(L^4 + q)) / (2 alpha |A|^2), written to avoid cancellation
            let threshold = if a2 > 0.0 {
                q / ((l2 + (l2 * l2 + q).sqrt()) * 2.0 * alpha * a2)
            } else {
                alpha / l2
            };
            Ok(STEP_SAFETY * threshold)
        }
        Scheme::Extragradient => {
            let lt = l_f + a_norm;
            if !(lt > 0.0) {
                return Err(Error::Invalid("extragradient step needs L_T > 0".into()));
            }
            Ok(STEP_SAFETY / lt)
        }
    }
}

/// Random points of the individual sets (uniform in the bounding box, then projected).
pub fn feasible_sampler(
    game: &AggregativeGame,
    seed: u64,
) -> Result<impl FnMut() -> Vec<f64> + '_> {
    let boxes = game
        .individual()
        .iter()
        .map(|s| s.bounding_box())
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::rng::STREAM_SAMPLING);
    Ok(move || {
        let mut y = Vec::with_capacity(game.dim());
        for (lo, hi) in &boxes {
            y.extend(lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()));
        }
        game.project_profile(&y).unwrap_or(y)
    })
}

/// Constants of F for the given flavor, with safety factors applied when sampled.
pub fn operator_constants(
    game: &AggregativeGame,
    flavor: Flavor,
    cfg: &SolverConfig,
) -> Result<(OperatorConstants, Option<MonotonicityReport>)> {
    if let Some(c) = cfg.constants {
        return Ok((c, None));
    }
    let op = build_operator(game, flavor);
    let mut sampler = feasible_sampler(game, cfg.seed)?;
    let rep = monotonicity_analysis(&op, &mut sampler, cfg.n_samples)?;
    let c = if rep.exact {
        OperatorConstants {
            alpha: rep.alpha,
            lipschitz: rep.lipschitz,
        }
    } else {
        OperatorConstants {
            alpha: ALPHA_SAFETY * rep.alpha,
            lipschitz: LIPSCHITZ_SAFETY * rep.lipschitz,
        }
    };
    Ok((c, Some(rep)))
}

/// Initial point: every agent at the projection of the origin.
pub(crate) fn initial_point(game: &AggregativeGame) -> Result<Vec<f64>> {
    game.project_profile(&vec![0.0; game.dim()])
}

/// Componentwise max |bound| over all individual sets, or 1 when unbounded.
pub(crate) fn set_radius(game: &AggregativeGame) -> f64 {
    game.individual()
        .iter()
        .filter_map(|s| s.bounding_box().ok())
        .map(|(lo, hi)| {
            lo.iter()
                .chain(hi.iter())
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(1.0_f64, f64::max)
}

pub(crate) fn max_violation(residual: &[f64]) -> f64 {
    residual.iter().fold(0.0_f64, |m, r| m.max(-r))
}

pub(crate) fn check_divergence(x: &[f64], limit: f64, k: usize, tau: f64) -> Result<()> {
    let norm = crate::linalg::norm_inf(x);
    if !norm.is_finite() || norm > limit {
        return Err(Error::Diverged {
            iteration: k,
            norm,
            limit,
            tau,
        });
    }
    Ok(())
}
