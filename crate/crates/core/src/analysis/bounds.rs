use crate::error::{Error, Result};
use crate::game::AppTag;

use super::ConstantsEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBound {
    /// 2 R L2 / M.
    pub generic: f64,
    /// Application form when the game carries a tag.
    pub specialized: Option<f64>,
}

/// Epsilon for which every Wardrop equilibrium is an epsilon-Nash equilibrium.
pub fn epsilon_bound(c: &ConstantsEstimate, m: usize) -> EpsilonBound {
    let mf = m as f64;
    let specialized = match c.tag {
        AppTag::Ev { xtilde0 } => Some(2.0 * c.n as f64 * xtilde0 * xtilde0 * c.l_p / mf),
        AppTag::Traffic { edges, f_min, .. } => Some(edges as f64 / (mf * f_min)),
        AppTag::Generic => None,
    };
    EpsilonBound {
        generic: 2.0 * c.r * c.l2 / mf,
        specialized,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBounds {
    /// Bound on |x_N - x_W|.
    pub strategy_bound: f64,
    /// Bound on |sigma(x_N) - sigma(x_W)|.
    pub sigma_bound: f64,
    pub strategy_specialized: Option<f64>,
    pub sigma_specialized: Option<f64>,
}

/// Distance bounds between variational Nash and Wardrop equilibria.
///
/// The aggregate bound sqrt(2 R L2 / (alpha_p M)) needs a pure price cost;
/// otherwise |sigma_N - sigma_W| <= |x_N - x_W| / sqrt(M) is used.
pub fn distance_bounds(c: &ConstantsEstimate, m: usize) -> Result<DistanceBounds> {
    let alpha = c
        .alpha
        .filter(|a| *a > 0.0)
        .ok_or_else(|| Error::NotStronglyMonotone("no positive monotonicity constant".into()))?;
    let mf = m as f64;
    let strategy_bound = c.l2 / (alpha * mf.sqrt());
    let sigma_bound = match c.alpha_price {
        Some(ap) if c.zero_usage && ap > 0.0 => (2.0 * c.r * c.l2 / (ap * mf)).sqrt(),
        _ => strategy_bound / mf.sqrt(),
    };
    let (strategy_specialized, sigma_specialized) = match c.tag {
        AppTag::Ev { xtilde0 } => (
            None,
            c.alpha_price
                .filter(|a| *a > 0.0)
                .map(|ap| xtilde0 * (2.0 * c.n as f64 * c.l_p / (ap * mf)).sqrt()),
        ),
        AppTag::Traffic {
            edges,
            f_min,
            gamma_hat,
        } => (
            Some((edges as f64).sqrt() / (2.0 * f_min * gamma_hat * mf.sqrt())),
            None,
        ),
        AppTag::Generic => (None, None),
    };
    Ok(DistanceBounds {
        strategy_bound,
        sigma_bound,
        strategy_specialized,
        sigma_specialized,
    })
}
