use crate::error::{Error, Result};
use crate::game::{AggregativeGame, AppTag, CostModel, Price, Usage};
use crate::linalg::{max_singular, sym_eig_range};
use crate::operators::{build_operator, monotonicity_analysis, Flavor};

/// Grid step for one-dimensional slope scans of separable prices.
pub const SLOPE_GRID_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantSource {
    Exact,
    Formula,
    Sampled,
}

/// Constants entering the epsilon-Nash and distance bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsEstimate {
    /// Radius of the smallest box containing every individual set.
    pub r: f64,
    /// Lipschitz constant of the price map.
    pub l_p: f64,
    /// Lipschitz constant of J^i in its aggregate argument.
    pub l2: f64,
    /// Strong monotonicity constant used in the strategy-distance bound.
    pub alpha: Option<f64>,
    /// Strong monotonicity constant of the price map.
    pub alpha_price: Option<f64>,
    /// Cost is p(z)^T x with no usage term.
    pub zero_usage: bool,
    pub n: usize,
    pub tag: AppTag,
    pub source: ConstantSource,
}

impl ConstantsEstimate {
    /// Bare constants with no application information.
    pub fn simple(r: f64, l2: f64, alpha: Option<f64>) -> Self {
        Self {
            r,
            l_p: if r > 0.0 { l2 / r } else { 0.0 },
            l2,
            alpha,
            alpha_price: None,
            zero_usage: false,
            n: 0,
            tag: AppTag::Generic,
            source: ConstantSource::Exact,
        }
    }
}

/// Componentwise lower and upper envelope of all individual sets.
pub fn envelope(game: &AggregativeGame) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = game.n();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for s in game.individual() {
        let (l, h) = s.bounding_box()?;
        for t in 0..n {
            lo[t] = lo[t].min(l[t]);
            hi[t] = hi[t].max(h[t]);
        }
    }
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Unbounded("individual sets are not bounded".into()));
    }
    Ok((lo, hi))
}

pub fn estimate_constants(game: &AggregativeGame) -> Result<ConstantsEstimate> {
    let (lo, hi) = envelope(game)?;
    let r = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| l.abs().max(h.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let n = game.n();
    let (l_p, alpha_price, zero_usage, mut source) = match game.cost() {
        CostModel::Quadratic { c, .. } => {
            (max_singular(c), Some(sym_eig_range(c).0), false, ConstantSource::Exact)
        }
        CostModel::PriceTimesUsage { usage, price } => {
            let zero = matches!(usage, Usage::Zero);
            match price {
                Price::Affine { c, .. } => {
                    (max_singular(c), Some(sym_eig_range(c).0), zero, ConstantSource::Exact)
                }
                Price::Separable(ps) => {
                    let mut lp: f64 = 0.0;
                    let mut amin = f64::INFINITY;
                    let mut exact = true;
                    for t in 0..n {
                        let (a, b) = (lo[t].max(0.0).min(hi[t]), hi[t]);
                        let steps = (((b - a) / SLOPE_GRID_STEP).ceil() as usize).max(1);
                        let bound = ps.slope_bound(t, b);
                        exact &= bound.is_some();
                        let mut grid_max: f64 = 0.0;
                        for k in 0..=steps {
                            let z = a + (b - a) * k as f64 / steps as f64;
                            let s = ps.slope(t, z);
                            grid_max = grid_max.max(s.abs());
                            amin = amin.min(s);
                        }
                        lp = lp.max(bound.unwrap_or(grid_max));
                    }
                    let src = if exact {
                        ConstantSource::Exact
                    } else {
                        ConstantSource::Formula
                    };
                    (lp, Some(amin), zero, src)
                }
            }
        }
    };
    let l2 = r * l_p;
    // strong monotonicity of whichever operator admits a positive constant
    let mut alpha: Option<f64> = None;
    let mut sample_alpha = false;
    for flavor in [Flavor::Wardrop, Flavor::Nash] {
        let op = build_operator(game, flavor);
        let mut sampler = crate::algorithms::feasible_sampler(game, 0)?;
        let rep = monotonicity_analysis(&op, &mut sampler, 10)?;
        if rep.alpha > 1e-12 && alpha.is_none_or(|a| rep.alpha > a) {
            alpha = Some(rep.alpha);
            sample_alpha = !rep.exact;
        }
    }
    if sample_alpha && source == ConstantSource::Exact {
        source = ConstantSource::Sampled;
    }
    Ok(ConstantsEstimate {
        r,
        l_p,
        l2,
        alpha,
        alpha_price: alpha_price.filter(|a| *a > 0.0),
        zero_usage,
        n,
        tag: game.tag().clone(),
        source,
    })
}
