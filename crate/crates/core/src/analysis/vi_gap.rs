use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, StrategyProfile};
use crate::linalg::dot;
use crate::operators::{build_operator, Flavor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViGapReport {
    /// min over samples of F(x_bar)^T (x - x_bar).
    pub min_gap: f64,
    /// Share of raw draws that already satisfied the coupling constraint.
    pub acceptance_rate: f64,
}

/// Sampled variational-inequality gap over the coupled feasible set. Even
/// draws are uniform in the bounding box, odd draws perturb x_bar at a random
/// scale; both are projected onto the individual sets. Draws violating the
/// coupling constraint are pulled back toward x_bar along the segment by the
/// largest feasible fraction.
pub fn vi_gap_sampled(
    game: &AggregativeGame,
    flavor: Flavor,
    x_bar: &StrategyProfile,
    n_samples: usize,
    seed: u64,
) -> Result<ViGapReport> {
    if x_bar.m() != game.m() || x_bar.n() != game.n() {
        return Err(Error::Dimension("profile does not match the game".into()));
    }
    let xb = x_bar.entries();
    let f = build_operator(game, flavor).evaluate(xb);
    let boxes = game
        .individual()
        .iter()
        .map(|s| s.bounding_box())
        .collect::<Result<Vec<_>>>()?;
    let coupling = game.coupling();
    let ax_bar = coupling.apply(xb);
    let b = coupling.rhs();
    let mut rng = crate::rng::substream(seed, crate::rng::STREAM_SAMPLING);
    let mut min_gap = f64::INFINITY;
    let mut accepted = 0usize;
    let mut used = 0usize;
    for k in 0..n_samples {
        let mut y = Vec::with_capacity(game.dim());
        let scale = 10f64.powf(-3.0 * rng.random::<f64>());
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            let xi = x_bar.agent(i);
            y.extend(lo.iter().zip(hi).zip(xi).map(|((l, h), c)| {
                let u = rng.random::<f64>();
                if k % 2 == 0 {
                    l + (h - l) * u
                } else {
                    c + scale * (h - l) * (2.0 * u - 1.0)
                }
            }));
        }
        let x = game.project_profile(&y)?;
        let ax = coupling.apply(&x);
        // largest s in [0,1] with b - A(x_bar + s (x - x_bar)) >= 0
        let mut s: f64 = 1.0;
        for r in 0..b.len() {
            let slope = ax[r] - ax_bar[r];
            let slack = (b[r] - ax_bar[r]).max(0.0);
            if slope > 0.0 && ax_bar[r] + slope > b[r] {
                s = s.min(slack / slope);
            }
        }
        if s >= 1.0 {
            accepted += 1;
        }
        if s <= 0.0 {
            continue;
        }
        used += 1;
        let d: Vec<f64> = x.iter().zip(xb).map(|(a, c)| s * (a - c)).collect();
        min_gap = min_gap.min(dot(&f, &d));
    }
    if used == 0 {
        return Err(Error::NoConvergence(format!(
            "no usable samples (acceptance rate {})",
            accepted as f64 / n_samples.max(1) as f64
        )));
    }
    Ok(ViGapReport {
        min_gap,
        acceptance_rate: accepted as f64 / n_samples as f64,
    })
}
