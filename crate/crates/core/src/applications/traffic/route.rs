use std::sync::Arc;

use rand::Rng;

use super::curve::{smoothing_constants, TravelTimes};
use super::network::RoadNetwork;
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, AppTag, ConstraintSet, CostModel, Coupling, Price, Usage};
use crate::graph::shortest_path;
use crate::projection::AffineSystem;
use crate::rng::{substream, STREAM_AGENTS, STREAM_OD_PAIRS};

#[derive(Debug, Clone)]
pub struct RouteChoiceSpec {
    pub m: usize,
    /// Origin-destination vertex indices per agent; drawn from the seed when absent.
    pub od_pairs: Option<Vec<(usize, usize)>>,
    pub gamma_range: (f64, f64),
    /// Explicit deviation weights; drawn from `gamma_range` when absent.
    pub gammas: Option<Vec<f64>>,
    pub seed: u64,
}

impl RouteChoiceSpec {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            od_pairs: None,
            gamma_range: (0.5, 3.5),
            gammas: None,
            seed,
        }
    }
}

/// Per-agent data behind a route-choice game.
#[derive(Debug, Clone)]
pub struct RouteChoice {
    pub od_pairs: Vec<(usize, usize)>,
    pub gamma: Vec<f64>,
    /// Shortest free-flow route of each agent as a 0/1 edge indicator.
    pub preferred: Vec<Vec<f64>>,
}

fn draw_od_pairs(v: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = substream(seed, STREAM_OD_PAIRS);
    (0..m)
        .map(|_| {
            let o = rng.random_range(0..v);
            let mut d = rng.random_range(0..v - 1);
            if d >= o {
                d += 1;
            }
            (o, d)
        })
        .collect()
}

pub fn build_route_choice_game(
    network: &RoadNetwork,
    spec: &RouteChoiceSpec,
) -> Result<(AggregativeGame, RouteChoice)> {
    let v = network.vertices();
    let e = network.directed_edges();
    let m = spec.m;
    if m == 0 {
        return Err(Error::Invalid("need at least one agent".into()));
    }
    if v < 2 {
        return Err(Error::Network("route choice needs at least two vertices".into()));
    }
    let (g_lo, g_hi) = spec.gamma_range;
    if !(g_lo >= 0.0) || !(g_hi >= g_lo) || !g_hi.is_finite() {
        return Err(Error::Invalid(format!("bad gamma range [{g_lo}, {g_hi}]")));
    }
    let od_pairs = match &spec.od_pairs {
        Some(p) => {
            if p.len() != m {
                return Err(Error::Dimension(format!("{} OD pairs for {m} agents", p.len())));
            }
            if let Some(&(o, d)) = p.iter().find(|&&(o, d)| o >= v || d >= v || o == d) {
                return Err(Error::Invalid(format!("bad OD pair ({o}, {d})")));
            }
            p.clone()
        }
        None => draw_od_pairs(v, m, spec.seed),
    };
    let gamma: Vec<f64> = match &spec.gammas {
        Some(g) => {
            if g.len() != m || g.iter().any(|v| !(*v >= g_lo && *v <= g_hi)) {
                return Err(Error::Invalid("need one gamma per agent inside the gamma range".into()));
            }
            g.clone()
        }
        None => {
            let mut rng = substream(spec.seed, STREAM_AGENTS);
            (0..m)
                .map(|_| if g_hi > g_lo { rng.random_range(g_lo..=g_hi) } else { g_lo })
                .collect()
        }
    };

    let incidence = network.incidence();
    let system = Arc::new(AffineSystem::new(incidence)?);
    let endpoints = network.endpoints();
    let t_free: Vec<f64> = network.edges.iter().map(|x| x.t_free).collect();
    let mut preferred = Vec::with_capacity(m);
    let mut sets = Vec::with_capacity(m);
    for &(o, d) in &od_pairs {
        let path = shortest_path(v, &endpoints, &t_free, o, d)
            .ok_or_else(|| Error::Network(format!("vertex {d} unreachable from {o}")))?;
        let mut ind = vec![0.0; e];
        for k in path {
            ind[k] = 1.0;
        }
        preferred.push(ind);
        let mut b_od = vec![0.0; v];
        b_od[o] = -1.0;
        b_od[d] = 1.0;
        sets.push(ConstraintSet::flow(system.clone(), b_od)?);
    }

    let curves = network
        .edges
        .iter()
        .zip(&network.f)
        .map(|(edge, &f)| smoothing_constants(f, network.h, edge.t_free))
        .collect::<Result<Vec<_>>>()?;
    let cost = CostModel::PriceTimesUsage {
        usage: Usage::Proximal {
            gamma: gamma.clone(),
            target: preferred.clone(),
        },
        price: Price::Separable(Arc::new(TravelTimes(curves))),
    };
    let coupling = Coupling::PerComponentCap {
        cap: network.caps.clone(),
        m,
    };
    let f_min = network.f.iter().cloned().fold(f64::INFINITY, f64::min);
    let game = AggregativeGame::new(m, e, cost, sets, coupling)?.with_tag(AppTag::Traffic {
        edges: e,
        f_min,
        gamma_hat: g_lo,
    });
    Ok((
        game,
        RouteChoice {
            od_pairs,
            gamma,
            preferred,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficBounds {
    /// Population size above which the Nash operator is strongly monotone.
    pub m_threshold: f64,
    /// Bound on the distance between Nash and Wardrop equilibria.
    pub distance_bound: f64,
    /// Every Wardrop equilibrium is an eps-Nash equilibrium.
    pub eps: f64,
}

pub fn traffic_bounds(network: &RoadNetwork, gamma_hat: f64, m: usize) -> Result<TrafficBounds> {
    if !(gamma_hat > 0.0) || m == 0 {
        return Err(Error::Invalid("need gamma_hat > 0 and M >= 1".into()));
    }
    let mut m_threshold: f64 = 0.0;
    for (edge, &f) in network.edges.iter().zip(&network.f) {
        let c = smoothing_constants(f, network.h, edge.t_free)?;
        m_threshold = m_threshold.max(1.0 / (32.0 * f * c.delta * gamma_hat));
    }
    let e = network.directed_edges() as f64;
    let f_min = network.f.iter().cloned().fold(f64::INFINITY, f64::min);
    let mf = m as f64;
    Ok(TrafficBounds {
        m_threshold,
        distance_bound: e.sqrt() / (2.0 * f_min * gamma_hat * mf.sqrt()),
        eps: e / (mf * f_min),
    })
}
