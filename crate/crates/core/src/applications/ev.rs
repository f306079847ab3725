//! Electric-vehicle charging game with a grid capacity cap.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{
    AggregativeGame, AppTag, ComponentPrice, ConstraintSet, CostModel, Coupling, Price, Usage,
};

/// Hourly non-EV base demand per household (kW), noon to noon.
pub const BUNDLED_DEMAND: &str = include_str!("../../data/demand.csv");

pub const DEFAULT_SLOTS: usize = 24;
pub const DEFAULT_KAPPA: f64 = 12.0;
pub const DEFAULT_CAP: f64 = 0.55;
pub const DEFAULT_PRICE_SCALE: f64 = 0.15;

/// p_t(z) = scale * sqrt((d_t + z) / kappa_t).
#[derive(Debug, Clone)]
pub struct SqrtPrice {
    pub scale: f64,
    pub demand: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl SqrtPrice {
    fn load(&self, t: usize, z: f64) -> f64 {
        ((self.demand[t] + z) / self.kappa[t]).max(1e-12)
    }
}

impl ComponentPrice for SqrtPrice {
    fn value(&self, t: usize, z: f64) -> f64 {
        self.scale * self.load(t, z).sqrt()
    }

    fn slope(&self, t: usize, z: f64) -> f64 {
        0.5 * self.scale / (self.kappa[t] * self.load(t, z).sqrt())
    }

    fn curvature(&self, t: usize, z: f64) -> f64 {
        -0.25 * self.scale / (self.kappa[t] * self.kappa[t] * self.load(t, z).powf(1.5))
    }

    fn slope_bound(&self, t: usize, _zmax: f64) -> Option<f64> {
        // decreasing slope: the sup sits at z = 0
        (self.demand[t] > 0.0).then(|| self.slope(t, 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct EvParams {
    pub n: usize,
    /// Required energy per agent, (desired - initial charge) / efficiency.
    pub theta: Vec<f64>,
    /// Per-slot charging caps per agent.
    pub xtilde: Vec<Vec<f64>>,
    /// Non-EV demand per capita.
    pub demand: Vec<f64>,
    /// Capacity per capita.
    pub kappa: Vec<f64>,
    /// Cap on the average EV demand per slot.
    pub cap: Vec<f64>,
    pub price: Arc<dyn ComponentPrice>,
}

impl EvParams {
    pub fn m(&self) -> usize {
        self.theta.len()
    }

    /// Largest per-slot charging cap.
    pub fn xtilde0(&self) -> f64 {
        self.xtilde
            .iter()
            .flat_map(|v| v.iter())
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Energy requirement of a vehicle from its charge levels and efficiency.
    pub fn required_charge(desired: f64, initial: f64, efficiency: f64) -> Result<f64> {
        if !(efficiency > 0.0) {
            return Err(Error::Invalid("charging efficiency must be positive".into()));
        }
        Ok(((desired - initial) / efficiency).max(0.0))
    }

    /// Randomised population: theta ~ U[0.5, 1.5]; each vehicle may charge on
    /// a window whose start is drawn from the first half of the horizon and
    /// whose end from the second half, at a constant cap drawn from U[1, 5].
    pub fn random(m: usize, demand: Vec<f64>, seed: u64) -> Result<Self> {
        let n = demand.len();
        if n < 2 {
            return Err(Error::Invalid("need at least two time slots".into()));
        }
        let mut rng = crate::rng::substream(seed, crate::rng::STREAM_AGENTS);
        let half = n / 2;
        let mut theta = Vec::with_capacity(m);
        let mut xtilde = Vec::with_capacity(m);
        for _ in 0..m {
            theta.push(rng.random_range(0.5..1.5));
            let l = rng.random_range(0..half);
            let r = rng.random_range(half..n);
            let v = rng.random_range(1.0..5.0);
            xtilde.push((0..n).map(|t| if t >= l && t <= r { v } else { 0.0 }).collect());
        }
        let price = Arc::new(SqrtPrice {
            scale: DEFAULT_PRICE_SCALE,
            demand: demand.clone(),
            kappa: vec![DEFAULT_KAPPA; n],
        });
        Ok(Self {
            n,
            theta,
            xtilde,
            demand,
            kappa: vec![DEFAULT_KAPPA; n],
            cap: vec![DEFAULT_CAP; n],
            price,
        })
    }

    /// Random population on the bundled demand profile.
    pub fn standard(m: usize, seed: u64) -> Result<Self> {
        Self::random(m, bundled_demand()?, seed)
    }

    /// Population of `copies` identical copies of every vehicle. Growing M
    /// this way keeps the type distribution fixed.
    pub fn replicate(&self, copies: usize) -> Self {
        let mut out = self.clone();
        out.theta = (0..copies).flat_map(|_| self.theta.iter().cloned()).collect();
        out.xtilde = (0..copies).flat_map(|_| self.xtilde.iter().cloned()).collect();
        out
    }

    /// Price scale * sqrt((d_t + z) / kappa) on the current demand profile.
    pub fn with_sqrt_price(mut self, scale: f64, kappa: f64) -> Self {
        self.kappa = vec![kappa; self.n];
        self.price = Arc::new(SqrtPrice {
            scale,
            demand: self.demand.clone(),
            kappa: self.kappa.clone(),
        });
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = vec![cap; self.n];
        self
    }

    fn validate(&self) -> Result<()> {
        let m = self.m();
        if m == 0 || self.n == 0 {
            return Err(Error::Invalid("EV game needs M >= 1 and n >= 1".into()));
        }
        if self.xtilde.len() != m
            || self.xtilde.iter().any(|v| v.len() != self.n)
            || self.demand.len() != self.n
            || self.kappa.len() != self.n
            || self.cap.len() != self.n
        {
            return Err(Error::Dimension("EV parameter lengths disagree".into()));
        }
        for i in 0..m {
            if self.theta[i] < 0.0 || self.xtilde[i].iter().any(|v| *v < 0.0) {
                return Err(Error::Invalid(format!("agent {i} has negative requirement or cap")));
            }
            let total: f64 = self.xtilde[i].iter().sum();
            if self.theta[i] > total + 1e-12 {
                return Err(Error::Infeasible(format!(
                    "agent {i} needs {} but can charge at most {total}",
                    self.theta[i]
                )));
            }
        }
        Ok(())
    }
}

/// Demand profile from a `t,d_t` CSV file.
pub fn load_demand(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_demand(&text, &path.display().to_string())
}

pub fn bundled_demand() -> Result<Vec<f64>> {
    parse_demand(BUNDLED_DEMAND, "demand.csv")
}

fn parse_demand(text: &str, file: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let err = |msg: &str| Error::Parse {
            file: file.to_string(),
            line,
            msg: msg.to_string(),
        };
        if rec.len() != 2 {
            return Err(err("expected two columns t,d_t"));
        }
        let d: f64 = rec[1].parse().map_err(|_| err("d_t is not a number"))?;
        if d < 0.0 {
            return Err(err("negative demand"));
        }
        out.push(d);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            file: file.to_string(),
            line: 1,
            msg: "no demand rows".into(),
        });
    }
    Ok(out)
}

/// Individual sets and coupling shared by the EV games.
fn ev_constraints(params: &EvParams) -> Result<(Vec<ConstraintSet>, Coupling)> {
    params.validate()?;
    check_coupled_feasible(params)?;
    let sets = (0..params.m())
        .map(|i| {
            ConstraintSet::box_budget(vec![0.0; params.n], params.xtilde[i].clone(), params.theta[i])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        sets,
        Coupling::PerComponentCap {
            cap: params.cap.clone(),
            m: params.m(),
        },
    ))
}

/// Charging game with the price-times-usage cost.
pub fn build_ev_game(params: &EvParams) -> Result<AggregativeGame> {
    let (sets, coupling) = ev_constraints(params)?;
    let cost = CostModel::PriceTimesUsage {
        usage: Usage::Zero,
        price: Price::Separable(params.price.clone()),
    };
    Ok(AggregativeGame::new(params.m(), params.n, cost, sets, coupling)?.with_tag(AppTag::Ev {
        xtilde0: params.xtilde0(),
    }))
}

/// Same constraints with J = 1/2 x'Qx + (C sigma + d)'x.
pub fn build_ev_quadratic_game(params: &EvParams, q: f64, c: f64) -> Result<AggregativeGame> {
    let (sets, coupling) = ev_constraints(params)?;
    let n = params.n;
    let cost = CostModel::Quadratic {
        q: nalgebra::DMatrix::identity(n, n) * q,
        c: nalgebra::DMatrix::identity(n, n) * c,
        offsets: vec![params.demand.clone(); params.m()],
    };
    AggregativeGame::new(params.m(), n, cost, sets, coupling)
}

/// The coupled set is nonempty iff a flow from agents to slots meets every
/// requirement: source -> agent (theta_i), agent -> slot (xtilde_it),
/// slot -> sink (M K_t).
fn check_coupled_feasible(params: &EvParams) -> Result<()> {
    let (m, n) = (params.m(), params.n);
    let need: f64 = params.theta.iter().sum();
    if need == 0.0 {
        return Ok(());
    }
    if params.cap.iter().any(|k| *k < 0.0) {
        return Err(Error::Infeasible("negative cap: zero charging violates it".into()));
    }
    let flow = max_flow_bipartite(
        &params.theta,
        &params.xtilde,
        &params
            .cap
            .iter()
            .map(|k| k * m as f64)
            .collect::<Vec<_>>(),
    );
    if flow < need - 1e-9 * (1.0 + need) {
        return Err(Error::Infeasible(format!(
            "caps allow {flow:.6} of the required {need:.6} total charge over {n} slots"
        )));
    }
    Ok(())
}

/// Edmonds-Karp on the agent/slot transportation network.
fn max_flow_bipartite(supply: &[f64], arc_cap: &[Vec<f64>], demand_cap: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand_cap.len());
    let (s, tsink) = (0, m + n + 1);
    let nodes = m + n + 2;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut add = |u: usize, v: usize, c: f64, adj: &mut Vec<Vec<usize>>| {
        adj[u].push(to.len());
        to.push(v);
        cap.push(c);
        adj[v].push(to.len());
        to.push(u);
        cap.push(0.0);
    };
    for i in 0..m {
        add(s, 1 + i, supply[i], &mut adj);
        for t in 0..n {
            if arc_cap[i][t] > 0.0 {
                add(1 + i, 1 + m + t, arc_cap[i][t], &mut adj);
            }
        }
    }
    for t in 0..n {
        add(1 + m + t, tsink, demand_cap[t], &mut adj);
    }
    let eps = 1e-12;
    let mut total = 0.0;
    loop {
        let mut prev = vec![usize::MAX; nodes];
        let mut q = VecDeque::from([s]);
        let mut seen = vec![false; nodes];
        seen[s] = true;
        while let Some(u) = q.pop_front() {
            for &a in &adj[u] {
                let v = to[a];
                if !seen[v] && cap[a] > eps {
                    seen[v] = true;
                    prev[v] = a;
                    q.push_back(v);
                }
            }
        }
        if !seen[tsink] {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = tsink;
        while v != s {
            let a = prev[v];
            push = push.min(cap[a]);
            v = to[a ^ 1];
        }
        let mut v = tsink;
        while v != s {
            let a = prev[v];
            cap[a] -= push;
            cap[a ^ 1] += push;
            v = to[a ^ 1];
        }
        total += push;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    /// min over t and z in [0, xtilde0] of p_t'(z) - xtilde0 p_t''(z) / 8.
    pub min_value: f64,
}

/// Grid check of p' - xtilde0 p'' / 8 > 0, which makes the Nash operator
/// strongly monotone.
pub fn ev_condition_check(params: &EvParams, grid_step: f64) -> Result<ConditionReport> {
    if !(grid_step > 0.0) {
        return Err(Error::Invalid("grid step must be positive".into()));
    }
    let x0 = params.xtilde0();
    let steps = ((x0 / grid_step).ceil() as usize).max(1);
    let mut min_value = f64::INFINITY;
    for t in 0..params.n {
        for k in 0..=steps {
            let z = x0 * k as f64 / steps as f64;
            let v = params.price.slope(t, z) - x0 * params.price.curvature(t, z) / 8.0;
            min_value = min_value.min(v);
        }
    }
    Ok(ConditionReport {
        holds: min_value > 0.0,
        min_value,
    })
}
