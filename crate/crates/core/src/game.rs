//! Aggregative games: strategy profiles, cost models, individual and coupling constraints.
//!
//! Agent indices are zero-based throughout.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{mat_t_vec, mat_vec, max_singular};
use crate::projection::{self, AffineSystem};

/// Feasibility tolerance used when callers do not pass one.
pub const DEFAULT_FEAS_TOL: f64 = 1e-6;

/// Stacked strategies of `m` agents with `n` components each.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    entries: Vec<f64>,
    m: usize,
    n: usize,
}

impl StrategyProfile {
    pub fn new(entries: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension("M and n must be positive".into()));
        }
        if entries.len() != m * n {
            return Err(Error::Dimension(format!(
                "profile has {} entries, expected M*n = {}",
                entries.len(),
                m * n
            )));
        }
        Ok(Self { entries, m, n })
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::new(vec![0.0; m * n], m, n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn aggregate(&self) -> Vec<f64> {
        aggregate_slice(&self.entries, self.m, self.n)
    }
}

/// Population average (1/M) sum_i x^i.
pub fn aggregate(x: &StrategyProfile) -> Vec<f64> {
    x.aggregate()
}

/// Average over agents of a stacked slice, summed in agent order.
pub fn aggregate_slice(x: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n];
    for i in 0..m {
        for (t, v) in x[i * n..(i + 1) * n].iter().enumerate() {
            s[t] += v;
        }
    }
    let inv = 1.0 / m as f64;
    s.iter_mut().for_each(|v| *v *= inv);
    s
}

/// Halfspace a.x <= beta.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub beta: f64,
}

/// Closed convex set an agent's strategy must lie in.
#[derive(Debug, Clone)]
pub enum ConstraintSet {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Box intersected with the budget sum_t x_t >= theta.
    BoxBudget {
        lo: Vec<f64>,
        hi: Vec<f64>,
        theta: f64,
    },
    /// {x : Bx = b_od, lo <= x <= hi}; `hi` is the unit vector for route choice.
    FlowPolytope {
        system: Arc<AffineSystem>,
        b_od: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    HalfspaceIntersection {
        halfspaces: Vec<Halfspace>,
        bounds: Option<(Vec<f64>, Vec<f64>)>,
    },
}

impl ConstraintSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = ConstraintSet::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn box_budget(lo: Vec<f64>, hi: Vec<f64>, theta: f64) -> Result<Self> {
        let s = ConstraintSet::BoxBudget { lo, hi, theta };
        s.validate()?;
        Ok(s)
    }

    /// Flow polytope with the unit box.
    pub fn flow(system: Arc<AffineSystem>, b_od: Vec<f64>) -> Result<Self> {
        let e = system.cols();
        let s = ConstraintSet::FlowPolytope {
            system,
            b_od,
            lo: vec![0.0; e],
            hi: vec![1.0; e],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Box { lo, .. } | ConstraintSet::BoxBudget { lo, .. } => lo.len(),
            ConstraintSet::FlowPolytope { system, .. } => system.cols(),
            ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => bounds
                .as_ref()
                .map(|b| b.0.len())
                .or_else(|| halfspaces.first().map(|h| h.a.len()))
                .unwrap_or(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
            if lo.len() != hi.len() {
                return Err(Error::Dimension("box bounds differ in length".into()));
            }
            if let Some(t) = (0..lo.len()).find(|&t| !(lo[t] <= hi[t])) {
                return Err(Error::Invalid(format!(
                    "lo > hi at component {t} ({} > {})",
                    lo[t], hi[t]
                )));
            }
            Ok(())
        }
        match self {
            ConstraintSet::Box { lo, hi } => check_box(lo, hi),
            ConstraintSet::BoxBudget { lo, hi, theta } => {
                check_box(lo, hi)?;
                let cap: f64 = hi.iter().sum();
                if !theta.is_finite() || *theta > cap + 1e-12 {
                    return Err(Error::Infeasible(format!(
                        "budget {theta} exceeds total upper bound {cap}"
                    )));
                }
                Ok(())
            }
            ConstraintSet::FlowPolytope {
                system,
                b_od,
                lo,
                hi,
            } => {
                check_box(lo, hi)?;
                if lo.len() != system.cols() || b_od.len() != system.rows() {
                    return Err(Error::Dimension("flow polytope sizes disagree".into()));
                }
                if b_od.iter().any(|v| *v != 0.0 && *v != 1.0 && *v != -1.0) {
                    return Err(Error::Invalid("b_od entries must be in {-1, 0, 1}".into()));
                }
                if b_od.iter().sum::<f64>() != 0.0 {
                    return Err(Error::Invalid("b_od must sum to zero".into()));
                }
                system.check_consistent(b_od)
            }
            ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => {
                let d = self.dim();
                if let Some((lo, hi)) = bounds {
                    check_box(lo, hi)?;
                }
                if halfspaces.iter().any(|h| h.a.len() != d) {
                    return Err(Error::Dimension("halfspace normal has wrong length".into()));
                }
                Ok(())
            }
        }
    }

    /// Largest violation of the set's constraints at `x` (0 when inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let box_viol = |lo: &[f64], hi: &[f64]| {
            (0..x.len()).fold(0.0_f64, |m, t| m.max(lo[t] - x[t]).max(x[t] - hi[t]))
        };
        match self {
            ConstraintSet::Box { lo, hi } => box_viol(lo, hi),
            ConstraintSet::BoxBudget { lo, hi, theta } => {
                box_viol(lo, hi).max(theta - x.iter().sum::<f64>())
            }
            ConstraintSet::FlowPolytope {
                system,
                b_od,
                lo,
                hi,
            } => {
                let r = system.residual(x, b_od);
                box_viol(lo, hi).max(crate::linalg::norm_inf(&r))
            }
            ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => {
                let hv = halfspaces.iter().fold(0.0_f64, |m, h| {
                    m.max(crate::linalg::dot(&h.a, x) - h.beta)
                });
                match bounds {
                    Some((lo, hi)) => hv.max(box_viol(lo, hi)),
                    None => hv,
                }
            }
        }
        .max(0.0)
    }

    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        projection::project_individual(self, y)
    }

    /// Smallest axis-aligned box known to contain the set.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            ConstraintSet::Box { lo, hi }
            | ConstraintSet::BoxBudget { lo, hi, .. }
            | ConstraintSet::FlowPolytope { lo, hi, .. } => Ok((lo.clone(), hi.clone())),
            ConstraintSet::HalfspaceIntersection { bounds, .. } => bounds
                .clone()
                .ok_or_else(|| Error::Unbounded("halfspace set without a bounding box".into())),
        }
    }

    /// Copy with upper bounds lowered to `cap` componentwise (never below lo).
    pub fn with_upper_cap(&self, cap: &[f64]) -> ConstraintSet {
        let tighten = |lo: &[f64], hi: &[f64]| -> Vec<f64> {
            (0..hi.len()).map(|t| hi[t].min(cap[t]).max(lo[t])).collect()
        };
        match self {
            ConstraintSet::Box { lo, hi } => ConstraintSet::Box {
                lo: lo.clone(),
                hi: tighten(lo, hi),
            },
            ConstraintSet::BoxBudget { lo, hi, theta } => ConstraintSet::BoxBudget {
                lo: lo.clone(),
                hi: tighten(lo, hi),
                theta: *theta,
            },
            ConstraintSet::FlowPolytope {
                system,
                b_od,
                lo,
                hi,
            } => ConstraintSet::FlowPolytope {
                system: system.clone(),
                b_od: b_od.clone(),
                lo: lo.clone(),
                hi: tighten(lo, hi),
            },
            ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => {
                let mut hs = halfspaces.clone();
                let bounds = match bounds {
                    Some((lo, hi)) => Some((lo.clone(), tighten(lo, hi))),
                    None => {
                        for (t, c) in cap.iter().enumerate() {
                            if c.is_finite() {
                                let mut a = vec![0.0; cap.len()];
                                a[t] = 1.0;
                                hs.push(Halfspace { a, beta: *c });
                            }
                        }
                        None
                    }
                };
                ConstraintSet::HalfspaceIntersection {
                    halfspaces: hs,
                    bounds,
                }
            }
        }
    }
}

/// Linear coupling constraint A x <= b over the stacked profile.
#[derive(Debug, Clone)]
pub enum Coupling {
    Dense { a: DMatrix<f64>, b: Vec<f64> },
    /// (1/M) sum_i x^i_t <= cap_t for every component t.
    PerComponentCap { cap: Vec<f64>, m: usize },
}

impl Coupling {
    pub fn none(m: usize, n: usize) -> Self {
        Coupling::Dense {
            a: DMatrix::zeros(0, m * n),
            b: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Coupling::Dense { b, .. } => b.len(),
            Coupling::PerComponentCap { cap, .. } => cap.len(),
        }
    }

    pub fn rhs(&self) -> &[f64] {
        match self {
            Coupling::Dense { b, .. } => b,
            Coupling::PerComponentCap { cap, .. } => cap,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Coupling::Dense { a, .. } => mat_vec(a, x),
            Coupling::PerComponentCap { cap, m } => aggregate_slice(x, *m, cap.len()),
        }
    }

    /// b - A x.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.apply(x);
        self.rhs().iter().zip(&ax).map(|(b, v)| b - v).collect()
    }

    /// A^T lambda over the whole profile.
    pub fn apply_transpose(&self, lambda: &[f64], m: usize, n: usize) -> Vec<f64> {
        match self {
            Coupling::Dense { a, .. } => mat_t_vec(a, lambda),
            Coupling::PerComponentCap { .. } => {
                let mut out = Vec::with_capacity(m * n);
                for _ in 0..m {
                    out.extend(lambda.iter().map(|l| l / m as f64));
                }
                out
            }
        }
    }

    /// A_{(:,i)}^T lambda, the block seen by agent i.
    pub fn agent_transpose(&self, i: usize, lambda: &[f64], n: usize) -> Vec<f64> {
        match self {
            Coupling::Dense { a, .. } => (0..n)
                .map(|t| (0..a.nrows()).map(|r| a[(r, i * n + t)] * lambda[r]).sum())
                .collect(),
            Coupling::PerComponentCap { m, .. } => lambda.iter().map(|l| l / *m as f64).collect(),
        }
    }

    /// Columns of A belonging to agent i (rows x n).
    pub fn agent_block(&self, i: usize, n: usize) -> DMatrix<f64> {
        match self {
            Coupling::Dense { a, .. } => a.columns(i * n, n).into_owned(),
            Coupling::PerComponentCap { m, .. } => DMatrix::identity(n, n) / *m as f64,
        }
    }

    pub fn to_dense(&self, m: usize, n: usize) -> DMatrix<f64> {
        match self {
            Coupling::Dense { a, .. } => a.clone(),
            Coupling::PerComponentCap { .. } => {
                let mut a = DMatrix::zeros(n, m * n);
                for i in 0..m {
                    for t in 0..n {
                        a[(t, i * n + t)] = 1.0 / m as f64;
                    }
                }
                a
            }
        }
    }

    /// Spectral norm of A.
    pub fn norm(&self) -> f64 {
        match self {
            Coupling::Dense { a, .. } => max_singular(a),
            Coupling::PerComponentCap { m, .. } => 1.0 / (*m as f64).sqrt(),
        }
    }
}

/// A separable price map z -> p(z) with p_t depending on z_t only.
pub trait ComponentPrice: Send + Sync + Debug {
    fn value(&self, t: usize, z: f64) -> f64;
    fn slope(&self, t: usize, z: f64) -> f64;
    fn curvature(&self, t: usize, z: f64) -> f64;
    /// Exact sup of |p_t'| over [0, zmax] when known in closed form.
    fn slope_bound(&self, _t: usize, _zmax: f64) -> Option<f64> {
        None
    }
}

/// Aggregate-dependent price in the price-times-usage cost.
#[derive(Debug, Clone)]
pub enum Price {
    /// p(z) = C z + offset.
    Affine { c: DMatrix<f64>, offset: Vec<f64> },
    Separable(Arc<dyn ComponentPrice>),
}

impl Price {
    pub fn value(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Price::Affine { c, offset } => {
                let mut v = mat_vec(c, z);
                v.iter_mut().zip(offset).for_each(|(a, b)| *a += b);
                v
            }
            Price::Separable(p) => z.iter().enumerate().map(|(t, zt)| p.value(t, *zt)).collect(),
        }
    }

    /// Jacobian Dp(z) applied transposed to x: Dp(z)^T x.
    pub fn jac_t_vec(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            Price::Affine { c, .. } => mat_t_vec(c, x),
            Price::Separable(p) => z
                .iter()
                .zip(x)
                .enumerate()
                .map(|(t, (zt, xt))| p.slope(t, *zt) * xt)
                .collect(),
        }
    }

    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        match self {
            Price::Affine { c, .. } => c.clone(),
            Price::Separable(p) => {
                let n = z.len();
                DMatrix::from_fn(n, n, |r, s| if r == s { p.slope(r, z[r]) } else { 0.0 })
            }
        }
    }
}

/// Aggregate-independent part v^i of the price-times-usage cost.
#[derive(Debug, Clone)]
pub enum Usage {
    Zero,
    /// (gamma_i / 2) |x - target_i|^2.
    Proximal {
        gamma: Vec<f64>,
        target: Vec<Vec<f64>>,
    },
}

impl Usage {
    pub fn value(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Usage::Zero => 0.0,
            Usage::Proximal { gamma, target } => {
                0.5 * gamma[i] * crate::linalg::dist2(x, &target[i]).powi(2)
            }
        }
    }

    pub fn gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        match self {
            Usage::Zero => vec![0.0; x.len()],
            Usage::Proximal { gamma, target } => x
                .iter()
                .zip(&target[i])
                .map(|(a, b)| gamma[i] * (a - b))
                .collect(),
        }
    }

    /// Curvature of v^i: the Hessian is this multiple of the identity.
    pub fn curvature(&self, i: usize) -> f64 {
        match self {
            Usage::Zero => 0.0,
            Usage::Proximal { gamma, .. } => gamma[i],
        }
    }
}

#[derive(Debug, Clone)]
pub enum CostModel {
    /// J = 1/2 x'Qx + (Cz + c_i)'x.
    Quadratic {
        q: DMatrix<f64>,
        c: DMatrix<f64>,
        offsets: Vec<Vec<f64>>,
    },
    /// J = v_i(x) + p(z)'x.
    PriceTimesUsage { usage: Usage, price: Price },
}

impl CostModel {
    pub fn value(&self, i: usize, x: &[f64], z: &[f64]) -> f64 {
        match self {
            CostModel::Quadratic { q, c, offsets } => {
                let qx = mat_vec(q, x);
                let cz = mat_vec(c, z);
                (0..x.len())
                    .map(|t| x[t] * (0.5 * qx[t] + cz[t] + offsets[i][t]))
                    .sum()
            }
            CostModel::PriceTimesUsage { usage, price } => {
                usage.value(i, x) + crate::linalg::dot(&price.value(z), x)
            }
        }
    }

    /// Gradient in x^i with z held fixed.
    pub fn grad_own(&self, i: usize, x: &[f64], z: &[f64]) -> Vec<f64> {
        match self {
            CostModel::Quadratic { q, c, offsets } => {
                let mut g = mat_vec(q, x);
                let cz = mat_vec(c, z);
                for t in 0..g.len() {
                    g[t] += cz[t] + offsets[i][t];
                }
                g
            }
            CostModel::PriceTimesUsage { usage, price } => {
                let mut g = usage.gradient(i, x);
                g.iter_mut().zip(price.value(z)).for_each(|(a, p)| *a += p);
                g
            }
        }
    }

    /// Gradient in z with x^i held fixed.
    pub fn grad_agg(&self, _i: usize, x: &[f64], z: &[f64]) -> Vec<f64> {
        match self {
            CostModel::Quadratic { c, .. } => mat_t_vec(c, x),
            CostModel::PriceTimesUsage { price, .. } => price.jac_t_vec(z, x),
        }
    }

    fn check(&self, m: usize, n: usize) -> Result<()> {
        match self {
            CostModel::Quadratic { q, c, offsets } => {
                if q.shape() != (n, n) || c.shape() != (n, n) {
                    return Err(Error::Dimension("Q and C must be n x n".into()));
                }
                if offsets.len() != m || offsets.iter().any(|o| o.len() != n) {
                    return Err(Error::Dimension("need one length-n offset per agent".into()));
                }
                if (q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
                    return Err(Error::Invalid("Q must be symmetric".into()));
                }
                Ok(())
            }
            CostModel::PriceTimesUsage { usage, price } => {
                if let Usage::Proximal { gamma, target } = usage {
                    if gamma.len() != m || target.len() != m || target.iter().any(|t| t.len() != n) {
                        return Err(Error::Dimension("proximal usage sizes disagree".into()));
                    }
                }
                if let Price::Affine { c, offset } = price {
                    if c.shape() != (n, n) || offset.len() != n {
                        return Err(Error::Dimension("affine price sizes disagree".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Application-specific data used by the specialised bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum AppTag {
    Generic,
    Ev { xtilde0: f64 },
    Traffic { edges: usize, f_min: f64, gamma_hat: f64 },
}

#[derive(Debug, Clone)]
pub struct AggregativeGame {
    m: usize,
    n: usize,
    cost: CostModel,
    individual: Vec<ConstraintSet>,
    coupling: Coupling,
    tag: AppTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub individual: Vec<f64>,
    pub coupling_residual: Vec<f64>,
    pub feasible: bool,
}

impl AggregativeGame {
    pub fn new(
        m: usize,
        n: usize,
        cost: CostModel,
        individual: Vec<ConstraintSet>,
        coupling: Coupling,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Invalid("games need M >= 1 and n >= 1".into()));
        }
        if individual.len() != m {
            return Err(Error::Dimension(format!(
                "{} constraint sets for {m} agents",
                individual.len()
            )));
        }
        for (i, s) in individual.iter().enumerate() {
            if s.dim() != n {
                return Err(Error::Dimension(format!("agent {i} set has dimension {}", s.dim())));
            }
            s.validate()?;
        }
        match &coupling {
            Coupling::Dense { a, b } => {
                if a.ncols() != m * n || a.nrows() != b.len() {
                    return Err(Error::Dimension("coupling A must be rows x (M n)".into()));
                }
            }
            Coupling::PerComponentCap { cap, m: mc } => {
                if cap.len() != n || *mc != m {
                    return Err(Error::Dimension("per-component cap sizes disagree".into()));
                }
            }
        }
        cost.check(m, n)?;
        Ok(Self {
            m,
            n,
            cost,
            individual,
            coupling,
            tag: AppTag::Generic,
        })
    }

    pub fn with_tag(mut self, tag: AppTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn individual(&self) -> &[ConstraintSet] {
        &self.individual
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn tag(&self) -> &AppTag {
        &self.tag
    }

    fn check_agent(&self, i: usize, x: &[f64], z: &[f64]) -> Result<()> {
        if i >= self.m {
            return Err(Error::Index {
                index: i,
                count: self.m,
            });
        }
        if x.len() != self.n || z.len() != self.n {
            return Err(Error::Dimension("x_i and z must have length n".into()));
        }
        Ok(())
    }

    pub fn cost_value(&self, i: usize, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_agent(i, x, z)?;
        Ok(self.cost.value(i, x, z))
    }

    pub fn grad_own(&self, i: usize, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_agent(i, x, z)?;
        Ok(self.cost.grad_own(i, x, z))
    }

    pub fn grad_agg(&self, i: usize, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_agent(i, x, z)?;
        Ok(self.cost.grad_agg(i, x, z))
    }

    pub fn profile(&self, entries: Vec<f64>) -> Result<StrategyProfile> {
        StrategyProfile::new(entries, self.m, self.n)
    }

    pub fn feasibility_report(&self, x: &StrategyProfile, tol: f64) -> FeasibilityReport {
        let individual: Vec<f64> = (0..self.m)
            .map(|i| self.individual[i].violation(x.agent(i)))
            .collect();
        let coupling_residual = self.coupling.residual(x.entries());
        let feasible = individual.iter().all(|v| *v <= tol)
            && coupling_residual.iter().all(|r| *r >= -tol);
        FeasibilityReport {
            individual,
            coupling_residual,
            feasible,
        }
    }

    /// Projection of every agent block onto its own set.
    pub fn project_profile(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(y.len());
        for i in 0..self.m {
            out.extend(self.individual[i].project(&y[i * self.n..(i + 1) * self.n])?);
        }
        Ok(out)
    }

    /// Same game with a different coupling constraint.
    pub fn with_coupling(&self, coupling: Coupling) -> Result<Self> {
        let g = Self::new(
            self.m,
            self.n,
            self.cost.clone(),
            self.individual.clone(),
            coupling,
        )?;
        Ok(g.with_tag(self.tag.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_quadratic(m: usize, q: f64, c: f64, offset: f64, lo: f64, hi: f64) -> AggregativeGame {
        AggregativeGame::new(
            m,
            1,
            CostModel::Quadratic {
                q: DMatrix::from_element(1, 1, q),
                c: DMatrix::from_element(1, 1, c),
                offsets: vec![vec![offset]; m],
            },
            vec![ConstraintSet::Box { lo: vec![lo], hi: vec![hi] }; m],
            Coupling::none(m, 1),
        )
        .unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let p = StrategyProfile::new(vec![1.0, 3.0], 2, 1).unwrap();
        assert_eq!(aggregate(&p), vec![2.0]);
        let single = StrategyProfile::new(vec![0.3, -1.0, 7.0], 1, 3).unwrap();
        assert_eq!(single.aggregate(), vec![0.3, -1.0, 7.0]);
        let p = StrategyProfile::new(vec![1.0, 0.0, 0.0, 1.0, 2.0, 2.0], 3, 2).unwrap();
        assert_eq!(p.aggregate(), vec![1.0, 1.0]);
        assert!(matches!(StrategyProfile::new(vec![1.0; 5], 2, 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn cost_examples() {
        let g = scalar_quadratic(1, 1.0, 1.0, 0.0, 0.0, 3.0);
        assert_eq!(g.cost_value(0, &[1.0], &[2.0]).unwrap(), 2.5);
        assert_eq!(g.cost_value(0, &[0.0], &[5.0]).unwrap(), 0.0);
        let linear = CostModel::PriceTimesUsage {
            usage: Usage::Zero,
            price: Price::Affine {
                c: DMatrix::from_element(1, 1, 1.0),
                offset: vec![0.0],
            },
        };
        assert_eq!(linear.value(0, &[2.0], &[3.0]), 6.0);
        assert!(matches!(g.cost_value(1, &[1.0], &[1.0]), Err(Error::Index { index: 1, count: 1 })));
        assert!(matches!(g.cost_value(0, &[1.0, 2.0], &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn feasibility_examples() {
        let g = scalar_quadratic(2, 1.0, 0.0, 0.0, 0.0, 1.0);
        let r = g.feasibility_report(&g.profile(vec![0.5, 0.5]).unwrap(), 1e-6);
        assert!(r.feasible && r.individual.iter().all(|v| *v == 0.0));
        let r = g.feasibility_report(&g.profile(vec![1.1, 0.5]).unwrap(), 1e-6);
        assert!(!r.feasible && (r.individual[0] - 0.1).abs() < 1e-12);
        let capped = g
            .with_coupling(Coupling::PerComponentCap { cap: vec![0.5], m: 2 })
            .unwrap();
        let r = capped.feasibility_report(&capped.profile(vec![0.6, 0.6]).unwrap(), 1e-6);
        assert!(!r.feasible);
        assert!((r.coupling_residual[0] + 0.1).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        let set = ConstraintSet::Box { lo: vec![0.0], hi: vec![1.0] };
        let cost = CostModel::Quadratic {
            q: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::zeros(1, 1),
            offsets: vec![vec![0.0]; 2],
        };
        assert!(AggregativeGame::new(2, 1, cost.clone(), vec![set.clone()], Coupling::none(2, 1)).is_err());
        assert!(AggregativeGame::new(0, 1, cost.clone(), vec![], Coupling::none(0, 1)).is_err());
        let bad_cap = Coupling::PerComponentCap { cap: vec![0.5, 0.5], m: 2 };
        assert!(AggregativeGame::new(2, 1, cost, vec![set.clone(), set], bad_cap).is_err());
        assert!(matches!(ConstraintSet::boxed(vec![1.0], vec![0.0]), Err(Error::Invalid(_))));
        assert!(matches!(
            ConstraintSet::box_budget(vec![0.0; 2], vec![1.0; 2], 3.0),
            Err(Error::Infeasible(_))
        ));
        let asym = CostModel::Quadratic {
            q: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            c: DMatrix::zeros(2, 2),
            offsets: vec![vec![0.0; 2]],
        };
        let b2 = ConstraintSet::Box { lo: vec![0.0; 2], hi: vec![1.0; 2] };
        assert!(matches!(
            AggregativeGame::new(1, 2, asym, vec![b2], Coupling::none(1, 2)),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn flow_set_rejects_unbalanced_demand() {
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 1.0]);
        let sys = Arc::new(AffineSystem::new(b).unwrap());
        assert!(ConstraintSet::flow(sys.clone(), vec![-1.0, 0.0]).is_err());
        assert!(ConstraintSet::flow(sys, vec![-1.0, 1.0]).is_ok());
    }

    #[test]
    fn per_component_cap_matches_its_dense_form() {
        let cap = Coupling::PerComponentCap { cap: vec![0.4, 0.6], m: 3 };
        let dense = Coupling::Dense {
            a: cap.to_dense(3, 2),
            b: vec![0.4, 0.6],
        };
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(cap.residual(&x), dense.residual(&x));
        let lam = [1.0, 2.0];
        let (a, b) = (cap.apply_transpose(&lam, 3, 2), dense.apply_transpose(&lam, 3, 2));
        assert!(crate::linalg::dist_inf(&a, &b) < 1e-15);
        assert_eq!(cap.agent_transpose(1, &lam, 2), dense.agent_transpose(1, &lam, 2));
        assert!((cap.norm() - dense.norm()).abs() < 1e-12);
    }

    #[test]
    fn with_upper_cap_never_crosses_lower_bounds() {
        let s = ConstraintSet::Box { lo: vec![0.5, 0.0], hi: vec![2.0, 2.0] };
        match s.with_upper_cap(&[0.1, 1.0]) {
            ConstraintSet::Box { hi, .. } => assert_eq!(hi, vec![0.5, 1.0]),
            other => panic!("unexpected set {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn aggregate_is_the_componentwise_mean(m in 1usize..6, n in 1usize..4, seed in any::<u64>()) {
            let entries: Vec<f64> = (0..m * n).map(|k| ((seed.wrapping_mul(k as u64 + 1) % 1000) as f64) / 100.0).collect();
            let p = StrategyProfile::new(entries.clone(), m, n).unwrap();
            let s = p.aggregate();
            for t in 0..n {
                let mean = (0..m).map(|i| entries[i * n + t]).sum::<f64>() / m as f64;
                prop_assert!((s[t] - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
            }
        }

        #[test]
        fn quadratic_gradients_match_differences(x in -2.0..2.0f64, z in -2.0..2.0f64) {
            let g = scalar_quadratic(1, 0.7, 1.3, -0.4, -5.0, 5.0);
            let h = 1e-6;
            let fd_x = (g.cost_value(0, &[x + h], &[z]).unwrap() - g.cost_value(0, &[x - h], &[z]).unwrap()) / (2.0 * h);
            let fd_z = (g.cost_value(0, &[x], &[z + h]).unwrap() - g.cost_value(0, &[x], &[z - h]).unwrap()) / (2.0 * h);
            prop_assert!((g.grad_own(0, &[x], &[z]).unwrap()[0] - fd_x).abs() < 1e-6);
            prop_assert!((g.grad_agg(0, &[x], &[z]).unwrap()[0] - fd_z).abs() < 1e-6);
        }
    }
}
