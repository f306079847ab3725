//! Nash and Wardrop VI operators, the extended primal-dual operator, and
//! monotonicity / Lipschitz estimates.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::game::{aggregate_slice, AggregativeGame, CostModel, Price, Usage};
use crate::linalg::{dot, low_rank_sym_range, max_singular, norm2, sym_eig_range};

/// Largest stacked dimension for which dense Jacobians are formed.
pub const DENSE_JACOBIAN_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Nash,
    Wardrop,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Nash => "nash",
            Flavor::Wardrop => "wardrop",
        }
    }
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// F_N or F_W of a game.
#[derive(Debug, Clone, Copy)]
pub struct GameOperator<'a> {
    game: &'a AggregativeGame,
    flavor: Flavor,
}

pub fn build_operator(game: &AggregativeGame, flavor: Flavor) -> GameOperator<'_> {
    GameOperator { game, flavor }
}

impl<'a> GameOperator<'a> {
    pub fn new(game: &'a AggregativeGame, flavor: Flavor) -> Self {
        build_operator(game, flavor)
    }

    pub fn game(&self) -> &'a AggregativeGame {
        self.game
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = (self.game.m(), self.game.n());
        let sigma = aggregate_slice(x, m, n);
        let mut out = vec![0.0; m * n];
        self.evaluate_with(x, &sigma, &mut out);
        out
    }

    /// Evaluates into `out` given a precomputed aggregate.
    pub fn evaluate_with(&self, x: &[f64], sigma: &[f64], out: &mut [f64]) {
        let (m, n) = (self.game.m(), self.game.n());
        let inv_m = 1.0 / m as f64;
        let nash = self.flavor == Flavor::Nash;
        match self.game.cost() {
            CostModel::Quadratic { q, c, offsets } => {
                let cz = crate::linalg::mat_vec(c, sigma);
                let own = if nash { q + c.transpose() * inv_m } else { q.clone() };
                let xs = nalgebra::DMatrixView::from_slice(x, n, m);
                let prod = own * xs;
                for i in 0..m {
                    let o = &mut out[i * n..(i + 1) * n];
                    for t in 0..n {
                        o[t] = prod[(t, i)] + cz[t] + offsets[i][t];
                    }
                }
            }
            CostModel::PriceTimesUsage { usage, price } => {
                let p = price.value(sigma);
                let slopes = match price {
                    Price::Separable(ps) if nash => Some(
                        (0..n).map(|t| ps.slope(t, sigma[t])).collect::<Vec<_>>(),
                    ),
                    _ => None,
                };
                for i in 0..m {
                    let xi = &x[i * n..(i + 1) * n];
                    let o = &mut out[i * n..(i + 1) * n];
                    o.copy_from_slice(&p);
                    if let Usage::Proximal { gamma, target } = usage {
                        for t in 0..n {
                            o[t] += gamma[i] * (xi[t] - target[i][t]);
                        }
                    }
                    if nash {
                        match (&slopes, price) {
                            (Some(s), _) => {
                                for t in 0..n {
                                    o[t] += inv_m * s[t] * xi[t];
                                }
                            }
                            (None, Price::Affine { c, .. }) => {
                                for t in 0..n {
                                    o[t] += inv_m * (0..n).map(|s| c[(s, t)] * xi[s]).sum::<f64>();
                                }
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }

    /// True when F is affine in x.
    pub fn is_affine(&self) -> bool {
        match self.game.cost() {
            CostModel::Quadratic { .. } => true,
            CostModel::PriceTimesUsage { price, .. } => matches!(price, Price::Affine { .. }),
        }
    }

    /// Analytic Jacobian, dense (M n) x (M n).
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (m, n) = (self.game.m(), self.game.n());
        let d = m * n;
        if d > DENSE_JACOBIAN_LIMIT {
            return Err(Error::Invalid(format!("dense Jacobian of size {d} is too large")));
        }
        let inv_m = 1.0 / m as f64;
        let nash = self.flavor == Flavor::Nash;
        let sigma = aggregate_slice(x, m, n);
        let mut jac = DMatrix::zeros(d, d);
        let (own, shared): (Vec<DMatrix<f64>>, DMatrix<f64>) = match self.game.cost() {
            CostModel::Quadratic { q, c, .. } => {
                let own_i = if nash { q + c.transpose() * inv_m } else { q.clone() };
                (vec![own_i; m], c.clone())
            }
            CostModel::PriceTimesUsage { usage, price } => {
                let dp = price.jacobian(&sigma);
                let own = (0..m)
                    .map(|i| {
                        let mut h = DMatrix::identity(n, n) * usage.curvature(i);
                        if nash {
                            h += dp.transpose() * inv_m;
                        }
                        h
                    })
                    .collect();
                (own, dp)
            }
        };
        for i in 0..m {
            for j in 0..m {
                let mut blk = &shared * inv_m;
                if i == j {
                    blk += &own[i];
                }
                // derivative of Dp(sigma)^T x_i through sigma
                if nash {
                    if let CostModel::PriceTimesUsage {
                        price: Price::Separable(ps),
                        ..
                    } = self.game.cost()
                    {
                        for t in 0..n {
                            blk[(t, t)] += inv_m * inv_m * ps.curvature(t, sigma[t]) * x[i * n + t];
                        }
                    }
                }
                jac.view_mut((i * n, j * n), (n, n)).copy_from(&blk);
            }
        }
        Ok(jac)
    }

    /// Central finite-difference Jacobian with step 1e-6 (1 + |x|inf).
    pub fn fd_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let h = 1e-6 * (1.0 + crate::linalg::norm_inf(x));
        let mut jac = DMatrix::zeros(d, d);
        let mut xp = x.to_vec();
        for j in 0..d {
            xp[j] = x[j] + h;
            let fp = self.evaluate(&xp);
            xp[j] = x[j] - h;
            let fm = self.evaluate(&xp);
            xp[j] = x[j];
            for i in 0..d {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }
}

/// T(x, lambda) = [F(x) + A^T lambda; b - A x] on X x R^m_{>=0}.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedOperator<'a> {
    base: GameOperator<'a>,
}

impl<'a> ExtendedOperator<'a> {
    pub fn new(base: GameOperator<'a>) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &GameOperator<'a> {
        &self.base
    }

    pub fn evaluate(&self, x: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = self.base.game();
        let mut f = self.base.evaluate(x);
        let at = g.coupling().apply_transpose(lambda, g.m(), g.n());
        f.iter_mut().zip(&at).for_each(|(a, b)| *a += b);
        (f, g.coupling().residual(x))
    }

    /// Lipschitz constant of T: exact for small affine operators, otherwise
    /// the bound L_F + |A|.
    pub fn lipschitz(&self, l_f: f64) -> Result<f64> {
        let g = self.base.game();
        let a_norm = g.coupling().norm();
        let d = g.dim();
        let rows = g.coupling().rows();
        if self.base.is_affine() && d + rows <= 600 {
            let x = vec![0.0; d];
            let jf = self.base.jacobian(&x)?;
            let a = g.coupling().to_dense(g.m(), g.n());
            let mut jt = DMatrix::zeros(d + rows, d + rows);
            jt.view_mut((0, 0), (d, d)).copy_from(&jf);
            jt.view_mut((0, d), (d, rows)).copy_from(&a.transpose());
            jt.view_mut((d, 0), (rows, d)).copy_from(&(-a));
            return Ok(max_singular(&jt));
        }
        Ok(l_f + a_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub alpha: f64,
    pub lipschitz: f64,
    pub exact: bool,
    pub samples: usize,
}

/// Strong monotonicity and Lipschitz constants of an operator. Exact when
/// the Jacobian is constant with a Kronecker structure, sampled otherwise.
pub fn monotonicity_analysis(
    op: &GameOperator<'_>,
    sampler: &mut dyn FnMut() -> Vec<f64>,
    n_samples: usize,
) -> Result<MonotonicityReport> {
    let g = op.game();
    let (m, n) = (g.m(), g.n());
    let inv_m = 1.0 / m as f64;
    let nash = op.flavor() == Flavor::Nash;
    if let Some((own, shared)) = kronecker_blocks(op) {
        let (mut alpha, _) = sym_eig_range(&(&own + &shared));
        let mut lip = max_singular(&(&own + &shared));
        if m >= 2 {
            alpha = alpha.min(sym_eig_range(&own).0);
            lip = lip.max(max_singular(&own));
        }
        return Ok(MonotonicityReport {
            alpha,
            lipschitz: lip,
            exact: true,
            samples: 0,
        });
    }
    let samples = n_samples.max(1);
    let mut alpha = f64::INFINITY;
    let mut lip: f64 = 0.0;
    if let CostModel::PriceTimesUsage {
        usage,
        price: Price::Separable(ps),
    } = g.cost()
    {
        let w: Vec<f64> = (0..m).map(|i| usage.curvature(i)).collect();
        let uniform = w.iter().all(|v| (v - w[0]).abs() <= 1e-15 * (1.0 + w[0].abs()));
        let ones = vec![1.0; m];
        for _ in 0..samples {
            let x = sampler();
            let sigma = aggregate_slice(&x, m, n);
            for t in 0..n {
                let a = ps.slope(t, sigma[t]) * inv_m;
                let (shift, b) = if nash {
                    (a, ps.curvature(t, sigma[t]) * inv_m * inv_m)
                } else {
                    (0.0, 0.0)
                };
                let xt: Vec<f64> = (0..m).map(|i| x[i * n + t]).collect();
                let (lo, hi_sv) = if uniform {
                    let wd = w[0] + shift;
                    let sym = |v: &[f64]| -> Vec<f64> {
                        let s1: f64 = v.iter().sum();
                        let sx = dot(&xt, v);
                        (0..m)
                            .map(|i| a * s1 + 0.5 * b * (xt[i] * s1 + sx))
                            .collect()
                    };
                    let (lo, _) = low_rank_sym_range(0.0, m, &[ones.clone(), xt.clone()], &sym);
                    let u: Vec<f64> = xt.iter().map(|v| a + b * v).collect();
                    let uu = dot(&u, &u);
                    let gram = |v: &[f64]| -> Vec<f64> {
                        let s1: f64 = v.iter().sum();
                        let su = dot(&u, v);
                        (0..m)
                            .map(|i| wd * (su + u[i] * s1) + uu * s1)
                            .collect()
                    };
                    let (_, top) = low_rank_sym_range(wd * wd, m, &[ones.clone(), u.clone()], &gram);
                    (lo + wd, top.max(0.0).sqrt())
                } else {
                    let blk = DMatrix::from_fn(m, m, |i, j| {
                        let mut v = a + b * xt[i];
                        if i == j {
                            v += w[i] + shift;
                        }
                        v
                    });
                    (sym_eig_range(&blk).0, max_singular(&blk))
                };
                alpha = alpha.min(lo);
                lip = lip.max(hi_sv);
            }
        }
        return Ok(MonotonicityReport {
            alpha,
            lipschitz: lip,
            exact: false,
            samples,
        });
    }
    for _ in 0..samples {
        let x = sampler();
        let jac = op.jacobian(&x)?;
        let (lo, _) = sym_eig_range(&jac);
        alpha = alpha.min(lo);
        lip = lip.max(max_singular(&jac));
    }
    Ok(MonotonicityReport {
        alpha,
        lipschitz: lip,
        exact: op.is_affine(),
        samples,
    })
}

/// (own, shared) with Jacobian = I (x) own + (1/M) 11^T (x) shared, when the
/// Jacobian is constant and identical across agents.
fn kronecker_blocks(op: &GameOperator<'_>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let g = op.game();
    let (m, n) = (g.m(), g.n());
    let inv_m = 1.0 / m as f64;
    let nash = op.flavor() == Flavor::Nash;
    let (base, c) = match g.cost() {
        CostModel::Quadratic { q, c, .. } => (q.clone(), c.clone()),
        CostModel::PriceTimesUsage {
            usage,
            price: Price::Affine { c, .. },
        } => {
            let w0 = usage.curvature(0);
            if (0..m).any(|i| usage.curvature(i) != w0) {
                return None;
            }
            (DMatrix::identity(n, n) * w0, c.clone())
        }
        _ => return None,
    };
    let own = if nash { base + c.transpose() * inv_m } else { base };
    Some((own, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub bound: f64,
}

/// |F_N(x) - F_W(x)| and the bound L2 / sqrt(M).
pub fn operator_gap(game: &AggregativeGame, x: &[f64], l2: Option<f64>) -> Result<GapReport> {
    let l2 = match l2 {
        Some(v) => v,
        None => crate::analysis::estimate_constants(game)?.l2,
    };
    let fnash = build_operator(game, Flavor::Nash).evaluate(x);
    let fw = build_operator(game, Flavor::Wardrop).evaluate(x);
    let gap = norm2(&crate::linalg::sub(&fnash, &fw));
    Ok(GapReport {
        gap,
        bound: l2 / (game.m() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionCondition {
    /// Q positive definite and C symmetric positive definite.
    SymmetricPositiveC,
    /// Q positive definite and Q - C^T Q^{-1} C positive definite.
    SchurComplement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContractionReport {
    pub holds: bool,
    pub condition: Option<ContractionCondition>,
}

/// Sufficient conditions for convergence of the two-level scheme on quadratic games.
pub fn quadratic_contraction_check(q: &DMatrix<f64>, c: &DMatrix<f64>) -> ContractionReport {
    const TOL: f64 = 1e-10;
    let none = ContractionReport {
        holds: false,
        condition: None,
    };
    let qs = crate::linalg::sym_part(q);
    let q_min = SymmetricEigen::new(qs.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if q_min <= TOL {
        return none;
    }
    let sym_c = (c - c.transpose()).amax() <= TOL;
    if sym_c && sym_eig_range(c).0 > TOL {
        return ContractionReport {
            holds: true,
            condition: Some(ContractionCondition::SymmetricPositiveC),
        };
    }
    if let Some(qinv) = qs.try_inverse() {
        let schur = q - c.transpose() * qinv * c;
        if sym_eig_range(&schur).0 > TOL {
            return ContractionReport {
                holds: true,
                condition: Some(ContractionCondition::SchurComplement),
            };
        }
    }
    none
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::ev::{build_ev_game, EvParams};
    use crate::game::{ConstraintSet, Coupling};
    use proptest::prelude::*;

    fn quadratic(m: usize, n: usize, q: f64, c: f64) -> AggregativeGame {
        AggregativeGame::new(
            m,
            n,
            CostModel::Quadratic {
                q: DMatrix::identity(n, n) * q,
                c: DMatrix::identity(n, n) * c,
                offsets: vec![vec![0.0; n]; m],
            },
            vec![ConstraintSet::Box { lo: vec![0.0; n], hi: vec![1.0; n] }; m],
            Coupling::none(m, n),
        )
        .unwrap()
    }

    fn linear_price(m: usize) -> AggregativeGame {
        AggregativeGame::new(
            m,
            1,
            CostModel::PriceTimesUsage {
                usage: Usage::Zero,
                price: Price::Affine { c: DMatrix::from_element(1, 1, 1.0), offset: vec![0.0] },
            },
            vec![ConstraintSet::Box { lo: vec![0.0], hi: vec![5.0] }; m],
            Coupling::none(m, 1),
        )
        .unwrap()
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / (1.0 + b.amax())
    }

    #[test]
    fn evaluation_examples() {
        let g = quadratic(2, 1, 1.0, 1.0);
        assert_eq!(build_operator(&g, Flavor::Wardrop).evaluate(&[1.0, 0.0]), vec![1.5, 0.5]);
        assert_eq!(build_operator(&g, Flavor::Nash).evaluate(&[1.0, 0.0]), vec![2.0, 0.5]);
        let g = linear_price(1);
        assert_eq!(build_operator(&g, Flavor::Wardrop).evaluate(&[2.0]), vec![2.0]);
        assert_eq!(build_operator(&g, Flavor::Nash).evaluate(&[2.0]), vec![4.0]);
        let g = quadratic(3, 2, 0.5, 0.0);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let w = build_operator(&g, Flavor::Wardrop).evaluate(&x);
        assert_eq!(w, build_operator(&g, Flavor::Nash).evaluate(&x));
        assert!(w.iter().zip(&x).all(|(f, v)| (f - 0.5 * v).abs() < 1e-15));
    }

    #[test]
    fn gap_examples() {
        let g = quadratic(2, 1, 1.0, 1.0);
        let r = operator_gap(&g, &[1.0, 0.0], Some(1.0)).unwrap();
        assert!((r.gap - 0.5).abs() < 1e-15);
        let g0 = quadratic(3, 2, 1.0, 0.0);
        assert_eq!(operator_gap(&g0, &[0.2; 6], Some(1.0)).unwrap().gap, 0.0);
    }

    #[test]
    fn gap_halves_when_the_population_quadruples() {
        let x1 = [0.9, 0.1, 0.4, 0.7];
        let x4: Vec<f64> = (0..4).flat_map(|_| x1).collect();
        let small = operator_gap(&quadratic(2, 2, 0.1, 1.0), &x1, Some(1.0)).unwrap().gap;
        let large = operator_gap(&quadratic(8, 2, 0.1, 1.0), &x4, Some(1.0)).unwrap().gap;
        assert!((small / large - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_constants_of_affine_operators() {
        let g = quadratic(3, 2, 1.0, 0.0);
        let mut none = || -> Vec<f64> { unreachable!() };
        let r = monotonicity_analysis(&build_operator(&g, Flavor::Nash), &mut none, 5).unwrap();
        assert!(r.exact && (r.alpha - 1.0).abs() < 1e-12 && (r.lipschitz - 1.0).abs() < 1e-12);
        let g = quadratic(2, 1, 0.1, 1.0);
        let r = monotonicity_analysis(&build_operator(&g, Flavor::Nash), &mut none, 5).unwrap();
        assert!(r.exact && (r.alpha - 0.6).abs() < 1e-12);
        let jac = build_operator(&g, Flavor::Nash).jacobian(&[0.0, 0.0]).unwrap();
        let sym = crate::linalg::sym_part(&jac);
        let (lo, hi) = sym_eig_range(&sym);
        assert!((lo - 0.6).abs() < 1e-12 && (hi - 1.6).abs() < 1e-12);
    }

    #[test]
    fn kronecker_constants_agree_with_dense_eigenvalues() {
        let n = 3;
        let c = DMatrix::from_row_slice(n, n, &[1.0, 0.3, 0.0, -0.2, 0.8, 0.1, 0.0, 0.4, 1.2]);
        let g = AggregativeGame::new(
            4,
            n,
            CostModel::Quadratic { q: DMatrix::identity(n, n) * 0.2, c, offsets: vec![vec![0.0; n]; 4] },
            vec![ConstraintSet::Box { lo: vec![0.0; n], hi: vec![1.0; n] }; 4],
            Coupling::none(4, n),
        )
        .unwrap();
        let mut none = || -> Vec<f64> { unreachable!() };
        for flavor in [Flavor::Nash, Flavor::Wardrop] {
            let op = build_operator(&g, flavor);
            let r = monotonicity_analysis(&op, &mut none, 1).unwrap();
            let jac = op.jacobian(&[0.0; 12]).unwrap();
            assert!((r.alpha - sym_eig_range(&jac).0).abs() < 1e-10, "{flavor}");
            assert!((r.lipschitz - max_singular(&jac)).abs() < 1e-10, "{flavor}");
        }
    }

    #[test]
    fn contraction_condition_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        let r = quadratic_contraction_check(&(&i * 0.1), &i);
        assert_eq!(r.condition, Some(ContractionCondition::SymmetricPositiveC));
        let r = quadratic_contraction_check(&i, &DMatrix::zeros(3, 3));
        assert_eq!(r.condition, Some(ContractionCondition::SchurComplement));
        let mut c = &i * 10.0;
        c[(0, 1)] = 1.0;
        assert!(!quadratic_contraction_check(&(&i * 0.1), &c).holds);
    }

    #[test]
    fn extended_operator_layout() {
        let g = quadratic(2, 1, 1.0, 1.0)
            .with_coupling(Coupling::PerComponentCap { cap: vec![0.5], m: 2 })
            .unwrap();
        let t = ExtendedOperator::new(build_operator(&g, Flavor::Wardrop));
        let (f, r) = t.evaluate(&[1.0, 0.0], &[2.0]);
        assert_eq!(f, vec![2.5, 1.5]);
        assert_eq!(r, vec![0.0]);
        // ‖T‖ dominates both blocks
        let l = t.lipschitz(0.0).unwrap();
        assert!(l >= max_singular(&build_operator(&g, Flavor::Wardrop).jacobian(&[0.0; 2]).unwrap()));
        assert!(l >= g.coupling().norm());
    }

    fn ev_game(m: usize, seed: u64) -> AggregativeGame {
        build_ev_game(&EvParams::standard(m, seed).unwrap()).unwrap()
    }

    fn feasible_point(g: &AggregativeGame, u: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = g
            .individual()
            .iter()
            .flat_map(|s| {
                let (lo, hi) = s.bounding_box().unwrap();
                lo.into_iter().zip(hi).collect::<Vec<_>>()
            })
            .zip(u.iter().cycle())
            .map(|((l, h), v)| l + (h - l) * v)
            .collect();
        g.project_profile(&y).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ev_jacobians_match_finite_differences(seed in 0u64..1000, u in prop::collection::vec(0.0..1.0f64, 7)) {
            let g = ev_game(3, seed);
            let x = feasible_point(&g, &u);
            for flavor in [Flavor::Nash, Flavor::Wardrop] {
                let op = build_operator(&g, flavor);
                prop_assert!(rel_err(&op.jacobian(&x).unwrap(), &op.fd_jacobian(&x)) < 1e-4);
            }
        }

        #[test]
        fn quadratic_jacobians_match_finite_differences(q in 0.05..2.0f64, c in -1.0..2.0f64, u in prop::collection::vec(0.0..1.0f64, 6)) {
            let g = quadratic(3, 2, q, c);
            for flavor in [Flavor::Nash, Flavor::Wardrop] {
                let op = build_operator(&g, flavor);
                prop_assert!(rel_err(&op.jacobian(&u).unwrap(), &op.fd_jacobian(&u)) < 1e-4);
            }
        }

        #[test]
        fn sampled_ev_constants_bound_pairwise_behavior(seed in 0u64..1000, u in prop::collection::vec(0.0..1.0f64, 11), v in prop::collection::vec(0.0..1.0f64, 13)) {
            let g = ev_game(4, seed);
            let (x, y) = (feasible_point(&g, &u), feasible_point(&g, &v));
            for flavor in [Flavor::Nash, Flavor::Wardrop] {
                let op = build_operator(&g, flavor);
                // points on the segment, so the mean-value theorem applies
                let mut k = 0usize;
                let mut sampler = || {
                    let s = k as f64 / 20.0;
                    k += 1;
                    y.iter().zip(&x).map(|(a, b)| a + s * (b - a)).collect()
                };
                let r = monotonicity_analysis(&op, &mut sampler, 21).unwrap();
                let d = crate::linalg::sub(&x, &y);
                let df = crate::linalg::sub(&op.evaluate(&x), &op.evaluate(&y));
                let dd = dot(&d, &d);
                prop_assert!(dot(&df, &d) >= (r.alpha - 1e-7) * dd);
                prop_assert!(norm2(&df) <= 1.01 * r.lipschitz * dd.sqrt() + 1e-12);
            }
        }

        #[test]
        fn operator_gap_respects_the_l2_bound(seed in 0u64..1000, u in prop::collection::vec(0.0..1.0f64, 9)) {
            let g = ev_game(5, seed);
            let x = feasible_point(&g, &u);
            let r = operator_gap(&g, &x, None).unwrap();
            prop_assert!(r.gap <= r.bound + 1e-9);
        }
    }
}
