//! Euclidean projections onto the constraint geometries used by the solvers.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::game::{ConstraintSet, Halfspace};
use crate::linalg::{dist_inf, dot, mat_vec, norm_inf};

pub const DYKSTRA_TOL: f64 = 1e-10;
pub const DYKSTRA_MAX_ITER: usize = 10_000;

/// Linear system B x = r with a cached pseudoinverse, shared between agents
/// that differ only in the right-hand side.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    b: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl AffineSystem {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::Dimension("affine system needs a nonempty matrix".into()));
        }
        let smax = crate::linalg::max_singular(&b);
        let eps = 1e-12 * smax.max(1.0) * b.nrows().max(b.ncols()) as f64;
        let pinv = b
            .clone()
            .pseudo_inverse(eps)
            .map_err(|e| Error::Invalid(format!("pseudoinverse failed: {e}")))?;
        Ok(Self { b, pinv })
    }

    pub fn rows(&self) -> usize {
        self.b.nrows()
    }

    pub fn cols(&self) -> usize {
        self.b.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// B x - r.
    pub fn residual(&self, x: &[f64], r: &[f64]) -> Vec<f64> {
        let mut bx = mat_vec(&self.b, x);
        bx.iter_mut().zip(r).for_each(|(a, b)| *a -= b);
        bx
    }

    pub fn check_consistent(&self, r: &[f64]) -> Result<()> {
        let x = mat_vec(&self.pinv, r);
        let res = norm_inf(&self.residual(&x, r));
        if res > 1e-9 * (1.0 + norm_inf(r)) {
            return Err(Error::Infeasible(format!(
                "linear system B x = b is inconsistent (residual {res:e})"
            )));
        }
        Ok(())
    }

    pub fn project(&self, y: &[f64], r: &[f64]) -> Vec<f64> {
        let res = self.residual(y, r);
        let corr = mat_vec(&self.pinv, &res);
        y.iter().zip(&corr).map(|(a, c)| a - c).collect()
    }
}

/// Target sets accepted by `dykstra`.
#[derive(Debug, Clone)]
pub enum ProjectorSpec {
    Individual(ConstraintSet),
    NonnegativeOrthant,
    AffineSubspace { system: Arc<AffineSystem>, rhs: Vec<f64> },
    Halfspace(Halfspace),
}

impl ProjectorSpec {
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            ProjectorSpec::Individual(s) => project_individual(s, y),
            ProjectorSpec::NonnegativeOrthant => Ok(project_nonneg(y)),
            ProjectorSpec::AffineSubspace { system, rhs } => Ok(system.project(y, rhs)),
            ProjectorSpec::Halfspace(h) => Ok(project_halfspace(y, h)),
        }
    }
}

pub fn project_box(y: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    if y.len() != lo.len() || lo.len() != hi.len() {
        return Err(Error::Dimension("box projection sizes disagree".into()));
    }
    if let Some(t) = (0..lo.len()).find(|&t| !(lo[t] <= hi[t])) {
        return Err(Error::Invalid(format!("lo > hi at component {t}")));
    }
    Ok(clamp(y, lo, hi))
}

fn clamp(y: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.max(*l).min(*h))
        .collect()
}

pub fn project_nonneg(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| v.max(0.0)).collect()
}

pub fn project_halfspace(y: &[f64], h: &Halfspace) -> Vec<f64> {
    let viol = dot(&h.a, y) - h.beta;
    let nn = dot(&h.a, &h.a);
    if viol <= 0.0 || nn == 0.0 {
        return y.to_vec();
    }
    let s = viol / nn;
    y.iter().zip(&h.a).map(|(v, a)| v - s * a).collect()
}

/// Projection onto {x : B x = b_od}.
pub fn project_affine(y: &[f64], b: &DMatrix<f64>, b_od: &[f64]) -> Result<Vec<f64>> {
    if b.ncols() != y.len() || b.nrows() != b_od.len() {
        return Err(Error::Dimension("affine projection sizes disagree".into()));
    }
    let sys = AffineSystem::new(b.clone())?;
    sys.check_consistent(b_od)?;
    Ok(sys.project(y, b_od))
}

/// Projection onto {x in [lo, hi] : sum x >= theta}: the multiplier mu of
/// the budget is found by walking the kinks of sum_t clip(y_t + mu).
pub fn project_box_budget(y: &[f64], lo: &[f64], hi: &[f64], theta: f64) -> Result<Vec<f64>> {
    let x0 = project_box(y, lo, hi)?;
    let cap: f64 = hi.iter().sum();
    if theta > cap + 1e-12 {
        return Err(Error::Infeasible(format!("budget {theta} exceeds {cap}")));
    }
    if x0.iter().sum::<f64>() >= theta {
        return Ok(x0);
    }
    // sum_t clip(y_t + mu) is piecewise linear in mu; walk its kinks
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * y.len());
    let mut slope = 0.0;
    for t in 0..y.len() {
        let (kl, kh) = (lo[t] - y[t], hi[t] - y[t]);
        if lo[t] == hi[t] {
            continue;
        }
        if kl > 0.0 {
            events.push((kl, 1.0));
        } else if kh > 0.0 {
            slope += 1.0;
        }
        if kh > 0.0 {
            events.push((kh, -1.0));
        }
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let (mut a, mut fa) = (0.0, x0.iter().sum::<f64>());
    let mut mu = f64::NAN;
    for &(k, ds) in &events {
        let fk = fa + slope * (k - a);
        if fk >= theta && slope > 0.0 {
            mu = a + (theta - fa) / slope;
            break;
        }
        a = k;
        fa = fk;
        slope += ds;
    }
    if mu.is_nan() {
        mu = a;
    }
    Ok((0..y.len())
        .map(|t| (y[t] + mu).max(lo[t]).min(hi[t]))
        .collect())
}

/// Dykstra's alternating projections onto the intersection of `projectors`.
pub fn dykstra(y: &[f64], projectors: &[ProjectorSpec], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if projectors.is_empty() {
        return Ok(y.to_vec());
    }
    if projectors.len() == 1 {
        return projectors[0].project(y);
    }
    let mut x = y.to_vec();
    let mut inc = vec![vec![0.0; y.len()]; projectors.len()];
    let mut gap = f64::INFINITY;
    for _ in 0..max_iter {
        let prev = x.clone();
        // the last output can stall while earlier increments still move
        let mut moved = 0.0_f64;
        for (p, q) in projectors.iter().zip(inc.iter_mut()) {
            let tmp: Vec<f64> = x.iter().zip(q.iter()).map(|(a, b)| a + b).collect();
            let nx = p.project(&tmp)?;
            for k in 0..tmp.len() {
                let nq = tmp[k] - nx[k];
                moved = moved.max((nq - q[k]).abs());
                q[k] = nq;
            }
            x = nx;
        }
        gap = dist_inf(&x, &prev).max(moved);
        if gap <= tol {
            return Ok(x);
        }
    }
    Err(Error::Dykstra {
        last: x,
        gap,
        iterations: max_iter,
    })
}

pub fn project_individual(set: &ConstraintSet, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != set.dim() {
        return Err(Error::Dimension(format!(
            "point of length {} for a set of dimension {}",
            y.len(),
            set.dim()
        )));
    }
    match set {
        ConstraintSet::Box { lo, hi } => project_box(y, lo, hi),
        ConstraintSet::BoxBudget { lo, hi, theta } => project_box_budget(y, lo, hi, *theta),
        ConstraintSet::FlowPolytope {
            system,
            b_od,
            lo,
            hi,
        } => dykstra(
            y,
            &[
                ProjectorSpec::AffineSubspace {
                    system: system.clone(),
                    rhs: b_od.clone(),
                },
                ProjectorSpec::Individual(ConstraintSet::Box {
                    lo: lo.clone(),
                    hi: hi.clone(),
                }),
            ],
            DYKSTRA_TOL,
            DYKSTRA_MAX_ITER,
        ),
        ConstraintSet::HalfspaceIntersection { halfspaces, bounds } => {
            let mut ps: Vec<ProjectorSpec> = halfspaces
                .iter()
                .cloned()
                .map(ProjectorSpec::Halfspace)
                .collect();
            if let Some((lo, hi)) = bounds {
                ps.push(ProjectorSpec::Individual(ConstraintSet::Box {
                    lo: lo.clone(),
                    hi: hi.clone(),
                }));
            }
            dykstra(y, &ps, DYKSTRA_TOL, DYKSTRA_MAX_ITER)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && dist_inf(a, b) <= tol
    }

    #[test]
    fn box_examples() {
        assert_eq!(project_box(&[1.5, -0.2], &[0.0; 2], &[1.0; 2]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_box(&[0.3], &[0.0], &[1.0]).unwrap(), vec![0.3]);
        assert!(matches!(project_box(&[0.3], &[1.0], &[0.0]), Err(Error::Invalid(_))));
        assert!(matches!(project_box(&[0.3, 1.0], &[0.0], &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn nonneg_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(project_nonneg(&[-0.5]), vec![0.0]);
    }

    #[test]
    fn affine_examples() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(close(&project_affine(&[1.0, 1.0], &b, &[1.0]).unwrap(), &[0.5, 0.5], 1e-12));
        assert!(close(&project_affine(&[0.3, 0.7], &b, &[1.0]).unwrap(), &[0.3, 0.7], 1e-12));
        let d = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(close(&project_affine(&[2.0, 0.0], &d, &[0.0]).unwrap(), &[1.0, 1.0], 1e-12));
    }

    #[test]
    fn inconsistent_affine_system_is_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            project_affine(&[0.0, 0.0], &b, &[1.0, 2.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn box_budget_examples() {
        let (lo, hi) = ([0.0; 2], [1.0; 2]);
        assert!(close(&project_box_budget(&[0.2, 0.2], &lo, &hi, 1.0).unwrap(), &[0.5, 0.5], 1e-12));
        assert!(close(&project_box_budget(&[0.8, 0.8], &lo, &hi, 1.0).unwrap(), &[0.8, 0.8], 1e-12));
        assert!(close(&project_box_budget(&[0.0, 1.5], &lo, &hi, 1.2).unwrap(), &[0.2, 1.0], 1e-12));
        assert!(matches!(
            project_box_budget(&[0.0, 0.0], &lo, &hi, 2.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn box_budget_with_fixed_components() {
        let x = project_box_budget(&[0.0, 0.0, 0.0], &[0.0, 0.5, 0.0], &[1.0, 0.5, 0.0], 1.0).unwrap();
        assert!(close(&x, &[0.5, 0.5, 0.0], 1e-12));
        let full = project_box_budget(&[0.0, 0.0], &[0.0; 2], &[1.0, 2.0], 3.0).unwrap();
        assert!(close(&full, &[1.0, 2.0], 1e-12));
    }

    #[test]
    fn dykstra_examples() {
        let sys = Arc::new(AffineSystem::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap());
        let ps = [
            ProjectorSpec::Individual(ConstraintSet::Box { lo: vec![0.0; 2], hi: vec![1.0; 2] }),
            ProjectorSpec::AffineSubspace { system: sys, rhs: vec![1.0] },
        ];
        let p = |y: &[f64]| dykstra(y, &ps, DYKSTRA_TOL, DYKSTRA_MAX_ITER).unwrap();
        assert!(close(&p(&[1.0, 1.0]), &[0.5, 0.5], 1e-9));
        assert!(close(&p(&[0.25, 0.75]), &[0.25, 0.75], 1e-12));
        // grid over the segment x2 = 1 - x1
        let y = [2.0, -1.0];
        let best = (0..=10_000)
            .map(|k| k as f64 * 1e-4)
            .min_by(|a, b| {
                let da = (a - y[0]).powi(2) + (1.0 - a - y[1]).powi(2);
                let db = (b - y[0]).powi(2) + (1.0 - b - y[1]).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        assert!(close(&p(&y), &[best, 1.0 - best], 1e-4));
    }

    #[test]
    fn dykstra_reports_last_iterate_on_budget_exhaustion() {
        let ps = [
            ProjectorSpec::Individual(ConstraintSet::Box { lo: vec![0.9, 0.0], hi: vec![1.8, 0.0] }),
            ProjectorSpec::Halfspace(Halfspace { a: vec![-1.0, -1.0], beta: -1.5 }),
        ];
        match dykstra(&[0.0, 0.0], &ps, 1e-12, 3) {
            Err(Error::Dykstra { last, iterations, gap }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 2);
                assert!(gap > 1e-12);
            }
            other => panic!("expected a dykstra error, got {other:?}"),
        }
    }

    #[test]
    fn dykstra_does_not_stop_on_a_stalled_last_projection() {
        // the halfspace output repeats for several sweeps while the box increment moves
        let ps = [
            ProjectorSpec::Individual(ConstraintSet::Box { lo: vec![0.9, 0.0], hi: vec![1.8, 0.0] }),
            ProjectorSpec::Halfspace(Halfspace { a: vec![-1.0, -1.0], beta: -1.5 }),
        ];
        let x = dykstra(&[0.0, 0.0], &ps, 1e-12, DYKSTRA_MAX_ITER).unwrap();
        assert!(close(&x, &[1.5, 0.0], 1e-9));
    }

    #[test]
    fn flow_polytope_on_parallel_edges() {
        let sys = Arc::new(AffineSystem::new(DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 1.0])).unwrap());
        let set = ConstraintSet::flow(sys, vec![-1.0, 1.0]).unwrap();
        assert!(close(&set.project(&[0.8, 0.8]).unwrap(), &[0.5, 0.5], 1e-8));
        let x = set.project(&[3.0, -1.0]).unwrap();
        assert!(set.violation(&x) <= 1e-8);
    }

    fn box_budget_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(-3.0..3.0f64, n),
                prop::collection::vec(0.0..1.0f64, n),
                prop::collection::vec(0.0..2.0f64, n),
                0.0..1.0f64,
            )
                .prop_map(|(y, lo, w, frac)| {
                    let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
                    let slo: f64 = lo.iter().sum();
                    let shi: f64 = hi.iter().sum();
                    (y, lo, hi, slo + frac * (shi - slo))
                })
        })
    }

    proptest! {
        #[test]
        fn box_budget_is_a_projection((y, lo, hi, theta) in box_budget_case(), z0 in prop::collection::vec(-3.0..3.0f64, 8)) {
            let p = project_box_budget(&y, &lo, &hi, theta).unwrap();
            let set = ConstraintSet::BoxBudget { lo: lo.clone(), hi: hi.clone(), theta };
            prop_assert!(set.violation(&p) <= 1e-9);
            let pp = project_box_budget(&p, &lo, &hi, theta).unwrap();
            prop_assert!(dist_inf(&p, &pp) <= 1e-9);
            let z = project_box_budget(&z0[..y.len()], &lo, &hi, theta).unwrap();
            let inner: f64 = (0..y.len()).map(|t| (y[t] - p[t]) * (z[t] - p[t])).sum();
            prop_assert!(inner <= 1e-9);
        }

        #[test]
        fn box_budget_matches_dykstra((y, lo, hi, theta) in box_budget_case()) {
            let p = project_box_budget(&y, &lo, &hi, theta).unwrap();
            let ps = [
                ProjectorSpec::Individual(ConstraintSet::Box { lo: lo.clone(), hi: hi.clone() }),
                ProjectorSpec::Halfspace(Halfspace { a: vec![-1.0; y.len()], beta: -theta }),
            ];
            let d = dykstra(&y, &ps, 1e-13, 200_000).unwrap();
            prop_assert!(dist_inf(&p, &d) <= 1e-6);
        }

        #[test]
        fn box_projection_is_nonexpansive(
            a in prop::collection::vec(-5.0..5.0f64, 4),
            b in prop::collection::vec(-5.0..5.0f64, 4),
        ) {
            let lo = [-1.0, 0.0, 0.5, -2.0];
            let hi = [1.0, 0.0, 3.0, -1.0];
            let pa = project_box(&a, &lo, &hi).unwrap();
            let pb = project_box(&b, &lo, &hi).unwrap();
            prop_assert!(crate::linalg::dist2(&pa, &pb) <= crate::linalg::dist2(&a, &b) + 1e-12);
        }

        #[test]
        fn affine_projection_satisfies_the_system(y in prop::collection::vec(-5.0..5.0f64, 3)) {
            let b = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, -1.0]);
            let x = project_affine(&y, &b, &[1.0, 0.5]).unwrap();
            let r = mat_vec(&b, &x);
            prop_assert!((r[0] - 1.0).abs() <= 1e-9 && (r[1] - 0.5).abs() <= 1e-9);
            // y - x lies in the row space of B
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let null = [1.0, -1.0, -1.0];
            prop_assert!(dot(&d, &null).abs() <= 1e-9);
        }
    }
}
