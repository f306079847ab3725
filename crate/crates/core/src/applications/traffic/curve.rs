use crate::error::{Error, Result};
use crate::game::ComponentPrice;

/// C^1 smoothing of the piecewise-affine queueing travel time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelTimeCurve {
    pub t_free: f64,
    pub f: f64,
    pub h: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Smoothing coefficients. The constant term makes the quadratic piece meet
/// the free-flow branch at f h - delta; the other junction then matches too.
pub fn smoothing_constants(f: f64, h: f64, t_free: f64) -> Result<TravelTimeCurve> {
    if !(f > 0.0) || !(h > 0.0) {
        return Err(Error::Invalid("f and h must be positive".into()));
    }
    let fh = f * h;
    let delta = 0.5 * ((fh * fh + 4.0 * fh).sqrt() - fh);
    let a = 1.0 / (8.0 * f * delta);
    let b = 1.0 / (4.0 * f) - h / (4.0 * delta);
    let c = t_free + f * h * h / (8.0 * delta) - h / 4.0 + delta / (8.0 * f);
    Ok(TravelTimeCurve {
        t_free,
        f,
        h,
        delta,
        a,
        b,
        c,
    })
}

impl TravelTimeCurve {
    pub fn left(&self) -> f64 {
        self.f * self.h - self.delta
    }

    pub fn right(&self) -> f64 {
        self.f * self.h + self.delta
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= self.left() {
            self.t_free
        } else if s >= self.right() {
            self.t_free + (s - self.f * self.h) / (2.0 * self.f)
        } else {
            (self.a * s + self.b) * s + self.c
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if s <= self.left() {
            0.0
        } else if s >= self.right() {
            1.0 / (2.0 * self.f)
        } else {
            2.0 * self.a * s + self.b
        }
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        if s > self.left() && s < self.right() {
            2.0 * self.a
        } else {
            0.0
        }
    }

    /// Unsmoothed reference curve.
    pub fn pwa(&self, s: f64) -> f64 {
        self.t_free + ((s - self.f * self.h) / (2.0 * self.f)).max(0.0)
    }
}

/// Edge travel times as a separable price.
#[derive(Debug, Clone)]
pub struct TravelTimes(pub Vec<TravelTimeCurve>);

impl ComponentPrice for TravelTimes {
    fn value(&self, t: usize, z: f64) -> f64 {
        self.0[t].value(z)
    }

    fn slope(&self, t: usize, z: f64) -> f64 {
        self.0[t].derivative(z)
    }

    fn curvature(&self, t: usize, z: f64) -> f64 {
        self.0[t].second_derivative(z)
    }

    fn slope_bound(&self, t: usize, zmax: f64) -> Option<f64> {
        Some(self.0[t].derivative(zmax.max(self.0[t].right())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueReport {
    /// Queueing time per vehicle, (D - F h) / (2F).
    pub queuing_time: f64,
    /// Total queueing time D (D - F h) / (2F).
    pub total: f64,
    /// Trapezoid integral of the queue length.
    pub integral: f64,
    pub integral_match: bool,
}

/// Integrates the queue length of an edge loaded at rate D/h over [0, h]
/// and compares with the closed-form total queueing time.
pub fn queue_consistency_check(d: f64, f_cap: f64, h: f64) -> Result<QueueReport> {
    if !(f_cap > 0.0) || !(h > 0.0) || d < 0.0 {
        return Err(Error::Invalid("need F > 0, h > 0 and D >= 0".into()));
    }
    if d <= f_cap * h {
        return Ok(QueueReport {
            queuing_time: 0.0,
            total: 0.0,
            integral: 0.0,
            integral_match: true,
        });
    }
    let q = |t: f64| -> f64 {
        if t <= h {
            (d - f_cap * h) / h * t
        } else {
            (d - f_cap * t).max(0.0)
        }
    };
    let end = d / f_cap;
    let step = h / 1e4;
    let steps = (end / step).ceil() as usize;
    let mut integral = 0.0;
    for k in 0..steps {
        let a = k as f64 * step;
        let b = ((k + 1) as f64 * step).min(end);
        integral += 0.5 * (q(a) + q(b)) * (b - a);
    }
    let total = d * (d - f_cap * h) / (2.0 * f_cap);
    Ok(QueueReport {
        queuing_time: (d - f_cap * h) / (2.0 * f_cap),
        total,
        integral,
        integral_match: ((integral - total) / total).abs() <= 1e-4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delta_examples() {
        assert!((smoothing_constants(4e-3, 7200.0, 10.0).unwrap().delta - 0.9674).abs() < 1e-4);
        let d = smoothing_constants(1.0, 0.3, 10.0).unwrap().delta;
        assert!((d - 0.5 * (1.29f64.sqrt() - 0.3)).abs() < 1e-12);
        assert!(smoothing_constants(0.0, 1.0, 1.0).is_err());
        let c = smoothing_constants(4e-3, 7200.0, 10.0).unwrap();
        assert!((2.0 * c.a - 1.0 / (4.0 * c.f * c.delta)).abs() < 1e-12);
    }

    #[test]
    fn branch_values() {
        let c = smoothing_constants(4e-3, 7200.0, 30.0).unwrap();
        assert_eq!(c.value(c.left() - 1.0), 30.0);
        let r = c.right();
        let mid = (c.a * r + c.b) * r + c.c;
        assert!((mid - (30.0 + c.delta / (2.0 * c.f))).abs() < 1e-9);
        assert!((c.value(r) - (30.0 + c.delta / (2.0 * c.f))).abs() < 1e-9);
    }

    #[test]
    fn queue_examples() {
        let r = queue_consistency_check(2.0, 1.0, 1.0).unwrap();
        assert!((r.total - 1.0).abs() < 1e-12 && (r.queuing_time - 0.5).abs() < 1e-12);
        assert!(r.integral_match);
        let r = queue_consistency_check(3.0, 1.0, 2.0).unwrap();
        assert!((r.total - 1.5).abs() < 1e-12 && r.integral_match);
        let r = queue_consistency_check(1.0, 1.0, 1.0).unwrap();
        assert_eq!(r.total, 0.0);
        assert!(queue_consistency_check(1.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn curve_is_c1_convex_and_above_the_kink(f in 1e-3..1e-1f64, h in 10.0..1e4f64, t in 1.0..100.0f64) {
            let c = smoothing_constants(f, h, t).unwrap();
            let quad = |s: f64| (c.a * s + c.b) * s + c.c;
            let dquad = |s: f64| 2.0 * c.a * s + c.b;
            // rounding of the quadratic branch grows with its largest term
            let scale = 1.0 + c.c.abs() + (c.a * c.right() * c.right()).abs();
            let (l, r) = (c.left(), c.right());
            prop_assert!((quad(l) - t).abs() <= 1e-12 * scale);
            prop_assert!((quad(r) - (t + (r - f * h) / (2.0 * f))).abs() <= 1e-12 * scale);
            let slope_scale = 1.0 + (2.0 * c.a * r).abs() + c.b.abs();
            prop_assert!(dquad(l).abs() <= 1e-12 * slope_scale);
            prop_assert!((dquad(r) - 1.0 / (2.0 * f)).abs() <= 1e-12 * slope_scale);
            let mut prev = c.derivative(c.left() - 1.0);
            for k in 0..=200 {
                let s = c.left() + (c.right() - c.left()) * k as f64 / 200.0;
                let d = c.derivative(s);
                prop_assert!(d >= prev - 1e-12);
                prev = d;
                prop_assert!(c.value(s) >= c.pwa(s) - 1e-12 * scale);
            }
        }
    }
}
