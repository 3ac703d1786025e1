//! Enlargement of a rotationally symmetric collar by equidistant circles.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::WarpedMetric;
use crate::profile::{Profile, Side, MAX_ORDER};

/// `inner` up to `at`, continued by its Taylor polynomial of order four, or
/// of the profile's resolvable order when that is lower.
#[derive(Debug, Clone)]
pub struct TaylorContinued {
    pub inner: Arc<dyn Profile>,
    pub at: f64,
    /// `f^(k)(at) / k!` for `k = 0..=4`.
    pub taylor: [f64; 5],
}

impl TaylorContinued {
    pub fn new(inner: Arc<dyn Profile>, at: f64) -> Self {
        let d = inner.derivatives_one_sided(at, Side::Left);
        let mut taylor = [0.0; 5];
        let mut fact = 1.0;
        for k in 0..=inner.resolvable_order().min(4) {
            if k > 0 {
                fact *= k as f64;
            }
            taylor[k] = d[k] / fact;
        }
        Self { inner, at, taylor }
    }
}

impl Profile for TaylorContinued {
    fn derivatives(&self, t: f64) -> [f64; MAX_ORDER + 1] {
        if t <= self.at {
            return self.inner.derivatives(t);
        }
        let h = t - self.at;
        let mut d = [0.0; MAX_ORDER + 1];
        // derivatives of sum a_k h^k
        for (j, out) in d.iter_mut().enumerate().take(5) {
            let mut s = 0.0;
            for k in (j..5).rev() {
                let falling: f64 = ((k - j + 1)..=k).map(|i| i as f64).product();
                s = s * h + self.taylor[k] * falling;
            }
            *out = s;
        }
        d
    }

    fn domain(&self) -> (f64, f64) {
        (self.inner.domain().0, f64::INFINITY)
    }

    fn joints(&self) -> Vec<f64> {
        self.inner.joints()
    }

    fn resolvable_order(&self) -> usize {
        self.inner.resolvable_order()
    }
}

/// Samples per unit length used to check the new circles.
const CHECKS_PER_UNIT: f64 = 4096.0;

/// Extends `metric` past its outer circle `t = t_max` by `delta0`. Normal
/// coordinates turn equidistant curves into circles `t = const`, so this
/// continues the profile: analytically where its domain allows, by Taylor
/// continuation otherwise. Every new circle must be strictly convex with
/// curvature `f'/f` at least half that of the original boundary circle.
pub fn equidistant_extend(metric: &WarpedMetric, delta0: f64) -> Result<WarpedMetric> {
    if !(delta0 > 0.0) {
        return Err(Error::InvalidArgument("delta0 must be positive".into()));
    }
    let b = metric.t_max;
    let d = metric.profile.derivatives_one_sided(b, Side::Left);
    if !(d[1] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "outer boundary circle is not strictly convex (f' = {})",
            d[1]
        )));
    }
    let floor = 0.5 * d[1] / d[0];
    let profile: Arc<dyn Profile> = if metric.profile.domain().1 >= b + delta0 {
        metric.profile.clone()
    } else {
        Arc::new(TaylorContinued::new(metric.profile.clone(), b))
    };
    let admissible = |s: f64| {
        let d = profile.derivatives(b + s);
        d[0] > 0.0 && d[1] > 0.0 && d[1] / d[0] >= floor
    };
    let n = (delta0 * CHECKS_PER_UNIT).ceil().max(16.0) as usize;
    for i in 1..=n {
        let s = delta0 * i as f64 / n as f64;
        if !admissible(s) {
            // largest admissible width, by bisection between samples
            let (mut lo, mut hi) = (delta0 * (i - 1) as f64 / n as f64, s);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if admissible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Err(Error::ConvexityLost {
                at: s,
                max_delta0: lo,
            });
        }
    }
    WarpedMetric::new(profile, metric.t_min, b + delta0, metric.period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{CubicTable, ExprProfile};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn warped(src: &str, lo: f64) -> WarpedMetric {
        WarpedMetric::new(Arc::new(ExprProfile::parse(src).unwrap()), lo, 0.0, TAU).unwrap()
    }

    #[test]
    fn analytic_profiles_continue_unchanged() {
        let m = warped("cosh(t + 0.5)", -1.0);
        let e = equidistant_extend(&m, 0.3).unwrap();
        assert_eq!(e.t_max, 0.3);
        assert_relative_eq!(e.profile.value(0.3), 0.8f64.cosh(), epsilon = 1e-15);
    }

    #[test]
    fn flat_cone_keeps_half_the_curvature_up_to_two() {
        let m = warped("1 + t/2", -1.0);
        let e = equidistant_extend(&m, 1.0).unwrap();
        // circle curvature (1/2) / (1 + t/2) against the floor 1/4
        let d = e.profile.derivatives(1.0);
        assert_relative_eq!(d[1] / d[0], 1.0 / 3.0, epsilon = 1e-15);
        match equidistant_extend(&m, 3.0) {
            Err(Error::ConvexityLost { at, max_delta0 }) => {
                assert!(at > 2.0 && at < 2.01);
                assert_relative_eq!(max_delta0, 2.0, epsilon = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_boundary_is_rejected() {
        let m = warped("cosh(t)", -1.0);
        assert!(matches!(
            equidistant_extend(&m, 0.1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tables_continue_by_taylor() {
        let t: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 200.0).collect();
        let f: Vec<f64> = t.iter().map(|t| (t + 0.2f64).cosh()).collect();
        let m =
            WarpedMetric::new(Arc::new(CubicTable::new(t, f).unwrap()), -1.0, 0.0, TAU).unwrap();
        let e = equidistant_extend(&m, 0.05);
        let e = e.unwrap();
        // the table resolves two derivatives, so the continuation is quadratic
        // with the spline's vanishing end curvature
        assert_relative_eq!(e.profile.value(0.05), 0.25f64.cosh(), epsilon = 2e-3);
        assert_relative_eq!(e.profile.value(0.0), 0.2f64.cosh(), epsilon = 1e-12);
    }
}
