use std::sync::Arc;

use super::{Christoffel, Metric, Point, Tensor, Vector};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profile::{Profile, Side, MAX_ORDER};

/// Rotationally symmetric metric `dt^2 + f(t)^2 dtheta^2` on `[t_min, t_max] x S^1`.
///
/// Chart coordinates are `(t, theta)`; `theta` is not wrapped, which keeps
/// windings available by unwrapping.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    pub profile: Arc<dyn Profile>,
    pub t_min: f64,
    pub t_max: f64,
    pub period: f64,
}

const JOINT_TOL: f64 = 1e-12;

impl WarpedMetric {
    pub fn new(profile: Arc<dyn Profile>, t_min: f64, t_max: f64, period: f64) -> Result<Self> {
        if !(t_min < t_max) || !(period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "warped metric needs t_min < t_max and period > 0 (got {t_min}, {t_max}, {period})"
            )));
        }
        let (a, b) = profile.domain();
        if t_min < a || t_max > b {
            return Err(Error::InvalidArgument(format!(
                "collar interval [{t_min}, {t_max}] exceeds profile domain [{a}, {b}]"
            )));
        }
        let m = Self {
            profile,
            t_min,
            t_max,
            period,
        };
        // positivity on a fine sample of the collar interval
        for i in 0..=512 {
            let t = t_min + (t_max - t_min) * i as f64 / 512.0;
            if !(m.profile.value(t) > 0.0) {
                return Err(Error::DegenerateMetric(t, 0.0));
            }
        }
        Ok(m)
    }

    fn check(&self, t: f64) -> Result<[f64; 3]> {
        let (a, b) = self.profile.domain();
        if !(t >= a && t <= b) {
            return Err(Error::OutsideChart(t, f64::NAN));
        }
        let d = self.profile.d2(t);
        if !(d[0] > 0.0) {
            return Err(Error::DegenerateMetric(t, 0.0));
        }
        Ok(d)
    }

    fn near_joint(&self, t: f64) -> bool {
        self.profile
            .joints()
            .iter()
            .any(|j| (t - j).abs() <= JOINT_TOL)
    }

    /// `K = -f''/f`, choosing a branch at declared joints.
    pub fn gauss_curvature_one_sided(&self, t: f64, side: Side) -> Result<f64> {
        self.check(t)?;
        let d = self.profile.derivatives_one_sided(t, side);
        Ok(-d[2] / d[0])
    }

    /// Length of the closed curve `t = const`.
    pub fn circle_length(&self, t: f64) -> f64 {
        self.period * self.profile.value(t)
    }

    /// Clairaut first integral `f(t)^2 theta'` of a tangent vector.
    pub fn clairaut(&self, p: &Point, v: &Vector) -> f64 {
        let f = self.profile.value(p.x);
        f * f * v.y
    }

    /// Location of the minimum of `f` on the collar interval (the core circle
    /// for annuli with a waist), found by golden-section search on a bracket
    /// taken from a uniform scan.
    pub fn core(&self) -> f64 {
        let n = 2048;
        let h = (self.t_max - self.t_min) / n as f64;
        let (mut best, mut bi) = (f64::INFINITY, 0usize);
        for i in 0..=n {
            let v = self.profile.value(self.t_min + h * i as f64);
            if v < best {
                best = v;
                bi = i;
            }
        }
        let mut a = self.t_min + h * bi.saturating_sub(1) as f64;
        let mut b = (self.t_min + h * (bi + 1) as f64).min(self.t_max);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if self.profile.value(c) < self.profile.value(d) {
                b = d;
            } else {
                a = c;
            }
        }
        // prefer the exact critical point where f' vanishes
        let mut t = 0.5 * (a + b);
        for _ in 0..20 {
            let d = self.profile.d2(t);
            if d[2] <= 0.0 {
                break;
            }
            let step = d[1] / d[2];
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        t
    }
}

impl Metric for WarpedMetric {
    fn tensor(&self, p: &Point) -> Result<Tensor> {
        let d = self.check(p.x)?;
        Ok(Tensor::new(1.0, 0.0, 0.0, d[0] * d[0]))
    }

    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let d = self.check(p.x)?;
        let mut c = Christoffel::default();
        c.gamma[0][1][1] = -d[0] * d[1];
        c.gamma[1][0][1] = d[1] / d[0];
        c.gamma[1][1][0] = d[1] / d[0];
        Ok(c)
    }

    fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        if self.near_joint(p.x) {
            return Err(Error::JointEvaluation(p.x));
        }
        let d = self.check(p.x)?;
        Ok(-d[2] / d[0])
    }

    fn tensor_line_jet(&self, p: &Point, dir: &Vector, order: usize) -> Result<Vec<Tensor>> {
        let max = self.profile.resolvable_order().min(MAX_ORDER);
        if order > max {
            return Err(Error::OrderTooHigh {
                requested: order,
                max,
            });
        }
        self.check(p.x)?;
        let d = self.profile.derivatives(p.x);
        let mut f = Jet::<{ MAX_ORDER + 1 }>::constant(0.0);
        let mut scale = 1.0;
        let mut fact = 1.0;
        for k in 0..=MAX_ORDER {
            if k > 0 {
                scale *= dir.x;
                fact *= k as f64;
            }
            f.c[k] = d[k] * scale / fact;
        }
        let w = (f * f).derivatives();
        Ok((0..=order)
            .map(|k| Tensor::new(if k == 0 { 1.0 } else { 0.0 }, 0.0, 0.0, w[k]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ExprProfile;
    use approx::assert_relative_eq;

    fn cosh_annulus() -> WarpedMetric {
        WarpedMetric::new(
            Arc::new(ExprProfile::parse("cosh(t)").unwrap()),
            -1.0,
            1.0,
            std::f64::consts::TAU,
        )
        .unwrap()
    }

    #[test]
    fn christoffel_matches_warped_formula() {
        let m = cosh_annulus();
        let t = 0.37;
        let c = m.christoffel(&Point::new(t, 1.0)).unwrap();
        assert_relative_eq!(c.gamma[0][1][1], -t.cosh() * t.sinh(), max_relative = 1e-14);
        assert_relative_eq!(c.gamma[1][0][1], t.tanh(), max_relative = 1e-14);
        assert_eq!(c.gamma[0][0][0], 0.0);
        assert_eq!(c.gamma[1][1][1], 0.0);
        // cross-check the generic finite-difference route
        let fd = Christoffel::from_partials(
            &m.tensor(&Point::new(t, 1.0)).unwrap(),
            &super::super::fd_partials(&m, &Point::new(t, 1.0)).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(fd.gamma[0][1][1], c.gamma[0][1][1], epsilon = 1e-10);
        assert_relative_eq!(fd.gamma[1][1][0], c.gamma[1][1][0], epsilon = 1e-10);
    }

    #[test]
    fn cosh_has_curvature_minus_one() {
        let m = cosh_annulus();
        for t in [-0.9, 0.0, 0.5] {
            let p = Point::new(t, 0.2);
            assert_relative_eq!(m.gauss_curvature(&p).unwrap(), -1.0, epsilon = 1e-14);
            assert_relative_eq!(m.scalar_curvature(&p).unwrap(), -2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hyperbolic_tail_has_constant_curvature() {
        let (kappa, r) = (1.7, 0.25);
        let src = format!("sinh({kappa}*(t+{r}))/{kappa}");
        let m = WarpedMetric::new(
            Arc::new(ExprProfile::parse(&src).unwrap()),
            0.5,
            3.0,
            std::f64::consts::TAU,
        )
        .unwrap();
        for t in [0.6, 1.5, 2.9] {
            let k = m.gauss_curvature(&Point::new(t, 0.0)).unwrap();
            assert_relative_eq!(k, -kappa * kappa, max_relative = 1e-12);
            // generic Brioschi finite-difference route agrees
            let fd = super::super::fd_gauss_curvature(&m, &Point::new(t, 0.0)).unwrap();
            assert_relative_eq!(fd, -kappa * kappa, max_relative = 1e-6);
        }
    }

    #[test]
    fn core_of_cosh_is_zero() {
        assert!(cosh_annulus().core().abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_profile() {
        let p = Arc::new(ExprProfile::parse("t").unwrap());
        assert!(WarpedMetric::new(p, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn line_jet_of_circumferential_coefficient() {
        let m = cosh_annulus();
        let j = m
            .tensor_line_jet(&Point::new(0.2, 0.0), &Vector::new(1.0, 0.0), 3)
            .unwrap();
        // d/dt cosh^2 = sinh(2t), d2 = 2cosh(2t), d3 = 4 sinh(2t)
        assert_relative_eq!(j[1][(1, 1)], 0.4f64.sinh(), max_relative = 1e-13);
        assert_relative_eq!(j[2][(1, 1)], 2.0 * 0.4f64.cosh(), max_relative = 1e-13);
        assert_relative_eq!(j[3][(1, 1)], 4.0 * 0.4f64.sinh(), max_relative = 1e-13);
    }
}
