//! Compact surfaces with boundary: a metric on a chart together with the
//! region it is restricted to, plus boundary parametrizations.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Metric, Point, Vector, WarpedMetric};
use crate::error::{Error, Result};

/// Region of the chart on which the surface lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `|p| <= radius` in a Cartesian chart; one boundary component.
    Disk { radius: f64 },
    /// `t_min <= t <= t_max` in a `(t, theta)` chart with `theta` periodic;
    /// component 0 is `t = t_min`, component 1 is `t = t_max`.
    Band { t_min: f64, t_max: f64, period: f64 },
}

/// Point on the boundary by component and arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub component: usize,
    pub s: f64,
}

impl BoundaryPoint {
    pub fn new(component: usize, s: f64) -> Self {
        Self { component, s }
    }
}

/// A base point with a tangent direction of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTangent {
    pub base: Point,
    pub dir: Vector,
}

impl UnitTangent {
    /// Normalizes `dir` to unit `g`-length at `base`.
    pub fn new(metric: &dyn Metric, base: Point, dir: Vector) -> Result<Self> {
        let n = metric.norm(&base, &dir)?;
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        Ok(Self { base, dir: dir / n })
    }

    pub fn reversed(&self) -> Self {
        Self {
            base: self.base,
            dir: -self.dir,
        }
    }
}

const PANELS: usize = 1024;
const GAUSS_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// One closed boundary component with an arc-length table.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub component: usize,
    /// Period of the curve parameter `u`.
    pub u_period: f64,
    pub length: f64,
    /// Orientation relative to the chart (`+1` counterclockwise / increasing theta).
    pub orientation: f64,
    cumulative: Vec<f64>,
    metric: Arc<dyn Metric>,
    domain: Domain,
}

impl BoundaryCurve {
    fn build(metric: Arc<dyn Metric>, domain: Domain, component: usize) -> Result<Self> {
        let u_period = match domain {
            Domain::Disk { .. } => TAU,
            Domain::Band { period, .. } => period,
        };
        let mut c = Self {
            component,
            u_period,
            length: 0.0,
            orientation: 1.0,
            cumulative: Vec::with_capacity(PANELS + 1),
            metric,
            domain,
        };
        let h = u_period / PANELS as f64;
        let mut acc = 0.0;
        c.cumulative.push(0.0);
        for i in 0..PANELS {
            acc += c.integrate(i as f64 * h, (i + 1) as f64 * h)?;
            c.cumulative.push(acc);
        }
        c.length = acc;
        Ok(c)
    }

    pub fn point(&self, u: f64) -> Point {
        match self.domain {
            Domain::Disk { radius } => Point::new(radius * u.cos(), radius * u.sin()),
            Domain::Band { t_min, t_max, .. } => {
                Point::new(if self.component == 0 { t_min } else { t_max }, u)
            }
        }
    }

    /// `dP/du`.
    pub fn velocity(&self, u: f64) -> Vector {
        match self.domain {
            Domain::Disk { radius } => Vector::new(-radius * u.sin(), radius * u.cos()),
            Domain::Band { .. } => Vector::new(0.0, 1.0),
        }
    }

    /// `d^2P/du^2`.
    pub fn acceleration(&self, u: f64) -> Vector {
        match self.domain {
            Domain::Disk { radius } => Vector::new(-radius * u.cos(), -radius * u.sin()),
            Domain::Band { .. } => Vector::zeros(),
        }
    }

    pub fn speed(&self, u: f64) -> Result<f64> {
        self.metric.norm(&self.point(u), &self.velocity(u))
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in GAUSS_X.iter().zip(GAUSS_W) {
            s += w * self.speed(m + r * x)?;
        }
        Ok(s * r)
    }

    /// Arc length from `u = 0`, continued across periods.
    pub fn s_of_u(&self, u: f64) -> Result<f64> {
        let k = (u / self.u_period).floor();
        let ur = u - k * self.u_period;
        let h = self.u_period / PANELS as f64;
        let i = ((ur / h) as usize).min(PANELS - 1);
        Ok(k * self.length + self.cumulative[i] + self.integrate(i as f64 * h, ur)?)
    }

    /// Inverse of [`Self::s_of_u`].
    pub fn u_of_s(&self, s: f64) -> Result<f64> {
        let k = (s / self.length).floor();
        let sr = s - k * self.length;
        let i = match self
            .cumulative
            .binary_search_by(|v| v.partial_cmp(&sr).unwrap())
        {
            Ok(i) => i.min(PANELS - 1),
            Err(i) => i.saturating_sub(1).min(PANELS - 1),
        };
        let h = self.u_period / PANELS as f64;
        let (s0, s1) = (self.cumulative[i], self.cumulative[i + 1]);
        let mut u = i as f64 * h + h * (sr - s0) / (s1 - s0);
        for _ in 0..8 {
            let r = self.s_of_u(u)? - sr;
            u -= r / self.speed(u)?;
            if r.abs() < 1e-15 * self.length.max(1.0) {
                break;
            }
        }
        Ok(u + k * self.u_period)
    }

    /// Reduces `s` to `[0, length)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.length);
        if r >= self.length {
            0.0
        } else {
            r
        }
    }
}

/// A metric restricted to a disk or band with convex-boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct Surface {
    metric: Arc<dyn Metric>,
    domain: Domain,
    curves: Vec<BoundaryCurve>,
}

impl Surface {
    pub fn new(metric: Arc<dyn Metric>, domain: Domain) -> Result<Self> {
        let count = match domain {
            Domain::Disk { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidArgument(
                        "disk radius must be positive".into(),
                    ));
                }
                1
            }
            Domain::Band {
                t_min,
                t_max,
                period,
            } => {
                if !(t_min < t_max && period > 0.0) {
                    return Err(Error::InvalidArgument(
                        "band needs t_min < t_max and a positive period".into(),
                    ));
                }
                2
            }
        };
        let curves = (0..count)
            .map(|c| BoundaryCurve::build(metric.clone(), domain, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            metric,
            domain,
            curves,
        })
    }

    /// Band surface of a warped-product metric.
    pub fn warped(m: WarpedMetric) -> Result<Self> {
        let domain = Domain::Band {
            t_min: m.t_min,
            t_max: m.t_max,
            period: m.period,
        };
        Self::new(Arc::new(m), domain)
    }

    pub fn disk(metric: Arc<dyn Metric>, radius: f64) -> Result<Self> {
        Self::new(metric, Domain::Disk { radius })
    }

    pub fn metric(&self) -> &dyn Metric {
        self.metric.as_ref()
    }

    pub fn metric_arc(&self) -> Arc<dyn Metric> {
        self.metric.clone()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn components(&self) -> usize {
        self.curves.len()
    }

    pub fn curve(&self, component: usize) -> Result<&BoundaryCurve> {
        self.curves
            .get(component)
            .ok_or_else(|| Error::InvalidArgument(format!("no boundary component {component}")))
    }

    pub fn total_boundary_length(&self) -> f64 {
        self.curves.iter().map(|c| c.length).sum()
    }

    /// Signed level function, negative inside and zero on the boundary.
    pub fn level(&self, p: &Point) -> f64 {
        match self.domain {
            Domain::Disk { radius } => p.norm() - radius,
            Domain::Band { t_min, t_max, .. } => (t_min - p.x).max(p.x - t_max),
        }
    }

    fn level_gradient(&self, p: &Point) -> Vector {
        match self.domain {
            Domain::Disk { .. } => {
                let r = p.norm();
                if r > 0.0 {
                    p / r
                } else {
                    Vector::new(1.0, 0.0)
                }
            }
            Domain::Band { t_min, t_max, .. } => {
                if p.x - t_max >= t_min - p.x {
                    Vector::new(1.0, 0.0)
                } else {
                    Vector::new(-1.0, 0.0)
                }
            }
        }
    }

    /// Outward unit normal (in `g`) at a point near the boundary.
    pub fn outward_normal(&self, p: &Point) -> Result<Vector> {
        let g = self.metric.tensor(p)?;
        let inv = g.try_inverse().ok_or(Error::DegenerateMetric(p.x, p.y))?;
        let grad = self.level_gradient(p);
        let n = inv * grad;
        let len = grad.dot(&n).sqrt();
        Ok(n / len)
    }

    /// Boundary component closest to a chart point and its curve parameter.
    ///
    /// For bands the parameter is returned unwrapped (the chart `theta`).
    pub fn locate(&self, p: &Point) -> (usize, f64) {
        match self.domain {
            Domain::Disk { .. } => (0, p.y.atan2(p.x).rem_euclid(TAU)),
            Domain::Band { t_min, t_max, .. } => {
                let c = if (p.x - t_min).abs() <= (p.x - t_max).abs() {
                    0
                } else {
                    1
                };
                (c, p.y)
            }
        }
    }

    /// Unit tangent to a boundary component at parameter `u`.
    pub fn boundary_tangent(&self, component: usize, u: f64) -> Result<Vector> {
        let c = self.curve(component)?;
        let v = c.velocity(u);
        Ok(v / self.metric.norm(&c.point(u), &v)?)
    }

    /// Inward state at a boundary point; `angle` is measured from the inward
    /// normal toward the positively oriented tangent, in `(-pi/2, pi/2)`.
    pub fn entry_state(&self, x: BoundaryPoint, angle: f64) -> Result<UnitTangent> {
        let c = self.curve(x.component)?;
        let u = c.u_of_s(c.wrap_s(x.s))?;
        self.entry_state_at(x.component, u, angle)
    }

    pub fn entry_state_at(&self, component: usize, u: f64, angle: f64) -> Result<UnitTangent> {
        let c = self.curve(component)?;
        let p = c.point(u);
        let nu = self.outward_normal(&p)?;
        let tau = self.boundary_tangent(component, u)?;
        let dir = -nu * angle.cos() + tau * angle.sin();
        UnitTangent::new(self.metric.as_ref(), p, dir)
    }

    /// Boundary coordinates of a state based on the boundary:
    /// `(component, s, angle from outward normal toward the tangent, u)`.
    pub fn boundary_coordinates(&self, state: &UnitTangent) -> Result<(usize, f64, f64, f64)> {
        let (component, u) = self.locate(&state.base);
        let c = self.curve(component)?;
        let nu = self.outward_normal(&state.base)?;
        let tau = self.boundary_tangent(component, u)?;
        let m = self.metric.as_ref();
        let a = m.inner(&state.base, &state.dir, &tau)?;
        let b = m.inner(&state.base, &state.dir, &nu)?;
        let s = c.wrap_s(c.s_of_u(u)?);
        Ok((component, s, a.atan2(b), u))
    }

    /// Geodesic curvature of a boundary component with respect to the
    /// inward normal at parameter `u`.
    pub fn geodesic_curvature(&self, component: usize, u: f64) -> Result<f64> {
        let c = self.curve(component)?;
        let p = c.point(u);
        let v = c.velocity(u);
        let acc = c.acceleration(u) + self.metric.christoffel(&p)?.contract(&v, &v);
        let nu = self.outward_normal(&p)?;
        let speed2 = self.metric.inner(&p, &v, &v)?;
        Ok(-self.metric.inner(&p, &acc, &nu)? / speed2)
    }
}

/// Geodesic curvature sampled at `samples` equally spaced parameters of a
/// boundary component, as `(s, curvature)` pairs.
pub fn boundary_second_fundamental_form(
    surface: &Surface,
    component: usize,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let c = surface.curve(component)?;
    (0..samples)
        .map(|i| {
            let u = c.u_period * i as f64 / samples as f64;
            Ok((c.s_of_u(u)?, surface.geodesic_curvature(component, u)?))
        })
        .collect()
}
