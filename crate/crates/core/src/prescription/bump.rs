//! Scaled bump families `sum_i delta^(m - 2 + 1/m) chi(|x - x_i| / delta)` whose
//! `C^(m-2)` norm vanishes and `C^(m-1)` norm blows up as `delta -> 0`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::{Chart, GridField, Point, ScalarField, Surface, Vector};
use crate::profile::MAX_ORDER;

/// Even cutoff `chi(u) = p(u^2) exp(-1 / (1 - u^2))` on `(-1, 1)` with
/// `chi^(j)(0) = 0` for `j <= m - 2` and `chi^(m-1)(0) = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    pub m: usize,
    /// Coefficients of `p` in powers of `v = u^2`.
    pub coeffs: Vec<f64>,
}

const JET: usize = MAX_ORDER + 1;

fn mollifier<const N: usize>(v: Jet<N>) -> Jet<N> {
    let one = Jet::<N>::constant(1.0);
    (-(one / (one - v))).exp()
}

impl BumpProfile {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "m = {m} must be odd and at least 3"
            )));
        }
        let top = (m - 1) / 2;
        if top >= JET {
            return Err(Error::OrderTooHigh {
                requested: m,
                max: 2 * JET - 1,
            });
        }
        // Taylor coefficients of exp(-1 / (1 - v)) at v = 0
        let e = mollifier(Jet::<JET>::variable(0.0)).c;
        let mut factorial = 1.0;
        for k in 2..m {
            factorial *= k as f64;
        }
        // coefficient of v^i in p(v) E(v): zero below the top, and the u^(m-1)
        // Taylor coefficient -1/(m-1)! at the top
        let mut coeffs = vec![0.0; top + 1];
        for i in 0..=top {
            let target = if i == top { -1.0 / factorial } else { 0.0 };
            let acc: f64 = (0..i).map(|l| coeffs[l] * e[i - l]).sum();
            coeffs[i] = (target - acc) / e[0];
        }
        Ok(Self { m, coeffs })
    }

    /// `chi` as a function of `v = u^2`.
    pub fn of_square<const N: usize>(&self, v: Jet<N>) -> Jet<N> {
        if !(v.value() < 1.0) {
            return Jet::constant(0.0);
        }
        let mut p = Jet::<N>::constant(0.0);
        for c in self.coeffs.iter().rev() {
            p = p * v + *c;
        }
        p * mollifier(v)
    }

    pub fn value(&self, u: f64) -> f64 {
        self.of_square(Jet::<1>::constant(u * u)).value()
    }

    /// `chi^(j)(u)` for `j = 0..=MAX_ORDER`.
    pub fn derivatives(&self, u: f64) -> [f64; JET] {
        let x = Jet::<JET>::variable(u);
        self.of_square(x * x).derivatives()
    }
}

/// The field `h_delta` of a bump family, sampled on rings around each center.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    pub profile: BumpProfile,
    pub delta: f64,
    pub centers: Vec<Point>,
    scale: f64,
}

/// Rings and directions used for sampling each bump.
const RINGS: usize = 12;
const PER_RING: usize = 24;

impl BumpFamily {
    /// Exponent `m - 2 + 1/m` of the amplitude.
    pub fn amplitude_exponent(m: usize) -> f64 {
        m as f64 - 2.0 + 1.0 / m as f64
    }

    pub fn m(&self) -> usize {
        self.profile.m
    }

    pub fn to_grid(&self, chart: &Chart) -> GridField {
        GridField::from_cartesian(chart, |p| self.value(p))
    }
}

impl ScalarField for BumpFamily {
    fn value(&self, p: &Point) -> f64 {
        self.centers
            .iter()
            .map(|c| self.scale * self.profile.value((p - c).norm() / self.delta))
            .sum()
    }

    fn line_derivatives(&self, p: &Point, dir: &Vector, order: usize) -> Option<Vec<f64>> {
        if order > MAX_ORDER {
            return None;
        }
        let mut out = vec![0.0; order + 1];
        let inv = 1.0 / (self.delta * self.delta);
        for c in &self.centers {
            let dx = Jet::<JET>::line(p.x - c.x, dir.x);
            let dy = Jet::<JET>::line(p.y - c.y, dir.y);
            let v = (dx * dx + dy * dy) * inv;
            let d = self.profile.of_square(v).derivatives();
            for (o, x) in out.iter_mut().zip(d) {
                *o += self.scale * x;
            }
        }
        Some(out)
    }

    fn sample_points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.centers.len() * (1 + RINGS * PER_RING));
        for c in &self.centers {
            pts.push(*c);
            for i in 1..=RINGS {
                let r = self.delta * i as f64 / (RINGS + 1) as f64;
                for j in 0..PER_RING {
                    let t =
                        std::f64::consts::TAU * (j as f64 + 0.5 * (i % 2) as f64) / PER_RING as f64;
                    pts.push(c + Vector::new(r * t.cos(), r * t.sin()));
                }
            }
        }
        pts
    }

    fn length_scale(&self) -> f64 {
        self.delta
    }
}

/// Builds the family on a surface with a Euclidean metric. Centers must be
/// more than `2 delta` apart and farther than `max(delta, clearance)` from
/// the boundary.
pub fn bump_family(
    m: usize,
    delta: f64,
    centers: Vec<Point>,
    surface: &Surface,
    clearance: f64,
) -> Result<BumpFamily> {
    if !surface.metric().is_euclidean() {
        return Err(Error::Unsupported(
            "bump families need geodesic balls; only Euclidean metrics are supported".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let profile = BumpProfile::new(m)?;
    for (i, a) in centers.iter().enumerate() {
        let room = -surface.level(a);
        if room <= delta.max(clearance) {
            return Err(Error::Separation(format!(
                "center ({}, {}) is {room:.3e} from the boundary",
                a.x, a.y
            )));
        }
        for b in &centers[i + 1..] {
            if (a - b).norm() <= 2.0 * delta {
                return Err(Error::Separation(format!(
                    "centers ({}, {}) and ({}, {}) are closer than 2 delta",
                    a.x, a.y, b.x, b.y
                )));
            }
        }
    }
    Ok(BumpFamily {
        profile,
        delta,
        centers,
        scale: delta.powf(BumpFamily::amplitude_exponent(m)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{cm_norm, CartesianMetric};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn flat_disk() -> Surface {
        Surface::disk(Arc::new(CartesianMetric::euclidean()), 1.0).unwrap()
    }

    #[test]
    fn profile_jet_at_the_center() {
        for m in [3, 5, 7] {
            let b = BumpProfile::new(m).unwrap();
            let d = b.derivatives(0.0);
            for (j, v) in d.iter().enumerate().take(m - 1) {
                assert!(v.abs() < 1e-12, "m = {m}, j = {j}: {v}");
            }
            assert_relative_eq!(d[m - 1], -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn profile_matches_the_monomial_closed_form() {
        for m in [3usize, 5] {
            let b = BumpProfile::new(m).unwrap();
            let fact: f64 = (1..m).map(|k| k as f64).product();
            for u in [0.0, 0.2, -0.5, 0.9, 0.999] {
                let v: f64 = u * u;
                let oracle =
                    -std::f64::consts::E / fact * u.powi(m as i32 - 1) * (-1.0 / (1.0 - v)).exp();
                assert_relative_eq!(b.value(u), oracle, epsilon = 1e-14, max_relative = 1e-12);
            }
            assert_eq!(b.value(1.0), 0.0);
            assert_eq!(b.value(-1.5), 0.0);
        }
    }

    #[test]
    fn rejects_bad_orders_and_placements() {
        assert!(matches!(
            BumpProfile::new(4),
            Err(Error::InvalidArgument(_))
        ));
        let s = flat_disk();
        let c = vec![Point::new(0.0, 0.0), Point::new(0.15, 0.0)];
        assert!(matches!(
            bump_family(3, 0.1, c, &s, 0.0),
            Err(Error::Separation(_))
        ));
        let edge = vec![Point::new(0.95, 0.0)];
        assert!(matches!(
            bump_family(3, 0.1, edge, &s, 0.0),
            Err(Error::Separation(_))
        ));
    }

    #[test]
    fn norm_slopes() {
        let s = flat_disk();
        let flat = CartesianMetric::euclidean();
        for m in [3usize, 5] {
            let deltas: Vec<f64> = (3..=7).map(|k| 2f64.powi(-k)).collect();
            let logs = |order: usize| -> Vec<f64> {
                deltas
                    .iter()
                    .map(|&d| {
                        let fam = bump_family(m, d, vec![Point::new(0.1, -0.2)], &s, 0.0).unwrap();
                        cm_norm(&fam, order, &flat).unwrap().ln()
                    })
                    .collect()
            };
            let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
            let slope = |y: Vec<f64>| {
                let n = x.len() as f64;
                let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
                let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
                let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
                sxy / sxx
            };
            let inv = 1.0 / m as f64;
            assert_relative_eq!(slope(logs(m - 2)), inv, epsilon = 0.1);
            assert_relative_eq!(slope(logs(m - 1)), inv - 1.0, epsilon = 0.1);
        }
    }
}
