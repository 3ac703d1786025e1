//! Normal Jacobi fields along geodesics and finite-time Lyapunov exponents.

use super::geodesic::{acceleration, run_flow, FlowOptions};
use super::rk;
use crate::error::{Error, Result};
use crate::metric::{Point, Surface, UnitTangent};

/// Scalar normal Jacobi field `J'' + K J = 0` along a geodesic.
#[derive(Debug, Clone)]
pub struct JacobiSolution {
    /// `(t, J, J')` at every accepted step, starting at `t = 0`.
    pub samples: Vec<(f64, f64, f64)>,
    /// Arc-length parameters where `J` changes sign.
    pub zeros: Vec<f64>,
    pub length: f64,
    pub exited: bool,
}

/// Solves the Jacobi equation jointly with the geodesic from `start` for at
/// most `t_max`, with `initial = (J(0), J'(0))`.
pub fn jacobi(
    surface: &Surface,
    start: &UnitTangent,
    t_max: f64,
    initial: (f64, f64),
    opts: &FlowOptions,
) -> Result<JacobiSolution> {
    let m = surface.metric();
    let start = UnitTangent::new(m, start.base, start.dir)?;
    let rhs = |y: &[f64; 6]| -> Result<[f64; 6]> {
        let a = acceleration(m, y)?;
        let k = m.gauss_curvature(&Point::new(y[0], y[1]))?;
        Ok([y[2], y[3], a.x, a.y, y[5], -k * y[4]])
    };
    let y0 = [
        start.base.x,
        start.base.y,
        start.dir.x,
        start.dir.y,
        initial.0,
        initial.1,
    ];
    let mut samples = vec![(0.0, initial.0, initial.1)];
    let mut zeros = Vec::new();
    let run = run_flow(surface, y0, t_max, opts, &rhs, |t0, ya, h, yb| {
        // a zero exactly at the step start was recorded by the previous step
        if ya[4] != 0.0 && (yb[4] == 0.0 || ya[4].signum() != yb[4].signum()) {
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > 1e-14 * h.max(1.0) {
                let mid = 0.5 * (lo + hi);
                let y = rk::step_from(&rhs, ya, mid)?;
                if y[4].signum() == ya[4].signum() && y[4] != 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(t0 + 0.5 * (lo + hi));
        }
        samples.push((t0 + h, yb[4], yb[5]));
        Ok(())
    })?;
    Ok(JacobiSolution {
        samples,
        zeros,
        length: run.time,
        exited: run.exited,
    })
}

/// First positive zero of the Jacobi field with `J(0) = 0, J'(0) = 1`, that
/// is, the first conjugate point along the geodesic, if one occurs before
/// `t_max` or the boundary.
pub fn first_conjugate_point(
    surface: &Surface,
    start: &UnitTangent,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<Option<f64>> {
    let sol = jacobi(surface, start, t_max, (0.0, 1.0), opts)?;
    Ok(sol.zeros.into_iter().find(|&t| t > 1e-9))
}

/// Growth rate estimate `(1/T) log ||D phi_T||` of the linearized flow on
/// normal Jacobi fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    pub time: f64,
}

/// Largest finite-time Lyapunov exponent along the geodesic from `start`
/// over arc length `t`. The geodesic must stay inside for the whole time;
/// an exit is reported as [`Error::EarlyExit`].
pub fn lyapunov_estimate(
    surface: &Surface,
    start: &UnitTangent,
    t: f64,
    opts: &FlowOptions,
) -> Result<LyapunovEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("time must be positive".into()));
    }
    let m = surface.metric();
    let start = UnitTangent::new(m, start.base, start.dir)?;
    // columns (J1, J1') and (J2, J2') of the fundamental matrix
    let rhs = |y: &[f64; 8]| -> Result<[f64; 8]> {
        let a = acceleration(m, y)?;
        let k = m.gauss_curvature(&Point::new(y[0], y[1]))?;
        Ok([y[2], y[3], a.x, a.y, y[5], -k * y[4], y[7], -k * y[6]])
    };
    let y0 = [
        start.base.x,
        start.base.y,
        start.dir.x,
        start.dir.y,
        1.0,
        0.0,
        0.0,
        1.0,
    ];
    // The fundamental matrix grows without bound, so the error scale must be
    // relative; rescaling keeps entries finite.
    let mut log_scale = 0.0;
    let mut y = y0;
    let mut elapsed = 0.0;
    while elapsed < t {
        let chunk = (t - elapsed).min(10.0);
        let run = run_flow(surface, y, chunk, opts, &rhs, |_, _, _, _| Ok(()))?;
        if run.exited {
            return Err(Error::EarlyExit(elapsed + run.time));
        }
        y = run.state;
        elapsed += chunk;
        let big = y[4..].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if big > 0.0 {
            for v in &mut y[4..] {
                *v /= big;
            }
            log_scale += big.ln();
        }
    }
    let (a, b, c, d) = (y[4], y[6], y[5], y[7]);
    // largest singular value of [[a, b], [c, d]]
    let fro = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let sigma = (0.5 * (fro + disc)).sqrt();
    Ok(LyapunovEstimate {
        exponent: (log_scale + sigma.ln()) / t,
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CartesianMetric, Vector, WarpedMetric};
    use crate::profile::ExprProfile;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};
    use std::sync::Arc;

    fn band(profile: &str, half_width: f64) -> Surface {
        let m = WarpedMetric::new(
            Arc::new(ExprProfile::parse(profile).unwrap()),
            -half_width,
            half_width,
            TAU,
        )
        .unwrap();
        Surface::warped(m).unwrap()
    }

    #[test]
    fn sphere_cap_has_conjugate_point_at_pi() {
        let s = Surface::disk(Arc::new(CartesianMetric::stereographic_sphere()), 4.0).unwrap();
        let st = s
            .entry_state(crate::metric::BoundaryPoint::new(0, 0.3), 0.0)
            .unwrap();
        let t = first_conjugate_point(&s, &st, 10.0, &FlowOptions::default())
            .unwrap()
            .unwrap();
        assert_relative_eq!(t, PI, epsilon = 1e-6);
    }

    #[test]
    fn hyperbolic_core_field_is_sinh() {
        let s = band("cosh(t)", 1.0);
        let st = UnitTangent::new(s.metric(), Point::new(0.0, 0.0), Vector::new(0.0, 1.0)).unwrap();
        let sol = jacobi(&s, &st, 5.0, (0.0, 1.0), &FlowOptions::default()).unwrap();
        assert!(sol.zeros.iter().all(|&z| z < 1e-12));
        for &(t, j, dj) in &sol.samples {
            assert_relative_eq!(j, t.sinh(), max_relative = 1e-8, epsilon = 1e-12);
            assert_relative_eq!(dj, t.cosh(), max_relative = 1e-8);
        }
    }

    #[test]
    fn lyapunov_on_hyperbolic_cores() {
        let s = band("cosh(t)", 1.0);
        let st = UnitTangent::new(s.metric(), Point::new(0.0, 0.0), Vector::new(0.0, 1.0)).unwrap();
        let l = lyapunov_estimate(&s, &st, 100.0, &FlowOptions::default()).unwrap();
        assert_relative_eq!(l.exponent, 1.0, epsilon = 1e-6);
        let s = band("cosh(2*t)/2", 1.0);
        let st = UnitTangent::new(s.metric(), Point::new(0.0, 0.0), Vector::new(0.0, 1.0)).unwrap();
        let l = lyapunov_estimate(&s, &st, 100.0, &FlowOptions::default()).unwrap();
        assert!((l.exponent - 2.0).abs() < 2e-2, "{}", l.exponent);
    }

    #[test]
    fn chord_exit_is_reported() {
        let s = Surface::disk(Arc::new(CartesianMetric::euclidean()), 1.0).unwrap();
        let st = s
            .entry_state(crate::metric::BoundaryPoint::new(0, 0.0), 0.0)
            .unwrap();
        assert!(matches!(
            lyapunov_estimate(&s, &st, 5.0, &FlowOptions::default()),
            Err(Error::EarlyExit(t)) if (t - 2.0).abs() < 1e-8
        ));
    }
}
