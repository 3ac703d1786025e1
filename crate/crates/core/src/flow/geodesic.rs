//! Unit-speed geodesics with boundary exit detection and lens data.

use serde::{Deserialize, Serialize};

use super::rk::{self, Adaptive, Control};
use crate::error::{Error, Result};
use crate::metric::{BoundaryPoint, Domain, Metric, Point, Surface, UnitTangent, Vector};
use crate::par::{self, Execution};

/// Integration settings shared by the geodesic, Jacobi and Lyapunov flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// Largest step in arc length.
    pub h_max: f64,
    /// Keep every accepted state in [`GeodesicPath::states`].
    pub record: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h_max: 0.5,
            record: false,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn adaptive(&self) -> Adaptive {
        Adaptive {
            h_max: self.h_max,
            ..Adaptive::new(self.tol)
        }
    }
}

const BOUNDARY_SLACK: f64 = 1e-9;
const EXIT_TIME_RESOLUTION: f64 = 1e-13;
const EXIT_LEVEL_RESOLUTION: f64 = 1e-14;

/// Geodesic acceleration `-Gamma(v, v)` for the state layout `[x, y, vx, vy, ..]`.
pub(crate) fn acceleration(m: &dyn Metric, y: &[f64]) -> Result<Vector> {
    let p = Point::new(y[0], y[1]);
    let v = Vector::new(y[2], y[3]);
    Ok(-m.christoffel(&p)?.contract(&v, &v))
}

/// Result of a driven flow: final time and state, and whether it stopped on
/// the boundary.
pub(crate) struct Run<const N: usize> {
    pub time: f64,
    pub state: [f64; N],
    pub exited: bool,
}

/// Integrates a system whose first four components are a geodesic state,
/// stopping where the base point leaves the surface.
///
/// `on_step(t0, y0, h, y1)` sees every accepted step; the final one is
/// truncated at the boundary. The velocity is renormalized to unit length
/// after each step.
pub(crate) fn run_flow<const N: usize, F, C>(
    surface: &Surface,
    y0: [f64; N],
    t_max: f64,
    opts: &FlowOptions,
    rhs: &F,
    mut on_step: C,
) -> Result<Run<N>>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
    C: FnMut(f64, &[f64; N], f64, &[f64; N]) -> Result<()>,
{
    let m = surface.metric();
    let p0 = Point::new(y0[0], y0[1]);
    let level0 = surface.level(&p0);
    if level0 > BOUNDARY_SLACK {
        return Err(Error::InvalidArgument(format!(
            "start point ({}, {}) lies outside the surface",
            p0.x, p0.y
        )));
    }
    if level0.abs() <= BOUNDARY_SLACK {
        let nu = surface.outward_normal(&p0)?;
        let out = m.inner(&p0, &Vector::new(y0[2], y0[3]), &nu)?;
        if out > 1e-12 {
            return Err(Error::OutwardStart);
        }
    }
    let mut exited = false;
    let mut exit_state = y0;
    let mut exit_time = 0.0;
    let (time, state) = rk::integrate(&opts.adaptive(), rhs, y0, t_max, |t0, ya, h, yb| {
        if surface.level(&Point::new(yb[0], yb[1])) > 0.0 {
            let level_at = |t: f64| -> Result<f64> {
                let y = rk::step_from(rhs, ya, t)?;
                Ok(surface.level(&Point::new(y[0], y[1])))
            };
            // Illinois regula falsi on the level function, bracket kept with
            // the inside end at `lo`
            let (mut lo, mut hi) = (0.0, h);
            let (mut f_lo, mut f_hi) = (
                surface.level(&Point::new(ya[0], ya[1])).min(0.0),
                surface.level(&Point::new(yb[0], yb[1])),
            );
            let mut side = 0i8;
            for _ in 0..200 {
                if hi - lo <= EXIT_TIME_RESOLUTION * h.max(1.0) || f_hi <= EXIT_LEVEL_RESOLUTION {
                    break;
                }
                let mut t = hi - f_hi * (hi - lo) / (f_hi - f_lo);
                if !(t > lo && t < hi) {
                    t = 0.5 * (lo + hi);
                }
                let f = level_at(t)?;
                if f > 0.0 {
                    hi = t;
                    f_hi = f;
                    if side == 1 {
                        f_lo *= 0.5;
                    }
                    side = 1;
                } else {
                    lo = t;
                    f_lo = f;
                    if side == -1 {
                        f_hi *= 0.5;
                    }
                    side = -1;
                }
            }
            let mut y = rk::step_from(rhs, ya, hi)?;
            snap_to_boundary(surface, &mut y)?;
            on_step(t0, ya, hi, &y)?;
            exited = true;
            exit_state = y;
            exit_time = t0 + hi;
            return Ok(Control::Stop);
        }
        renormalize(m, yb)?;
        on_step(t0, ya, h, yb)?;
        Ok(Control::Continue)
    })?;
    if exited {
        Ok(Run {
            time: exit_time,
            state: exit_state,
            exited,
        })
    } else {
        Ok(Run {
            time,
            state,
            exited,
        })
    }
}

fn renormalize<const N: usize>(m: &dyn Metric, y: &mut [f64; N]) -> Result<()> {
    let p = Point::new(y[0], y[1]);
    let v = Vector::new(y[2], y[3]);
    let n = m.norm(&p, &v)?;
    y[2] = v.x / n;
    y[3] = v.y / n;
    Ok(())
}

fn snap_to_boundary<const N: usize>(surface: &Surface, y: &mut [f64; N]) -> Result<()> {
    let p = Point::new(y[0], y[1]);
    let (c, u) = surface.locate(&p);
    let q = surface.curve(c)?.point(u);
    y[0] = q.x;
    y[1] = q.y;
    renormalize(surface.metric(), y)
}

fn state_of(y: &[f64]) -> UnitTangent {
    UnitTangent {
        base: Point::new(y[0], y[1]),
        dir: Vector::new(y[2], y[3]),
    }
}

fn initial(start: &UnitTangent) -> [f64; 4] {
    [start.base.x, start.base.y, start.dir.x, start.dir.y]
}

/// Number of times a band geodesic crosses the seam `theta = 0 mod period`,
/// counted with sign; always zero on disks.
pub fn winding_between(domain: Domain, theta_start: f64, theta_end: f64) -> i64 {
    match domain {
        Domain::Disk { .. } => 0,
        Domain::Band { period, .. } => {
            ((theta_end / period).floor() - (theta_start / period).floor()) as i64
        }
    }
}

/// A computed geodesic segment.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    /// Accepted states with their arc-length parameter; empty unless
    /// recording was requested.
    pub states: Vec<(f64, UnitTangent)>,
    pub end: UnitTangent,
    pub length: f64,
    pub winding: i64,
    /// Whether the segment ended on the boundary before `t_max`.
    pub exited: bool,
}

/// Follows the unit-speed geodesic from `start` for at most `t_max`,
/// stopping on the boundary.
pub fn integrate(
    surface: &Surface,
    start: &UnitTangent,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<GeodesicPath> {
    let m = surface.metric();
    let start = UnitTangent::new(m, start.base, start.dir)?;
    let rhs = |y: &[f64; 4]| -> Result<[f64; 4]> {
        let a = acceleration(m, y)?;
        Ok([y[2], y[3], a.x, a.y])
    };
    let mut states = Vec::new();
    if opts.record {
        states.push((0.0, start));
    }
    let run = run_flow(
        surface,
        initial(&start),
        t_max,
        opts,
        &rhs,
        |t0, _, h, y1| {
            if opts.record {
                states.push((t0 + h, state_of(y1)));
            }
            Ok(())
        },
    )?;
    Ok(GeodesicPath {
        states,
        end: state_of(&run.state),
        length: run.time,
        winding: winding_between(surface.domain(), start.base.y, run.state[1]),
        exited: run.exited,
    })
}

/// Boundary position and angle of a state based on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoords {
    pub component: usize,
    pub s: f64,
    /// For entries: angle from the inward normal toward the tangent. For
    /// exits: angle from the outward normal toward the tangent.
    pub angle: f64,
}

/// How a geodesic launched from the boundary ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Exit {
        state: UnitTangent,
        at: BoundaryCoords,
    },
    /// Still inside after the time budget; `state` is the last state.
    Trapped { state: UnitTangent },
}

/// Entry data, exit data, travel time and winding of one geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensRecord {
    pub entry: UnitTangent,
    pub entry_at: Option<BoundaryCoords>,
    pub outcome: Outcome,
    pub time: f64,
    pub winding: i64,
}

impl LensRecord {
    pub fn is_trapped(&self) -> bool {
        matches!(self.outcome, Outcome::Trapped { .. })
    }

    pub fn exit_at(&self) -> Option<BoundaryCoords> {
        match self.outcome {
            Outcome::Exit { at, .. } => Some(at),
            Outcome::Trapped { .. } => None,
        }
    }
}

/// Coordinates of a boundary state, with the angle taken from the inward
/// normal when `inward` is set and from the outward normal otherwise.
pub fn boundary_coords(
    surface: &Surface,
    state: &UnitTangent,
    inward: bool,
) -> Result<BoundaryCoords> {
    let (component, s, beta, _) = surface.boundary_coordinates(state)?;
    let angle = if inward {
        let m = surface.metric();
        let (_, u) = surface.locate(&state.base);
        let nu = surface.outward_normal(&state.base)?;
        let tau = surface.boundary_tangent(component, u)?;
        let a = m.inner(&state.base, &state.dir, &tau)?;
        let b = m.inner(&state.base, &state.dir, &nu)?;
        a.atan2(-b)
    } else {
        beta
    };
    Ok(BoundaryCoords {
        component,
        s,
        angle,
    })
}

/// Exit state, travel time and winding of the geodesic from `start`.
pub fn exit_event(
    surface: &Surface,
    start: &UnitTangent,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<LensRecord> {
    let opts = FlowOptions {
        record: false,
        ..*opts
    };
    let start = UnitTangent::new(surface.metric(), start.base, start.dir)?;
    let entry_at = if surface.level(&start.base).abs() <= BOUNDARY_SLACK {
        Some(boundary_coords(surface, &start, true)?)
    } else {
        None
    };
    let path = integrate(surface, &start, t_max, &opts)?;
    let outcome = if path.exited {
        Outcome::Exit {
            state: path.end,
            at: boundary_coords(surface, &path.end, false)?,
        }
    } else {
        Outcome::Trapped { state: path.end }
    };
    Ok(LensRecord {
        entry: start,
        entry_at,
        outcome,
        time: path.length,
        winding: path.winding,
    })
}

/// Inward boundary state given by boundary position and entry angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSample {
    pub point: BoundaryPoint,
    /// Angle from the inward normal toward the boundary tangent, in
    /// `[-pi/2, pi/2]`.
    pub angle: f64,
}

impl LensSample {
    pub fn new(component: usize, s: f64, angle: f64) -> Self {
        Self {
            point: BoundaryPoint::new(component, s),
            angle,
        }
    }
}

/// Exit record of a single boundary entry.
pub fn lens_record(
    surface: &Surface,
    sample: &LensSample,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<LensRecord> {
    if !(sample.angle.abs() <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!(
            "entry angle {} outside [-pi/2, pi/2]",
            sample.angle
        )));
    }
    let start = surface.entry_state(sample.point, sample.angle)?;
    let mut rec = exit_event(surface, &start, t_max, opts)?;
    rec.entry_at = Some(BoundaryCoords {
        component: sample.point.component,
        s: surface
            .curve(sample.point.component)?
            .wrap_s(sample.point.s),
        angle: sample.angle,
    });
    Ok(rec)
}

/// Lens data for a batch of boundary entries; per-sample failures are
/// reported in place.
pub fn lens_data(
    surface: &Surface,
    samples: &[LensSample],
    t_max: f64,
    opts: &FlowOptions,
    exec: Execution,
) -> Vec<Result<LensRecord>> {
    par::map(exec, samples, |_, s| lens_record(surface, s, t_max, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CartesianMetric, WarpedMetric};
    use crate::profile::ExprProfile;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    use std::sync::Arc;

    fn flat_disk() -> Surface {
        Surface::disk(Arc::new(CartesianMetric::euclidean()), 1.0).unwrap()
    }

    #[test]
    fn chords_of_the_flat_disk() {
        let s = flat_disk();
        let opts = FlowOptions::default();
        for &a in &[0.0, 0.3, -1.2, 1.5] {
            let rec = lens_record(&s, &LensSample::new(0, 0.7, a), 10.0, &opts).unwrap();
            assert_relative_eq!(rec.time, 2.0 * f64::cos(a), epsilon = 1e-9);
            let at = rec.exit_at().unwrap();
            // chord subtends pi - 2a
            assert_relative_eq!(at.s, (0.7 + PI - 2.0 * a).rem_euclid(TAU), epsilon = 1e-9);
            // mirror symmetry: leaves at the same angle from the outward normal
            assert_relative_eq!(at.angle, a, epsilon = 1e-9);
        }
    }

    #[test]
    fn tangent_entry_exits_immediately() {
        let s = flat_disk();
        let rec = lens_record(
            &s,
            &LensSample::new(0, 0.0, FRAC_PI_2),
            10.0,
            &FlowOptions::default(),
        )
        .unwrap();
        // the level function cannot resolve tangential displacement below sqrt(eps)
        assert!(rec.time < 1e-7, "{}", rec.time);
    }

    #[test]
    fn outward_start_is_rejected() {
        let s = flat_disk();
        let st = UnitTangent::new(s.metric(), Point::new(1.0, 0.0), Vector::new(1.0, 0.2)).unwrap();
        assert!(matches!(
            integrate(&s, &st, 1.0, &FlowOptions::default()),
            Err(Error::OutwardStart)
        ));
    }

    #[test]
    fn core_geodesic_is_trapped_and_winds() {
        let m = WarpedMetric::new(
            Arc::new(ExprProfile::parse("cosh(t)").unwrap()),
            -1.0,
            1.0,
            TAU,
        )
        .unwrap();
        let s = Surface::warped(m).unwrap();
        let st = UnitTangent::new(s.metric(), Point::new(0.0, 0.0), Vector::new(0.0, 1.0)).unwrap();
        let rec = exit_event(&s, &st, 20.0, &FlowOptions::default()).unwrap();
        assert!(rec.is_trapped());
        assert_eq!(rec.winding, 3);
        if let Outcome::Trapped { state } = rec.outcome {
            assert_eq!(state.base.x, 0.0);
        }
    }

    #[test]
    fn batch_modes_agree() {
        let s = flat_disk();
        let samples: Vec<_> = (0..32)
            .map(|i| LensSample::new(0, 0.2 * i as f64, -1.4 + 0.09 * i as f64))
            .collect();
        let opts = FlowOptions::default();
        let a = lens_data(&s, &samples, 5.0, &opts, Execution::Sequential);
        let b = lens_data(&s, &samples, 5.0, &opts, Execution::Parallel);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
        }
    }
}
