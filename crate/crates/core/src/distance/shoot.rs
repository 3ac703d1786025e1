//! Single shooting for boundary-to-boundary geodesics: an angle scan from
//! the first endpoint, refinement toward trapped directions, and Illinois
//! root polishing.

use super::DistanceOptions;
use crate::error::Result;
use crate::flow::{integrate, FlowOptions};
use crate::metric::{BoundaryPoint, Domain, Surface, UnitTangent};
use std::f64::consts::FRAC_PI_2;

/// Endpoint data in the form used by the miss function.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Endpoints {
    pub x: BoundaryPoint,
    /// Boundary parameter of `y` in `[0, period)`.
    pub y_param: f64,
    pub y_component: usize,
    /// Boundary parameter period and length of the component of `y`.
    pub period: f64,
    pub y_length: f64,
    pub band: bool,
}

impl Endpoints {
    pub fn new(surface: &Surface, x: BoundaryPoint, y: BoundaryPoint) -> Result<Self> {
        let c = surface.curve(y.component)?;
        surface.curve(x.component)?;
        let y_param = c.u_of_s(c.wrap_s(y.s))?.rem_euclid(c.u_period);
        Ok(Self {
            x,
            y_param,
            y_component: y.component,
            period: c.u_period,
            y_length: c.length,
            band: matches!(surface.domain(), Domain::Band { .. }),
        })
    }

    /// Converts a parameter miss on the target component to arc length.
    pub fn arc_miss(&self, param_miss: f64) -> f64 {
        param_miss.abs() * self.y_length / self.period
    }
}

/// Outcome of one shot at a given entry angle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shot {
    pub angle: f64,
    /// Exit parameter minus the parameter of `y`: unwrapped on bands,
    /// wrapped to half a period on disks. `None` when the shot is trapped,
    /// fails, or exits on another component.
    pub miss: Option<f64>,
    pub length: f64,
}

pub(crate) fn entry(surface: &Surface, ends: &Endpoints, angle: f64) -> Result<UnitTangent> {
    let mut st = surface.entry_state(ends.x, angle)?;
    if ends.band {
        let p = surface.curve(ends.x.component)?.u_period;
        st.base.y = st.base.y.rem_euclid(p);
    }
    Ok(st)
}

pub(crate) fn shoot(
    surface: &Surface,
    ends: &Endpoints,
    angle: f64,
    t_max: f64,
    flow: &FlowOptions,
) -> Shot {
    let run = || -> Result<Option<(f64, f64)>> {
        let st = entry(surface, ends, angle)?;
        let path = integrate(surface, &st, t_max, flow)?;
        if !path.exited {
            return Ok(None);
        }
        let (c, u) = surface.locate(&path.end.base);
        if c != ends.y_component {
            return Ok(None);
        }
        let miss = if ends.band {
            u - ends.y_param
        } else {
            let d = (u - ends.y_param).rem_euclid(ends.period);
            if d > 0.5 * ends.period {
                d - ends.period
            } else {
                d
            }
        };
        Ok(Some((miss, path.length)))
    };
    match run() {
        Ok(Some((miss, length))) => Shot {
            angle,
            miss: Some(miss),
            length,
        },
        _ => Shot {
            angle,
            miss: None,
            length: f64::NAN,
        },
    }
}

/// Angle scan with refinement; shots are sorted by angle.
pub(crate) struct Scan {
    pub shots: Vec<Shot>,
}

impl Scan {
    pub fn run(surface: &Surface, ends: &Endpoints, opts: &DistanceOptions) -> Self {
        let n = opts.scan.max(8);
        let margin = 1e-9;
        let angles: Vec<f64> = (0..n)
            .map(|i| {
                -FRAC_PI_2
                    + margin
                    + (std::f64::consts::PI - 2.0 * margin) * i as f64 / (n - 1) as f64
            })
            .collect();
        let mut shots: Vec<Shot> = crate::par::map(opts.exec, &angles, |_, &a| {
            shoot(surface, ends, a, opts.t_max, &opts.flow)
        });
        let jump = 0.5 * ends.period;
        let mut extra = Vec::new();
        for w in shots.windows(2) {
            let (a, b) = (w[0], w[1]);
            match (a.miss, b.miss) {
                // creep toward the trapped direction; windings grow there
                (Some(_), None) | (None, Some(_)) => {
                    let (mut good, mut bad) = if a.miss.is_some() {
                        (a.angle, b.angle)
                    } else {
                        (b.angle, a.angle)
                    };
                    for _ in 0..opts.refine_depth {
                        let mid = 0.5 * (good + bad);
                        if mid == good || mid == bad {
                            break;
                        }
                        let s = shoot(surface, ends, mid, opts.t_max, &opts.flow);
                        if s.miss.is_some() {
                            good = mid;
                        } else {
                            bad = mid;
                        }
                        extra.push(s);
                    }
                }
                (Some(ma), Some(mb)) if ends.band && (ma - mb).abs() > jump => {
                    let (mut lo, mut hi) = (a, b);
                    for _ in 0..opts.refine_depth {
                        let mid = 0.5 * (lo.angle + hi.angle);
                        let s = shoot(surface, ends, mid, opts.t_max, &opts.flow);
                        extra.push(s);
                        match s.miss {
                            Some(m) if (m - lo.miss.unwrap()).abs() > jump => hi = s,
                            Some(_) => lo = s,
                            None => break,
                        }
                        if (hi.miss.unwrap() - lo.miss.unwrap()).abs() <= jump {
                            break;
                        }
                    }
                }
                _ => {}
            }
        }
        shots.extend(extra);
        shots.sort_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap());
        shots.dedup_by(|a, b| a.angle == b.angle);
        Self { shots }
    }

    /// Angle brackets in which the miss crosses `level`.
    pub fn brackets(&self, level: f64, ends: &Endpoints) -> Vec<(Shot, Shot)> {
        let mut out = Vec::new();
        for w in self.shots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if let (Some(ma), Some(mb)) = (a.miss, b.miss) {
                if !ends.band && (ma - mb).abs() > 0.25 * ends.period {
                    continue;
                }
                if (ma - level) * (mb - level) <= 0.0 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Smallest and largest class with at least one bracket.
    pub fn class_range(&self, ends: &Endpoints) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for w in self.shots.windows(2) {
            if let (Some(ma), Some(mb)) = (w[0].miss, w[1].miss) {
                if !ends.band {
                    if (ma - mb).abs() <= 0.25 * ends.period && ma * mb <= 0.0 {
                        lo = lo.min(0);
                        hi = hi.max(0);
                    }
                    continue;
                }
                let (a, b) = if ma < mb { (ma, mb) } else { (mb, ma) };
                let n0 = (a / ends.period).ceil() as i64;
                let n1 = (b / ends.period).floor() as i64;
                if n0 <= n1 {
                    lo = lo.min(n0);
                    hi = hi.max(n1);
                }
            }
        }
        (lo, hi)
    }
}

/// Illinois iteration on `miss(angle) - level` inside a bracket.
pub(crate) fn polish(
    surface: &Surface,
    ends: &Endpoints,
    bracket: (Shot, Shot),
    level: f64,
    opts: &DistanceOptions,
) -> Option<Shot> {
    let (mut a, mut b) = bracket;
    let mut fa = a.miss? - level;
    let mut fb = b.miss? - level;
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    for _ in 0..200 {
        let mut x = (a.angle * fb - b.angle * fa) / (fb - fa);
        if !(x > a.angle.min(b.angle) && x < a.angle.max(b.angle)) {
            x = 0.5 * (a.angle + b.angle);
        }
        let s = shoot(surface, ends, x, opts.t_max, &opts.flow);
        let fx = s.miss? - level;
        if ends.arc_miss(fx) <= opts.miss_tol || (b.angle - a.angle).abs() < 1e-15 {
            return Some(s);
        }
        if fx * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = s;
        fb = fx;
    }
    let best = if fa.abs() < fb.abs() { a } else { b };
    Some(best)
}
