//! Marked boundary distance: lengths of boundary-to-boundary geodesics in a
//! given homotopy class, plus comparison tools for lens data and boundary
//! jets of metrics.

mod lens;
mod multishoot;
mod pullback;
mod shoot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::metric::{BoundaryPoint, Surface};
use crate::par::{self, Execution};
use multishoot::{Chain, Shooter};
use shoot::{polish, Endpoints, Scan, Shot};

pub use lens::{jet_difference, lens_compare, LensComparison};
pub use pullback::{Diffeo, PullbackMetric};

/// Settings for geodesic boundary value problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub flow: FlowOptions,
    /// Number of entry angles in the initial scan.
    pub scan: usize,
    /// Geodesics longer than this count as trapped during the scan.
    pub t_max: f64,
    /// Accepted endpoint miss, in boundary arc length.
    pub miss_tol: f64,
    /// Bisections spent refining toward each trapped direction.
    pub refine_depth: usize,
    /// Target segment length for multiple shooting.
    pub segment: f64,
    /// Fixed integration steps per unit length for multiple shooting.
    pub steps_per_unit: f64,
    pub exec: Execution,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions::default(),
            scan: 2048,
            t_max: 60.0,
            miss_tol: 1e-10,
            refine_depth: 60,
            segment: 1.0,
            steps_per_unit: 64.0,
            exec: Execution::Parallel,
        }
    }
}

/// How a distance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Shooting,
    /// Continuation in the winding class with multiple shooting.
    MultipleShooting,
}

/// Length of the geodesic from `x` to `y` in one homotopy class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedDistance {
    pub class: i64,
    pub length: f64,
    /// Entry angle at `x`, from the inward normal.
    pub angle: f64,
    /// Endpoint miss in boundary arc length.
    pub residual: f64,
    pub method: Method,
}

/// Boundary value solver for a fixed pair of boundary points.
///
/// Classes on a disk: only `0`. On a band: the winding number of the
/// geodesic around the band, so that class `n` ends at chart angle
/// `theta(y) + n * period` when started from `theta(x)` in `[0, period)`.
pub struct DistanceSolver<'a> {
    surface: &'a Surface,
    ends: Endpoints,
    opts: DistanceOptions,
    scan: Scan,
}

impl<'a> DistanceSolver<'a> {
    pub fn new(
        surface: &'a Surface,
        x: BoundaryPoint,
        y: BoundaryPoint,
        opts: &DistanceOptions,
    ) -> Result<Self> {
        let ends = Endpoints::new(surface, x, y)?;
        let scan = Scan::run(surface, &ends, opts);
        Ok(Self {
            surface,
            ends,
            opts: *opts,
            scan,
        })
    }

    fn level(&self, class: i64) -> f64 {
        class as f64 * self.ends.period
    }

    /// Classes bracketed by the angle scan.
    pub fn resolved_classes(&self) -> (i64, i64) {
        self.scan.class_range(&self.ends)
    }

    fn shooting(&self, class: i64) -> Option<MarkedDistance> {
        if !self.ends.band && class != 0 {
            return None;
        }
        let level = self.level(class);
        self.scan
            .brackets(level, &self.ends)
            .into_iter()
            .filter_map(|b| polish(self.surface, &self.ends, b, level, &self.opts))
            .filter_map(|s: Shot| {
                let residual = self.ends.arc_miss(s.miss? - level);
                (residual <= 10.0 * self.opts.miss_tol).then_some(MarkedDistance {
                    class,
                    length: s.length,
                    angle: s.angle,
                    residual,
                    method: Method::Shooting,
                })
            })
            .min_by(|a, b| a.length.partial_cmp(&b.length).unwrap())
    }

    fn shooter(&self) -> Shooter<'_> {
        Shooter {
            surface: self.surface,
            ends: self.ends,
            segment: self.opts.segment,
            steps_per_unit: self.opts.steps_per_unit,
        }
    }

    fn target(&self, class: i64) -> Result<(f64, f64)> {
        let p = self
            .surface
            .curve(self.ends.y_component)?
            .point(self.ends.y_param);
        Ok((p.x, p.y + self.level(class)))
    }

    fn no_bracket(&self, class: i64) -> Error {
        let (lo, hi) = self.resolved_classes();
        Error::NoBracket {
            class: class.to_string(),
            min_winding: lo,
            max_winding: hi,
        }
    }

    fn from_chain(&self, class: i64, c: &Chain) -> MarkedDistance {
        MarkedDistance {
            class,
            length: c.length,
            angle: c.angle,
            residual: c.residual,
            method: Method::MultipleShooting,
        }
    }

    /// Solves for one class, continuing from the nearest class that single
    /// shooting resolves when necessary.
    pub fn solve(&self, class: i64) -> Result<MarkedDistance> {
        if let Some(d) = self.shooting(class) {
            return Ok(d);
        }
        if !self.ends.band || class == 0 {
            return Err(self.no_bracket(class));
        }
        let sign = class.signum();
        let mut m = class - sign;
        let base = loop {
            if m == 0 || m.signum() != sign {
                return Err(self.no_bracket(class));
            }
            if let Some(d) = self.shooting(m) {
                break d;
            }
            m -= sign;
        };
        let sh = self.shooter();
        let mut chain = sh.from_shot(base.angle, base.length, self.target(m)?)?;
        while m != class {
            chain = sh.add_loop(&chain, sign as f64)?;
            m += sign;
        }
        Ok(self.from_chain(class, &chain))
    }

    /// Solves classes `1..=n_max` (or `-1..=n_max` downward when `n_max` is
    /// negative), reusing each continuation step for the next class.
    pub fn sweep(&self, n_max: i64) -> Vec<Result<MarkedDistance>> {
        let sign = if n_max < 0 { -1 } else { 1 };
        let sh = self.shooter();
        let mut out = Vec::new();
        let mut chain: Option<Chain> = None;
        let mut last_shot: Option<MarkedDistance> = None;
        for k in 1..=n_max.abs() {
            let class = sign * k;
            if chain.is_none() {
                if let Some(d) = self.shooting(class) {
                    last_shot = Some(d);
                    out.push(Ok(d));
                    continue;
                }
            }
            let next = match (chain.take(), last_shot) {
                (Some(c), _) => sh.add_loop(&c, sign as f64),
                (None, Some(b)) => self
                    .target(b.class)
                    .and_then(|t| sh.from_shot(b.angle, b.length, t))
                    .and_then(|c| sh.add_loop(&c, sign as f64)),
                (None, None) => Err(self.no_bracket(class)),
            };
            match next {
                Ok(c) => {
                    out.push(Ok(self.from_chain(class, &c)));
                    chain = Some(c);
                }
                Err(e) => out.push(Err(e)),
            }
        }
        out
    }
}

/// Marked boundary distance between `x` and `y` in `class`.
pub fn marked_distance(
    surface: &Surface,
    x: BoundaryPoint,
    y: BoundaryPoint,
    class: i64,
    opts: &DistanceOptions,
) -> Result<MarkedDistance> {
    DistanceSolver::new(surface, x, y, opts)?.solve(class)
}

/// Distances in classes `1..=n_max` between `x` and `y`.
pub fn winding_sweep(
    surface: &Surface,
    x: BoundaryPoint,
    y: BoundaryPoint,
    n_max: i64,
    opts: &DistanceOptions,
) -> Result<Vec<Result<MarkedDistance>>> {
    Ok(DistanceSolver::new(surface, x, y, opts)?.sweep(n_max))
}

/// One row of a distance table.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    pub x: BoundaryPoint,
    pub y: BoundaryPoint,
    pub class: i64,
    pub result: Result<MarkedDistance>,
}

/// Distances for every pair and class; pairs are processed in parallel
/// according to `opts.exec` and each pair's scan runs sequentially.
pub fn distance_table(
    surface: &Surface,
    pairs: &[(BoundaryPoint, BoundaryPoint)],
    classes: &[i64],
    opts: &DistanceOptions,
) -> Vec<DistanceRow> {
    let inner = DistanceOptions {
        exec: Execution::Sequential,
        ..*opts
    };
    par::map(opts.exec, pairs, |_, &(x, y)| {
        match DistanceSolver::new(surface, x, y, &inner) {
            Ok(s) => classes
                .iter()
                .map(|&class| DistanceRow {
                    x,
                    y,
                    class,
                    result: s.solve(class),
                })
                .collect::<Vec<_>>(),
            Err(e) => classes
                .iter()
                .map(|&class| DistanceRow {
                    x,
                    y,
                    class,
                    result: Err(e.clone()),
                })
                .collect(),
        }
    })
    .into_iter()
    .flatten()
    .collect()
}
