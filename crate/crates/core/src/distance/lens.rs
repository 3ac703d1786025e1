//! Comparing the scattering data and boundary jets of two metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{lens_data, FlowOptions, LensSample, Outcome};
use crate::metric::{Metric, Point, Surface};
use crate::par::Execution;
use crate::profile::MAX_ORDER;

/// Boundary points per component used to check that two metrics agree on
/// the boundary.
const BOUNDARY_CHECKS: usize = 64;

fn boundary_points(surface: &Surface, per_component: usize) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for c in 0..surface.components() {
        let curve = surface.curve(c)?;
        for i in 0..per_component {
            out.push(curve.point(curve.u_period * i as f64 / per_component as f64));
        }
    }
    Ok(out)
}

/// Largest discrepancies between the lens data of two surfaces over a
/// common set of boundary entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensComparison {
    pub samples: usize,
    /// Sup of exit arc-length differences (wrapped to the boundary).
    pub exit_position: f64,
    pub exit_angle: f64,
    pub travel_time: f64,
    /// Entries exiting on different components, trapped in only one of
    /// the two, or failing in either.
    pub outcome_mismatches: usize,
    pub winding_mismatches: usize,
}

impl LensComparison {
    pub fn sup(&self) -> f64 {
        self.exit_position
            .max(self.exit_angle)
            .max(self.travel_time)
    }
}

/// Compares lens data of two surfaces over the same domain. The metrics must
/// agree on the boundary to within `1e-9`, otherwise the boundary
/// parametrizations differ and the comparison is meaningless.
pub fn lens_compare(
    a: &Surface,
    b: &Surface,
    samples: &[LensSample],
    t_max: f64,
    opts: &FlowOptions,
    exec: Execution,
) -> Result<LensComparison> {
    if a.domain() != b.domain() {
        return Err(Error::InvalidArgument(
            "surfaces have different domains".into(),
        ));
    }
    let mut worst = 0.0f64;
    for p in boundary_points(a, BOUNDARY_CHECKS)? {
        let d = (a.metric().tensor(&p)? - b.metric().tensor(&p)?)
            .abs()
            .max();
        worst = worst.max(d);
    }
    if worst > 1e-9 {
        return Err(Error::BoundaryMismatch(worst));
    }
    let ra = lens_data(a, samples, t_max, opts, exec);
    let rb = lens_data(b, samples, t_max, opts, exec);
    let mut out = LensComparison {
        samples: samples.len(),
        exit_position: 0.0,
        exit_angle: 0.0,
        travel_time: 0.0,
        outcome_mismatches: 0,
        winding_mismatches: 0,
    };
    for (x, y) in ra.iter().zip(&rb) {
        let (x, y) = match (x, y) {
            (Ok(x), Ok(y)) => (x, y),
            _ => {
                out.outcome_mismatches += 1;
                continue;
            }
        };
        if x.winding != y.winding {
            out.winding_mismatches += 1;
        }
        match (x.outcome, y.outcome) {
            (Outcome::Exit { at: p, .. }, Outcome::Exit { at: q, .. })
                if p.component == q.component =>
            {
                let len = a.curve(p.component)?.length;
                let d = (p.s - q.s).rem_euclid(len);
                out.exit_position = out.exit_position.max(d.min(len - d));
                out.exit_angle = out.exit_angle.max((p.angle - q.angle).abs());
                out.travel_time = out.travel_time.max((x.time - y.time).abs());
            }
            (Outcome::Trapped { .. }, Outcome::Trapped { .. }) => {}
            _ => out.outcome_mismatches += 1,
        }
    }
    Ok(out)
}

/// Sup over boundary points of the normal derivatives of order
/// `0..=order` of `a - b`, measured componentwise (max norm) along the
/// inward normal of `surface`.
pub fn jet_difference(
    surface: &Surface,
    a: &dyn Metric,
    b: &dyn Metric,
    order: usize,
    per_component: usize,
) -> Result<Vec<f64>> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            requested: order,
            max: MAX_ORDER,
        });
    }
    let mut out = vec![0.0f64; order + 1];
    for p in boundary_points(surface, per_component)? {
        let dir = -surface.outward_normal(&p)?;
        let ja = a.tensor_line_jet(&p, &dir, order)?;
        let jb = b.tensor_line_jet(&p, &dir, order)?;
        for k in 0..=order {
            out[k] = out[k].max((ja[k] - jb[k]).abs().max());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CartesianMetric, WarpedMetric};
    use crate::profile::ExprProfile;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn band(profile: &str) -> WarpedMetric {
        WarpedMetric::new(
            Arc::new(ExprProfile::parse(profile).unwrap()),
            -1.0,
            1.0,
            TAU,
        )
        .unwrap()
    }

    #[test]
    fn jets_agree_to_the_order_of_the_perturbation() {
        let s = Surface::warped(band("cosh(t)")).unwrap();
        for k in 1..4 {
            let g2 = band(&format!("cosh(t) * (1 + 0.5 * (1 - t^2)^{})", k + 1));
            let d = jet_difference(&s, s.metric(), &g2, k + 1, 8).unwrap();
            for (j, v) in d.iter().enumerate().take(k + 1) {
                assert!(*v < 1e-9, "order {j} of perturbation {k}: {v}");
            }
            assert!(d[k + 1] > 1e-3, "{d:?}");
        }
        assert!(matches!(
            jet_difference(&s, s.metric(), s.metric(), 9, 4),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn different_boundary_metrics_are_rejected() {
        let a = Surface::disk(Arc::new(CartesianMetric::euclidean()), 1.0).unwrap();
        let b = Surface::disk(
            Arc::new(CartesianMetric::conformal("0.1 * x").unwrap()),
            1.0,
        )
        .unwrap();
        let r = lens_compare(
            &a,
            &b,
            &[LensSample::new(0, 0.0, 0.1)],
            5.0,
            &FlowOptions::default(),
            Execution::Sequential,
        );
        assert!(matches!(r, Err(Error::BoundaryMismatch(_))));
    }
}
