//! Newton iteration for a conformal factor with prescribed scalar curvature.

use super::operator::{lpsc_test, DirichletOperator};
use crate::error::{Error, Result};
use crate::linalg::{BandLu, Csr};
use crate::metric::{conformal_scalar_curvature, GridField, GridMetric};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribeOptions {
    /// Stop when the sup of the curvature residual over interior nodes is
    /// at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Minimal modulus of the operator's eigenvalues required before
    /// starting.
    pub gap_tol: f64,
    pub dimension: usize,
    pub exec: Execution,
}

impl Default for PrescribeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20,
            gap_tol: 1e-6,
            dimension: 2,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prescription {
    /// Conformal factor, zero on the boundary.
    pub f: GridField,
    /// The metric `exp(2f) g`.
    pub metric: GridMetric,
    /// Residual sup norms, starting with the initial one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// The first Newton update.
    pub first_step: GridField,
}

/// Residual `s(exp(2f) g) - (s + h)` on interior nodes (zero elsewhere).
pub fn curvature_residual(
    metric: &GridMetric,
    f: &GridField,
    h: &GridField,
    n: usize,
) -> Result<GridField> {
    let s = GridField {
        values: metric.scalar_curvature.clone(),
    };
    let mut r = conformal_scalar_curvature(metric, &s, f, n)?;
    for (k, v) in r.values.iter_mut().enumerate() {
        *v = if metric.boundary_mask[k] {
            0.0
        } else {
            *v - s.values[k] - h.values[k]
        };
    }
    Ok(r)
}

/// Linearization of the residual at `f` on interior unknowns:
/// `-2 exp(-2f) ((n - 1) Laplacian + q)` with `q` the curvature numerator.
/// The gradient coupling that appears for `n > 2` is left out, which keeps
/// the iteration convergent but only linearly in that case.
fn jacobian(metric: &GridMetric, f: &GridField, n: usize) -> Csr {
    let chart = &metric.chart;
    let c = (n - 1) as f64;
    let lap = metric.laplacian(f);
    let grad2 = metric.gradient_norm2(f);
    let nu = chart.unknowns();
    let mut t = Vec::with_capacity(9 * nu);
    for p in 0..nu {
        let k = chart.unknown_to_stored(p);
        let e = -2.0 * (-2.0 * f.values[k]).exp();
        let q = metric.scalar_curvature[k]
            - 2.0 * c * lap.values[k]
            - (n as f64 - 2.0) * c * grad2.values[k];
        let w = metric.weight(k);
        t.push((p, p, e * q));
        for (nb, s) in metric.stencil(k) {
            if let Some(qn) = chart.stored_to_unknown(nb) {
                t.push((p, qn, e * c * s / w));
            }
        }
    }
    Csr::from_triplets(nu, t)
}

/// Finds `f`, zero on the boundary, with `s(exp(2f) g) = s(g) + h` at interior
/// nodes. The operator must pass the kernel test first.
pub fn prescribe(
    metric: &GridMetric,
    h: &GridField,
    opts: &PrescribeOptions,
) -> Result<Prescription> {
    let n = opts.dimension;
    let chart = &metric.chart;
    if h.values.len() != chart.stored_len() {
        return Err(Error::InvalidArgument(
            "curvature change has the wrong length".into(),
        ));
    }
    let op = DirichletOperator::assemble(metric, n)?.with_execution(opts.exec);
    let verdict = lpsc_test(&op, opts.gap_tol)?;
    if !verdict.lpsc {
        return Err(Error::NotLpsc(verdict.eigenvalue));
    }
    let mut f = GridField::zeros(chart);
    let mut r = curvature_residual(metric, &f, h, n)?;
    let mut norm = r.sup();
    let mut trace = vec![norm];
    let mut first_step = GridField::zeros(chart);
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonDivergence(trace));
        }
        iterations += 1;
        let lu = BandLu::factor(&jacobian(metric, &f, n), opts.exec)?;
        let mut dx: Vec<f64> = r.interior(chart).iter().map(|v| -v).collect();
        lu.solve_in_place(&mut dx);
        let step = GridField::from_interior(chart, &dx);
        if iterations == 1 {
            first_step = step.clone();
        }
        let mut t = 1.0;
        loop {
            let trial = GridField {
                values: f
                    .values
                    .iter()
                    .zip(&step.values)
                    .map(|(a, b)| a + t * b)
                    .collect(),
            };
            let rt = curvature_residual(metric, &trial, h, n)?;
            let nt = rt.sup();
            if nt < norm {
                f = trial;
                r = rt;
                norm = nt;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                trace.push(nt);
                return Err(Error::NewtonDivergence(trace));
            }
        }
        trace.push(norm);
    }
    Ok(Prescription {
        metric: metric.conformal(&f)?,
        f,
        trace,
        iterations,
        first_step,
    })
}
