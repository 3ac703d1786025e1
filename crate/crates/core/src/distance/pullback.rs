//! Metrics pulled back by a chart diffeomorphism.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::metric::{Christoffel, Metric, Point, Tensor};

/// A map of the chart given by two closed-form component expressions in
/// `x` and `y`.
#[derive(Debug, Clone)]
pub struct Diffeo {
    fx: Expr,
    fy: Expr,
}

impl Diffeo {
    pub fn parse(fx: &str, fy: &str) -> Result<Self> {
        Ok(Self {
            fx: Expr::parse(fx, &["x", "y"])?,
            fy: Expr::parse(fy, &["x", "y"])?,
        })
    }

    /// Rotation about the origin by `amplitude * (1 - r^2)^2`; the identity
    /// to first order on the unit circle.
    pub fn twist(amplitude: f64) -> Self {
        let a = format!("({amplitude:e}) * (1 - x^2 - y^2)^2");
        Self::parse(
            &format!("x * cos({a}) - y * sin({a})"),
            &format!("x * sin({a}) + y * cos({a})"),
        )
        .expect("twist expressions are well formed")
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(self.fx.eval(&[p.x, p.y]), self.fy.eval(&[p.x, p.y]))
    }

    fn along<const N: usize>(&self, p: &Point, a: f64, b: f64) -> [Jet<N>; 2] {
        let args = [Jet::<N>::line(p.x, a), Jet::<N>::line(p.y, b)];
        [self.fx.eval_jet(&args), self.fy.eval_jet(&args)]
    }

    /// Jacobian matrix with rows `(d phi^a / dx, d phi^a / dy)`.
    pub fn jacobian(&self, p: &Point) -> Matrix2<f64> {
        let dx = self.along::<2>(p, 1.0, 0.0);
        let dy = self.along::<2>(p, 0.0, 1.0);
        Matrix2::new(
            dx[0].derivative(1),
            dy[0].derivative(1),
            dx[1].derivative(1),
            dy[1].derivative(1),
        )
    }

    /// Second partials `hess[a]` of each component.
    fn hessians(&self, p: &Point) -> [Matrix2<f64>; 2] {
        let xx = self.along::<3>(p, 1.0, 0.0);
        let yy = self.along::<3>(p, 0.0, 1.0);
        let dd = self.along::<3>(p, 1.0, 1.0);
        let mut out = [Matrix2::zeros(); 2];
        for a in 0..2 {
            let fxx = xx[a].derivative(2);
            let fyy = yy[a].derivative(2);
            let fxy = 0.5 * (dd[a].derivative(2) - fxx - fyy);
            out[a] = Matrix2::new(fxx, fxy, fxy, fyy);
        }
        out
    }
}

/// `phi^* g` for a base metric `g` and chart map `phi`.
#[derive(Debug, Clone)]
pub struct PullbackMetric {
    base: Arc<dyn Metric>,
    map: Diffeo,
}

impl PullbackMetric {
    pub fn new(base: Arc<dyn Metric>, map: Diffeo) -> Self {
        Self { base, map }
    }

    fn checked_jacobian(&self, p: &Point) -> Result<Matrix2<f64>> {
        let j = self.map.jacobian(p);
        let det = j.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::SingularJacobian(p.x, p.y));
        }
        Ok(j)
    }
}

impl Metric for PullbackMetric {
    fn tensor(&self, p: &Point) -> Result<Tensor> {
        let j = self.checked_jacobian(p)?;
        let g = self.base.tensor(&self.map.apply(p))?;
        Ok(j.transpose() * g * j)
    }

    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let j = self.checked_jacobian(p)?;
        let inv = j.try_inverse().ok_or(Error::SingularJacobian(p.x, p.y))?;
        let base = self.base.christoffel(&self.map.apply(p))?;
        let hess = self.map.hessians(p);
        let mut out = Christoffel::default();
        for i in 0..2 {
            for k in 0..2 {
                // image-chart components of nabla_{d_i} d_k
                let mut w = [0.0; 2];
                for (a, wa) in w.iter_mut().enumerate() {
                    let mut s = hess[a][(i, k)];
                    for b in 0..2 {
                        for c in 0..2 {
                            s += base.gamma[a][b][c] * j[(b, i)] * j[(c, k)];
                        }
                    }
                    *wa = s;
                }
                for l in 0..2 {
                    out.gamma[l][i][k] = inv[(l, 0)] * w[0] + inv[(l, 1)] * w[1];
                }
            }
        }
        Ok(out)
    }

    fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        self.checked_jacobian(p)?;
        self.base.gauss_curvature(&self.map.apply(p))
    }

    fn is_euclidean(&self) -> bool {
        false
    }
}
