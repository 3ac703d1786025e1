//! Covariant `C^m` norms from derivatives along geodesics.
//!
//! `nabla^j f(x)(X, ..., X)` equals the `j`-th derivative of `f` along the
//! unit-speed geodesic through `x` with velocity `X`; the norms below take the
//! supremum of its modulus over sampled points and [`DIRECTIONS`] unit directions.

use std::f64::consts::TAU;

use super::grid::{Differ, GridField, GridMetric};
use super::{orthonormal_frame, Metric, Point, Vector};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::profile::MAX_ORDER;

/// Number of unit directions sampled per point.
pub const DIRECTIONS: usize = 64;

/// A scalar function on a chart with the points where its norm is sampled.
pub trait ScalarField: Send + Sync {
    fn value(&self, p: &Point) -> f64;

    /// `d^k/ds^k f(p + s dir)` at `s = 0` for `k = 0..=order`, when exact
    /// derivatives are available.
    fn line_derivatives(&self, _p: &Point, _dir: &Vector, _order: usize) -> Option<Vec<f64>> {
        None
    }

    fn sample_points(&self) -> Vec<Point>;

    /// Typical length over which the field varies; sets finite-difference steps.
    fn length_scale(&self) -> f64 {
        1.0
    }
}

/// Closed-form field in `x, y` sampled on an explicit point list.
#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expr,
    points: Vec<Point>,
}

impl ExprField {
    pub fn new(expr: Expr, points: Vec<Point>) -> Result<Self> {
        if expr.num_vars() != 2 {
            return Err(Error::Expression(
                "fields take the variables x and y".into(),
            ));
        }
        Ok(Self { expr, points })
    }

    pub fn parse(source: &str, points: Vec<Point>) -> Result<Self> {
        Self::new(Expr::parse(source, &["x", "y"])?, points)
    }

    /// Points of a polar grid on the disk of radius `radius`.
    pub fn disk_points(radius: f64, rings: usize, per_ring: usize) -> Vec<Point> {
        let mut pts = vec![Point::zeros()];
        for i in 1..=rings {
            let r = radius * i as f64 / rings as f64;
            for j in 0..per_ring {
                let a = TAU * j as f64 / per_ring as f64;
                pts.push(Point::new(r * a.cos(), r * a.sin()));
            }
        }
        pts
    }
}

impl ScalarField for ExprField {
    fn value(&self, p: &Point) -> f64 {
        self.expr.eval(&[p.x, p.y])
    }

    fn line_derivatives(&self, p: &Point, dir: &Vector, order: usize) -> Option<Vec<f64>> {
        if order > MAX_ORDER {
            return None;
        }
        let j = self
            .expr
            .eval_jet::<{ MAX_ORDER + 1 }>(&[Jet::line(p.x, dir.x), Jet::line(p.y, dir.y)]);
        Some(j.derivatives()[..=order].to_vec())
    }

    fn sample_points(&self) -> Vec<Point> {
        self.points.clone()
    }
}

/// Finite-difference weights for derivatives `0..=order` at `0` from values
/// at the nodes `xs` (Fornberg's recursion).
pub fn fornberg_weights(xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Positions along the geodesic from `(p, dir)` at arc lengths `k * h`,
/// `k = -q..=q`, by classical Runge-Kutta with `sub` substeps per node.
fn geodesic_samples(
    metric: &dyn Metric,
    p: &Point,
    dir: &Vector,
    h: f64,
    q: usize,
) -> Result<Vec<Point>> {
    let sub = 16;
    let rhs = |y: &[f64; 4]| -> Result<[f64; 4]> {
        let x = Point::new(y[0], y[1]);
        let v = Vector::new(y[2], y[3]);
        let a = metric.christoffel(&x)?.contract(&v, &v);
        Ok([y[2], y[3], -a.x, -a.y])
    };
    let mut out = vec![*p; 2 * q + 1];
    for sign in [-1.0, 1.0] {
        let mut y = [p.x, p.y, sign * dir.x, sign * dir.y];
        let dt = h / sub as f64;
        for k in 1..=q {
            for _ in 0..sub {
                let k1 = rhs(&y)?;
                let add = |a: &[f64; 4], b: &[f64; 4], s: f64| {
                    let mut r = *a;
                    for i in 0..4 {
                        r[i] += s * b[i];
                    }
                    r
                };
                let k2 = rhs(&add(&y, &k1, 0.5 * dt))?;
                let k3 = rhs(&add(&y, &k2, 0.5 * dt))?;
                let k4 = rhs(&add(&y, &k3, dt))?;
                for i in 0..4 {
                    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            let idx = if sign > 0.0 { q + k } else { q - k };
            out[idx] = Point::new(y[0], y[1]);
        }
    }
    Ok(out)
}

/// Suprema of `|nabla^j f (X, ..., X)|` over sample points and unit
/// directions, for `j = 0..=m`.
pub fn cm_seminorms(field: &dyn ScalarField, m: usize, metric: &dyn Metric) -> Result<Vec<f64>> {
    if m > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            requested: m,
            max: MAX_ORDER,
        });
    }
    let mut sup = vec![0.0f64; m + 1];
    let exact = metric.is_euclidean();
    let q = m / 2 + 2;
    let h = 0.02 * field.length_scale();
    let nodes: Vec<f64> = (0..=2 * q).map(|k| (k as f64 - q as f64) * h).collect();
    let weights = fornberg_weights(&nodes, m);
    for p in field.sample_points() {
        let (e1, e2) = orthonormal_frame(&metric.tensor(&p)?);
        sup[0] = sup[0].max(field.value(&p).abs());
        for d in 0..DIRECTIONS {
            let a = TAU * d as f64 / DIRECTIONS as f64;
            let x = e1 * a.cos() + e2 * a.sin();
            let ders = match (exact, field.line_derivatives(&p, &x, m)) {
                (true, Some(v)) => v,
                _ => {
                    let pts = geodesic_samples(metric, &p, &x, h, q)?;
                    let vals: Vec<f64> = pts.iter().map(|y| field.value(y)).collect();
                    (0..=m)
                        .map(|j| weights[j].iter().zip(&vals).map(|(w, v)| w * v).sum())
                        .collect()
                }
            };
            for j in 1..=m {
                sup[j] = sup[j].max(ders[j].abs());
            }
        }
    }
    Ok(sup)
}

/// `max_j sup |nabla^j f|` for `j <= m`.
pub fn cm_norm(field: &dyn ScalarField, m: usize, metric: &dyn Metric) -> Result<f64> {
    Ok(cm_seminorms(field, m, metric)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Grid version of [`cm_seminorms`] for `m <= 2`, with derivatives from
/// finite differences and the covariant Hessian `f_ij - Gamma^k_ij f_k`.
pub fn grid_cm_seminorms(metric: &GridMetric, f: &GridField, m: usize) -> Result<Vec<f64>> {
    if m > 2 {
        return Err(Error::OrderTooHigh {
            requested: m,
            max: 2,
        });
    }
    let c = &metric.chart;
    let d = Differ::new(c);
    let fv = |n: usize| f.values[n];
    let mut sup = vec![0.0f64; m + 1];
    for k in 0..c.stored_len() {
        sup[0] = sup[0].max(f.values[k].abs());
        if m == 0 {
            continue;
        }
        let (fu, fuu) = d.d12(&fv, 0, k);
        let (fw, fww) = d.d12(&fv, 1, k);
        let grad = [fu, fw];
        let mut hess = [[0.0; 2]; 2];
        if m >= 2 {
            let fuw = d.mixed(&fv, k);
            let gam = metric.christoffel(k)?;
            let raw = [[fuu, fuw], [fuw, fww]];
            for a in 0..2 {
                for b in 0..2 {
                    hess[a][b] =
                        raw[a][b] - gam.gamma[0][a][b] * grad[0] - gam.gamma[1][a][b] * grad[1];
                }
            }
        }
        let (e1, e2) = orthonormal_frame(&metric.tensors[k]);
        for dd in 0..DIRECTIONS {
            let a = TAU * dd as f64 / DIRECTIONS as f64;
            let x = e1 * a.cos() + e2 * a.sin();
            sup[1] = sup[1].max((grad[0] * x.x + grad[1] * x.y).abs());
            if m >= 2 {
                let h =
                    hess[0][0] * x.x * x.x + 2.0 * hess[0][1] * x.x * x.y + hess[1][1] * x.y * x.y;
                sup[2] = sup[2].max(h.abs());
            }
        }
    }
    Ok(sup)
}

pub fn grid_cm_norm(metric: &GridMetric, f: &GridField, m: usize) -> Result<f64> {
    Ok(grid_cm_seminorms(metric, f, m)?
        .into_iter()
        .fold(0.0, f64::max))
}
