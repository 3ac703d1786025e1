//! Riemannian metrics on two-dimensional charts and their pointwise geometry.

mod cartesian;
pub mod conformal;
pub mod grid;
pub mod norms;
pub mod surface;
mod warped;

use std::fmt;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub use cartesian::CartesianMetric;
pub use conformal::conformal_scalar_curvature;
pub use grid::{Axis, AxisKind, Chart, GridField, GridMetric};
pub use norms::{cm_norm, cm_seminorms, grid_cm_norm, grid_cm_seminorms, ExprField, ScalarField};
pub use surface::{
    boundary_second_fundamental_form, BoundaryCurve, BoundaryPoint, Domain, Surface, UnitTangent,
};
pub use warped::WarpedMetric;

pub type Point = Vector2<f64>;
pub type Vector = Vector2<f64>;
/// Symmetric 2x2 metric tensor in chart coordinates.
pub type Tensor = Matrix2<f64>;

/// Christoffel symbols, `gamma[k][i][j] = Γ^k_ij`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    /// Levi-Civita symbols from the metric and its two coordinate partials.
    pub fn from_partials(g: &Tensor, dg: &[Tensor; 2]) -> Result<Self> {
        let inv = g
            .try_inverse()
            .ok_or(Error::DegenerateMetric(f64::NAN, f64::NAN))?;
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut s = 0.0;
                    for l in 0..2 {
                        s += inv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    gamma[k][i][j] = 0.5 * s;
                    gamma[k][j][i] = 0.5 * s;
                }
            }
        }
        Ok(Self { gamma })
    }

    /// `Γ^k_ij a^i b^j`.
    pub fn contract(&self, a: &Vector, b: &Vector) -> Vector {
        let mut out = Vector::zeros();
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += self.gamma[k][i][j] * a[i] * b[j];
                }
            }
            out[k] = s;
        }
        out
    }
}

/// A smooth metric on a two-dimensional chart.
pub trait Metric: Send + Sync + fmt::Debug {
    /// Components `g_ij` at `p`.
    fn tensor(&self, p: &Point) -> Result<Tensor>;

    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let g = self.tensor(p)?;
        let dg = fd_partials(self, p)?;
        Christoffel::from_partials(&g, &dg).map_err(|_| Error::DegenerateMetric(p.x, p.y))
    }

    /// Gaussian curvature `K = s_g / 2`.
    fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        fd_gauss_curvature(self, p)
    }

    fn scalar_curvature(&self, p: &Point) -> Result<f64> {
        Ok(2.0 * self.gauss_curvature(p)?)
    }

    /// Taylor derivatives `d^k/ds^k g(p + s dir)` for `k = 0..=order`.
    fn tensor_line_jet(&self, _p: &Point, _dir: &Vector, _order: usize) -> Result<Vec<Tensor>> {
        Err(Error::Unsupported(
            "this metric does not expose exact jets along lines".into(),
        ))
    }

    /// True when the chart is Euclidean, so geodesics are coordinate lines.
    fn is_euclidean(&self) -> bool {
        false
    }

    fn inner(&self, p: &Point, a: &Vector, b: &Vector) -> Result<f64> {
        Ok((a.transpose() * self.tensor(p)? * b)[(0, 0)])
    }

    fn norm(&self, p: &Point, v: &Vector) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }
}

impl<M: Metric + ?Sized> Metric for std::sync::Arc<M> {
    fn tensor(&self, p: &Point) -> Result<Tensor> {
        (**self).tensor(p)
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        (**self).christoffel(p)
    }
    fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        (**self).gauss_curvature(p)
    }
    fn scalar_curvature(&self, p: &Point) -> Result<f64> {
        (**self).scalar_curvature(p)
    }
    fn tensor_line_jet(&self, p: &Point, dir: &Vector, order: usize) -> Result<Vec<Tensor>> {
        (**self).tensor_line_jet(p, dir, order)
    }
    fn is_euclidean(&self) -> bool {
        (**self).is_euclidean()
    }
}

/// Checks symmetric positive definiteness of a tensor.
pub fn is_spd(g: &Tensor) -> bool {
    g[(0, 0)] > 0.0 && g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)] > 0.0
}

const FD_STEP: f64 = 1e-3;

fn fd4<F: Fn(f64) -> Result<Tensor>>(f: F, h: f64) -> Result<Tensor> {
    Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h))
}

/// Fourth-order central differences of `g` in both coordinates.
pub fn fd_partials<M: Metric + ?Sized>(m: &M, p: &Point) -> Result<[Tensor; 2]> {
    let h = FD_STEP * (1.0 + p.norm());
    let dx = fd4(|s| m.tensor(&(p + Vector::new(s, 0.0))), h)?;
    let dy = fd4(|s| m.tensor(&(p + Vector::new(0.0, s))), h)?;
    Ok([dx, dy])
}

/// Gaussian curvature from `E, F, G` and their partials (Brioschi formula).
#[allow(clippy::too_many_arguments)]
pub fn brioschi(g: &Tensor, d1: &[Tensor; 2], e_vv: f64, f_uv: f64, g_uu: f64) -> f64 {
    let (e, f, gg) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let (e_u, e_v) = (d1[0][(0, 0)], d1[1][(0, 0)]);
    let (f_u, f_v) = (d1[0][(0, 1)], d1[1][(0, 1)]);
    let (g_u, g_v) = (d1[0][(1, 1)], d1[1][(1, 1)]);
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = det3([
        [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e, f],
        [0.5 * g_v, f, gg],
    ]);
    let b = det3([
        [0.0, 0.5 * e_v, 0.5 * g_u],
        [0.5 * e_v, e, f],
        [0.5 * g_u, f, gg],
    ]);
    let w = e * gg - f * f;
    (a - b) / (w * w)
}

fn fd_gauss_curvature<M: Metric + ?Sized>(m: &M, p: &Point) -> Result<f64> {
    let g = m.tensor(p)?;
    let d1 = fd_partials(m, p)?;
    let h = 4.0 * FD_STEP * (1.0 + p.norm());
    let at = |dx: f64, dy: f64| m.tensor(&(p + Vector::new(dx, dy)));
    let second = |axis: usize| -> Result<Tensor> {
        let e = |s: f64| if axis == 0 { at(s, 0.0) } else { at(0.0, s) };
        Ok(
            (-e(2.0 * h)? + e(h)? * 16.0 - g * 30.0 + e(-h)? * 16.0 - e(-2.0 * h)?)
                / (12.0 * h * h),
        )
    };
    let uu = second(0)?;
    let vv = second(1)?;
    let f_y = |x: f64| -> Result<f64> {
        let c = |s: f64| at(x, s).map(|t| t[(0, 1)]);
        Ok((c(-2.0 * h)? - c(2.0 * h)? + 8.0 * (c(h)? - c(-h)?)) / (12.0 * h))
    };
    let f_uv = (f_y(-2.0 * h)? - f_y(2.0 * h)? + 8.0 * (f_y(h)? - f_y(-h)?)) / (12.0 * h);
    Ok(brioschi(&g, &d1, vv[(0, 0)], f_uv, uu[(1, 1)]))
}

/// A g-orthonormal frame at a point (Gram-Schmidt on the coordinate basis).
pub fn orthonormal_frame(g: &Tensor) -> (Vector, Vector) {
    let e1 = Vector::new(1.0 / g[(0, 0)].sqrt(), 0.0);
    let y = Vector::new(0.0, 1.0);
    let proj = (e1.transpose() * g * y)[(0, 0)];
    let w = y - e1 * proj;
    let n = (w.transpose() * g * w)[(0, 0)].sqrt();
    (e1, w / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        let g = Tensor::new(2.0, 0.3, 0.3, 0.5);
        let (a, b) = orthonormal_frame(&g);
        assert!(((a.transpose() * g * a)[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(((b.transpose() * g * b)[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((a.transpose() * g * b)[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn spd_check() {
        assert!(is_spd(&Tensor::identity()));
        assert!(!is_spd(&Tensor::new(1.0, 2.0, 2.0, 1.0)));
    }
}
