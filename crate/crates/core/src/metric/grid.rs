//! Metrics sampled on structured grids over rectangular or polar charts.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{brioschi, is_spd, Metric, Point, Tensor};
use crate::error::{Error, Result};

/// Minimum number of interior nodes per axis.
pub const MIN_INTERIOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    /// Boundary nodes at both ends carry the zero Dirichlet condition.
    Dirichlet,
    /// Wraps around; no boundary nodes.
    Periodic,
    /// Radial axis of a polar chart: cell-centred nodes `(i + 1/2) h`, zero
    /// flux through the origin and a Dirichlet node at the outer radius.
    PolarOrigin,
}

/// One axis of a chart, described by its interior node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub lo: f64,
    pub hi: f64,
    pub interior: usize,
}

impl Axis {
    pub fn dirichlet(lo: f64, hi: f64, interior: usize) -> Self {
        Self {
            kind: AxisKind::Dirichlet,
            lo,
            hi,
            interior,
        }
    }

    pub fn periodic(lo: f64, hi: f64, interior: usize) -> Self {
        Self {
            kind: AxisKind::Periodic,
            lo,
            hi,
            interior,
        }
    }

    pub fn polar(radius: f64, interior: usize) -> Self {
        Self {
            kind: AxisKind::PolarOrigin,
            lo: 0.0,
            hi: radius,
            interior,
        }
    }

    pub fn spacing(&self) -> f64 {
        let n = self.interior as f64;
        match self.kind {
            AxisKind::Dirichlet => (self.hi - self.lo) / (n + 1.0),
            AxisKind::Periodic => (self.hi - self.lo) / n,
            AxisKind::PolarOrigin => (self.hi - self.lo) / (n + 0.5),
        }
    }

    /// Number of stored nodes, boundary nodes included.
    pub fn stored(&self) -> usize {
        match self.kind {
            AxisKind::Dirichlet => self.interior + 2,
            AxisKind::Periodic => self.interior,
            AxisKind::PolarOrigin => self.interior + 1,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        let h = self.spacing();
        match self.kind {
            AxisKind::Dirichlet | AxisKind::Periodic => self.lo + h * i as f64,
            AxisKind::PolarOrigin => self.lo + h * (i as f64 + 0.5),
        }
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        match self.kind {
            AxisKind::Dirichlet => i == 0 || i == self.interior + 1,
            AxisKind::Periodic => false,
            AxisKind::PolarOrigin => i == self.interior,
        }
    }

    /// Stored index of the first unknown.
    pub fn first_interior(&self) -> usize {
        match self.kind {
            AxisKind::Dirichlet => 1,
            _ => 0,
        }
    }

    /// Neighbor `i + step` in stored indexing, wrapping periodic axes.
    pub fn neighbor(&self, i: usize, step: isize) -> Option<usize> {
        let j = i as isize + step;
        match self.kind {
            AxisKind::Periodic => Some(j.rem_euclid(self.interior as isize) as usize),
            _ => (j >= 0 && (j as usize) < self.stored()).then_some(j as usize),
        }
    }
}

/// Two-axis chart; the first axis is the slow (outer) index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub u: Axis,
    pub v: Axis,
}

impl Chart {
    pub fn new(u: Axis, v: Axis) -> Result<Self> {
        if v.kind == AxisKind::PolarOrigin {
            return Err(Error::InvalidArgument(
                "the radial axis must come first".into(),
            ));
        }
        for a in [&u, &v] {
            if a.interior < MIN_INTERIOR {
                return Err(Error::GridTooCoarse(a.interior));
            }
            if !(a.hi > a.lo) {
                return Err(Error::InvalidArgument("empty axis range".into()));
            }
        }
        if u.kind == AxisKind::PolarOrigin && v.kind != AxisKind::Periodic {
            return Err(Error::InvalidArgument(
                "polar charts need a periodic angular axis".into(),
            ));
        }
        Ok(Self { u, v })
    }

    /// Polar chart `(r, theta)` on the disk of the given radius.
    pub fn polar_disk(radius: f64, radial: usize, angular: usize) -> Result<Self> {
        Self::new(
            Axis::polar(radius, radial),
            Axis::periodic(0.0, TAU, angular),
        )
    }

    pub fn rectangle(u: (f64, f64), v: (f64, f64), nu: usize, nv: usize) -> Result<Self> {
        Self::new(Axis::dirichlet(u.0, u.1, nu), Axis::dirichlet(v.0, v.1, nv))
    }

    pub fn is_polar(&self) -> bool {
        self.u.kind == AxisKind::PolarOrigin
    }

    pub fn stored_len(&self) -> usize {
        self.u.stored() * self.v.stored()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.v.stored() + j
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.v.stored(), k % self.v.stored())
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.split(k);
        (self.u.coord(i), self.v.coord(j))
    }

    /// Cartesian image of the node (identity for rectangular charts).
    pub fn cartesian(&self, k: usize) -> Point {
        let (a, b) = self.coords(k);
        if self.is_polar() {
            Point::new(a * b.cos(), a * b.sin())
        } else {
            Point::new(a, b)
        }
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let (i, j) = self.split(k);
        self.u.is_boundary(i) || self.v.is_boundary(j)
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.stored_len())
            .map(|k| self.is_boundary(k))
            .collect()
    }

    pub fn unknowns(&self) -> usize {
        self.u.interior * self.v.interior
    }

    /// Stored index of unknown `q`.
    pub fn unknown_to_stored(&self, q: usize) -> usize {
        let (a, b) = (q / self.v.interior, q % self.v.interior);
        self.index(a + self.u.first_interior(), b + self.v.first_interior())
    }

    pub fn stored_to_unknown(&self, k: usize) -> Option<usize> {
        if self.is_boundary(k) {
            return None;
        }
        let (i, j) = self.split(k);
        Some((i - self.u.first_interior()) * self.v.interior + (j - self.v.first_interior()))
    }
}

/// Scalar values on every stored node of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(chart: &Chart) -> Self {
        Self {
            values: vec![0.0; chart.stored_len()],
        }
    }

    /// Samples `f(u, v)` in chart coordinates.
    pub fn from_fn(chart: &Chart, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            values: (0..chart.stored_len())
                .map(|k| {
                    let (a, b) = chart.coords(k);
                    f(a, b)
                })
                .collect(),
        }
    }

    /// Samples `f` at the Cartesian image of each node.
    pub fn from_cartesian(chart: &Chart, f: impl Fn(&Point) -> f64) -> Self {
        Self {
            values: (0..chart.stored_len())
                .map(|k| f(&chart.cartesian(k)))
                .collect(),
        }
    }

    /// Embeds unknown values, with zeros on boundary nodes.
    pub fn from_interior(chart: &Chart, x: &[f64]) -> Self {
        let mut out = Self::zeros(chart);
        for (q, v) in x.iter().enumerate() {
            out.values[chart.unknown_to_stored(q)] = *v;
        }
        out
    }

    pub fn interior(&self, chart: &Chart) -> Vec<f64> {
        (0..chart.unknowns())
            .map(|q| self.values[chart.unknown_to_stored(q)])
            .collect()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }
}

/// Finite differences on a chart: fourth order where the centred stencil
/// fits, second order centred or one-sided otherwise.
///
/// On polar charts with an even angular count, stencils reaching below the
/// origin use the reflected node `(r, theta + pi)`, with `parity` the sign
/// picked up by the differentiated quantity under `dr -> -dr`.
#[derive(Debug, Clone, Copy)]
pub struct Differ<'a> {
    chart: &'a Chart,
    parity: f64,
}

impl<'a> Differ<'a> {
    pub fn new(chart: &'a Chart) -> Self {
        Self { chart, parity: 1.0 }
    }

    pub fn with_parity(chart: &'a Chart, parity: f64) -> Self {
        Self { chart, parity }
    }

    /// Stored index and sign of the node `step` away from `k` along `axis`.
    fn neighbor(&self, axis: usize, k: usize, step: isize) -> Option<(usize, f64)> {
        let c = self.chart;
        let (i, j) = c.split(k);
        if axis == 1 {
            return c.v.neighbor(j, step).map(|b| (c.index(i, b), 1.0));
        }
        let t = i as isize + step;
        if t < 0 && c.is_polar() && c.v.interior % 2 == 0 {
            let mirrored = (-1 - t) as usize;
            if mirrored >= c.u.stored() {
                return None;
            }
            let b = (j + c.v.interior / 2) % c.v.interior;
            return Some((c.index(mirrored, b), self.parity));
        }
        c.u.neighbor(i, step).map(|a| (c.index(a, j), 1.0))
    }

    /// First and second derivative of `f` along one axis at stored node `k`.
    pub fn d12(&self, f: &dyn Fn(usize) -> f64, axis: usize, k: usize) -> (f64, f64) {
        let h = if axis == 0 {
            self.chart.u.spacing()
        } else {
            self.chart.v.spacing()
        };
        let nb = |s: isize| self.neighbor(axis, k, s).map(|(n, sg)| sg * f(n));
        let f0 = f(k);
        if let (Some(m2), Some(m1), Some(p1), Some(p2)) = (nb(-2), nb(-1), nb(1), nb(2)) {
            let d1 = (m2 - p2 + 8.0 * (p1 - m1)) / (12.0 * h);
            let d2 = (-m2 + 16.0 * m1 - 30.0 * f0 + 16.0 * p1 - p2) / (12.0 * h * h);
            return (d1, d2);
        }
        if let (Some(m1), Some(p1)) = (nb(-1), nb(1)) {
            return ((p1 - m1) / (2.0 * h), (p1 - 2.0 * f0 + m1) / (h * h));
        }
        if let (Some(p1), Some(p2), Some(p3)) = (nb(1), nb(2), nb(3)) {
            return (
                (-3.0 * f0 + 4.0 * p1 - p2) / (2.0 * h),
                (2.0 * f0 - 5.0 * p1 + 4.0 * p2 - p3) / (h * h),
            );
        }
        let (m1, m2, m3) = (nb(-1).unwrap(), nb(-2).unwrap(), nb(-3).unwrap());
        (
            (3.0 * f0 - 4.0 * m1 + m2) / (2.0 * h),
            (2.0 * f0 - 5.0 * m1 + 4.0 * m2 - m3) / (h * h),
        )
    }

    /// Gradient `(f_u, f_v)` at a node.
    pub fn gradient(&self, f: &dyn Fn(usize) -> f64, k: usize) -> [f64; 2] {
        [self.d12(f, 0, k).0, self.d12(f, 1, k).0]
    }

    /// Mixed derivative `f_uv` at a node.
    pub fn mixed(&self, f: &dyn Fn(usize) -> f64, k: usize) -> f64 {
        let fv = |n: usize| self.d12(f, 1, n).0;
        self.d12(&fv, 0, k).0
    }
}

/// A metric sampled on a chart together with its scalar curvature.
#[derive(Debug, Clone)]
pub struct GridMetric {
    pub chart: Chart,
    pub tensors: Vec<Tensor>,
    pub scalar_curvature: Vec<f64>,
    pub boundary_mask: Vec<bool>,
}

impl GridMetric {
    /// Samples chart-coordinate components; the scalar curvature is taken from
    /// `curvature` when given, otherwise computed by finite differences.
    pub fn from_fn(
        chart: Chart,
        tensor: impl Fn(f64, f64) -> Result<Tensor>,
        curvature: Option<&dyn Fn(f64, f64) -> Result<f64>>,
    ) -> Result<Self> {
        let mut tensors = Vec::with_capacity(chart.stored_len());
        for k in 0..chart.stored_len() {
            let (a, b) = chart.coords(k);
            let g = tensor(a, b)?;
            if !is_spd(&g) || (g[(0, 1)] - g[(1, 0)]).abs() > 1e-14 * g.norm() {
                return Err(Error::DegenerateMetric(a, b));
            }
            tensors.push(g);
        }
        let mut m = Self {
            chart,
            tensors,
            scalar_curvature: Vec::new(),
            boundary_mask: chart.boundary_mask(),
        };
        m.scalar_curvature = match curvature {
            Some(c) => (0..chart.stored_len())
                .map(|k| {
                    let (a, b) = chart.coords(k);
                    c(a, b)
                })
                .collect::<Result<_>>()?,
            None => m.fd_scalar_curvature(),
        };
        Ok(m)
    }

    /// Samples a metric given on a Cartesian chart; polar charts pull it back
    /// through `(r, theta) -> (r cos theta, r sin theta)`.
    pub fn sample(chart: Chart, metric: &dyn Metric) -> Result<Self> {
        let polar = chart.is_polar();
        let to_p = |a: f64, b: f64| {
            if polar {
                Point::new(a * b.cos(), a * b.sin())
            } else {
                Point::new(a, b)
            }
        };
        let tensor = |a: f64, b: f64| -> Result<Tensor> {
            let g = metric.tensor(&to_p(a, b))?;
            if polar {
                let (s, c) = b.sin_cos();
                let j = Tensor::new(c, -a * s, s, a * c);
                let mut t = j.transpose() * g * j;
                t[(1, 0)] = t[(0, 1)];
                Ok(t)
            } else {
                Ok(g)
            }
        };
        let curv = |a: f64, b: f64| metric.scalar_curvature(&to_p(a, b));
        Self::from_fn(chart, tensor, Some(&curv))
    }

    /// The Euclidean metric in polar coordinates on a disk.
    pub fn flat_polar_disk(radius: f64, radial: usize, angular: usize) -> Result<Self> {
        let chart = Chart::polar_disk(radius, radial, angular)?;
        Self::from_fn(
            chart,
            |r, _| Ok(Tensor::new(1.0, 0.0, 0.0, r * r)),
            Some(&|_, _| Ok(0.0)),
        )
    }

    pub fn sqrt_det(&self, k: usize) -> f64 {
        self.tensors[k].determinant().sqrt()
    }

    /// Quadrature weight `sqrt|g| h_u h_v` of a node.
    pub fn weight(&self, k: usize) -> f64 {
        self.sqrt_det(k) * self.chart.u.spacing() * self.chart.v.spacing()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.chart.stored_len())
            .map(|k| self.weight(k))
            .collect()
    }

    /// `sqrt|g| g^{ij}` at a node.
    fn density_inverse(&self, k: usize) -> Tensor {
        let g = &self.tensors[k];
        let d = g.determinant();
        let inv = Tensor::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / d;
        inv * d.sqrt()
    }

    /// Stiffness stencil of the divergence-form Laplacian at a non-boundary
    /// node: pairs `(stored neighbour, coefficient)` with `Laplacian f =
    /// sum(coeff * f) / weight`. The diagonal entry comes first.
    pub fn stencil(&self, k: usize) -> Vec<(usize, f64)> {
        let c = &self.chart;
        let (i, j) = c.split(k);
        let (hu, hv) = (c.u.spacing(), c.v.spacing());
        let a = self.density_inverse(k);
        let mut out = vec![(k, 0.0)];
        let mut diag = 0.0;
        for (axis, step) in [(0usize, -1isize), (0, 1), (1, -1), (1, 1)] {
            let n = if axis == 0 {
                c.u.neighbor(i, step).map(|x| c.index(x, j))
            } else {
                c.v.neighbor(j, step).map(|x| c.index(i, x))
            };
            let Some(n) = n else { continue };
            let an = self.density_inverse(n);
            let (coef, scale) = if axis == 0 {
                (0.5 * (a[(0, 0)] + an[(0, 0)]), hv / hu)
            } else {
                (0.5 * (a[(1, 1)] + an[(1, 1)]), hu / hv)
            };
            out.push((n, coef * scale));
            diag -= coef * scale;
        }
        out[0].1 = diag;
        // symmetric mixed part D_u(A D_v) + D_v(A D_u)
        let cross = |di: isize, dj: isize| -> Option<(usize, usize, usize)> {
            let x = c.u.neighbor(i, di)?;
            let y = c.v.neighbor(j, dj)?;
            Some((c.index(x, y), c.index(x, j), c.index(i, y)))
        };
        for (di, dj) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
            if let Some((corner, along_u, along_v)) = cross(di, dj) {
                let w =
                    self.density_inverse(along_u)[(0, 1)] + self.density_inverse(along_v)[(0, 1)];
                if w != 0.0 {
                    out.push((corner, 0.25 * (di * dj) as f64 * w));
                }
            }
        }
        out
    }

    /// Discrete `Laplacian f` at every non-boundary node (boundary values of
    /// `f` enter the stencils); boundary nodes use the covariant
    /// finite-difference formula.
    pub fn laplacian(&self, f: &GridField) -> GridField {
        let c = &self.chart;
        let mut out = GridField::zeros(c);
        for k in 0..c.stored_len() {
            out.values[k] = if self.boundary_mask[k] {
                self.fd_laplacian(f, k)
            } else {
                self.stencil(k)
                    .iter()
                    .map(|(n, w)| w * f.values[*n])
                    .sum::<f64>()
                    / self.weight(k)
            };
        }
        out
    }

    /// Christoffel symbols at a node from differences of the sampled tensor.
    pub fn christoffel(&self, k: usize) -> Result<super::Christoffel> {
        let comp = |a: usize, b: usize| move |n: usize| self.tensors[n][(a, b)];
        let mut dg = [Tensor::zeros(); 2];
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let f = comp(a, b);
            let d = Differ::with_parity(&self.chart, if a == b { 1.0 } else { -1.0 });
            let g = d.gradient(&f, k);
            for (axis, v) in g.iter().enumerate() {
                dg[axis][(a, b)] = *v;
                dg[axis][(b, a)] = *v;
            }
        }
        super::Christoffel::from_partials(&self.tensors[k], &dg)
    }

    fn fd_laplacian(&self, f: &GridField, k: usize) -> f64 {
        let d = Differ::new(&self.chart);
        let fv = |n: usize| f.values[n];
        let (fu, fuu) = d.d12(&fv, 0, k);
        let (fvv1, fvv) = d.d12(&fv, 1, k);
        let fuv = d.mixed(&fv, k);
        let Ok(gam) = self.christoffel(k) else {
            return f64::NAN;
        };
        let g = &self.tensors[k];
        let inv = g.try_inverse().unwrap_or_else(Tensor::zeros);
        let grad = [fu, fvv1];
        let hess = [[fuu, fuv], [fuv, fvv]];
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let mut h = hess[a][b];
                for (m, gm) in grad.iter().enumerate() {
                    h -= gam.gamma[m][a][b] * gm;
                }
                s += inv[(a, b)] * h;
            }
        }
        s
    }

    /// `|df|_g^2` at every node by finite differences.
    pub fn gradient_norm2(&self, f: &GridField) -> GridField {
        let d = Differ::new(&self.chart);
        let fv = |n: usize| f.values[n];
        GridField {
            values: (0..self.chart.stored_len())
                .map(|k| {
                    let g = d.gradient(&fv, k);
                    let t = &self.tensors[k];
                    let det = t.determinant();
                    (t[(1, 1)] * g[0] * g[0] - 2.0 * t[(0, 1)] * g[0] * g[1]
                        + t[(0, 0)] * g[1] * g[1])
                        / det
                })
                .collect(),
        }
    }

    /// Scalar curvature from finite differences of the sampled components.
    pub fn fd_scalar_curvature(&self) -> Vec<f64> {
        let d = Differ::new(&self.chart);
        let odd = Differ::with_parity(&self.chart, -1.0);
        (0..self.chart.stored_len())
            .map(|k| {
                let comp = |a: usize, b: usize| move |n: usize| self.tensors[n][(a, b)];
                let (e, f, g) = (comp(0, 0), comp(0, 1), comp(1, 1));
                let (eu, _) = d.d12(&e, 0, k);
                let (ev, evv) = d.d12(&e, 1, k);
                let (fu, _) = odd.d12(&f, 0, k);
                let (fv, _) = odd.d12(&f, 1, k);
                let (gu, guu) = d.d12(&g, 0, k);
                let (gv, _) = d.d12(&g, 1, k);
                let fuv = odd.mixed(&f, k);
                let d1 = [Tensor::new(eu, fu, fu, gu), Tensor::new(ev, fv, fv, gv)];
                2.0 * brioschi(&self.tensors[k], &d1, evv, fuv, guu)
            })
            .collect()
    }

    /// The metric `exp(2f) g` with scalar curvature from the conformal
    /// transformation law (dimension two) using this grid's operators.
    pub fn conformal(&self, f: &GridField) -> Result<Self> {
        let s = GridField {
            values: self.scalar_curvature.clone(),
        };
        let s_new = super::conformal::conformal_scalar_curvature(self, &s, f, 2)?;
        Ok(Self {
            chart: self.chart,
            tensors: self
                .tensors
                .iter()
                .zip(&f.values)
                .map(|(g, v)| g * (2.0 * v).exp())
                .collect(),
            scalar_curvature: s_new.values,
            boundary_mask: self.boundary_mask.clone(),
        })
    }

    /// Same metric with `shift` added to the scalar curvature field.
    pub fn with_curvature_shift(&self, shift: f64) -> Self {
        let mut m = self.clone();
        m.scalar_curvature.iter_mut().for_each(|s| *s += shift);
        m
    }

    /// Sum of `weight * f` over non-boundary nodes.
    pub fn integrate(&self, f: &GridField) -> f64 {
        (0..self.chart.stored_len())
            .filter(|k| !self.boundary_mask[*k])
            .map(|k| self.weight(k) * f.values[k])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polar_axis_layout() {
        let a = Axis::polar(1.0, 8);
        assert_relative_eq!(a.coord(8), 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.coord(0), 0.5 * a.spacing(), epsilon = 1e-15);
        assert!(a.is_boundary(8) && !a.is_boundary(7));
        assert_eq!(a.neighbor(0, -1), None);
        let p = Axis::periodic(0.0, TAU, 8);
        assert_eq!(p.neighbor(0, -1), Some(7));
    }

    #[test]
    fn too_coarse_grid_rejected() {
        assert!(matches!(
            Chart::polar_disk(1.0, 7, 16),
            Err(Error::GridTooCoarse(7))
        ));
    }

    #[test]
    fn unknown_indexing_round_trips() {
        let c = Chart::rectangle((0.0, 1.0), (0.0, 2.0), 9, 11).unwrap();
        for q in [0, 5, 98] {
            assert_eq!(c.stored_to_unknown(c.unknown_to_stored(q)), Some(q));
        }
        assert_eq!(c.stored_to_unknown(0), None);
    }

    #[test]
    fn laplacian_of_quadratic_on_polar_disk() {
        let m = GridMetric::flat_polar_disk(1.0, 32, 32).unwrap();
        // Laplacian(x^2 + y^2) = 4
        let f = GridField::from_cartesian(&m.chart, |p| p.norm_squared());
        let l = m.laplacian(&f);
        for k in 0..m.chart.stored_len() {
            assert_relative_eq!(l.values[k], 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn stencil_is_symmetric_for_sheared_metric() {
        let chart = Chart::rectangle((0.0, 1.0), (0.0, 1.0), 10, 10).unwrap();
        let m = GridMetric::from_fn(
            chart,
            |x, y| Ok(Tensor::new(1.0 + x * x, 0.2 * x * y, 0.2 * x * y, 1.0 + y)),
            None,
        )
        .unwrap();
        let mut entries = std::collections::HashMap::new();
        for k in 0..chart.stored_len() {
            if m.boundary_mask[k] {
                continue;
            }
            for (n, w) in m.stencil(k) {
                *entries.entry((k, n)).or_insert(0.0) += w;
            }
        }
        for ((a, b), w) in &entries {
            if m.boundary_mask[*b] {
                continue;
            }
            let t = entries.get(&(*b, *a)).copied().unwrap_or(0.0);
            assert!((w - t).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn fd_curvature_of_sphere_cap() {
        let sphere = crate::metric::CartesianMetric::stereographic_sphere();
        let chart = Chart::polar_disk(0.8, 24, 32).unwrap();
        let exact = GridMetric::sample(chart, &sphere).unwrap();
        let fd = exact.fd_scalar_curvature();
        for k in 0..chart.stored_len() {
            assert_relative_eq!(exact.scalar_curvature[k], 2.0, max_relative = 1e-10);
            // polar coordinates amplify stencil errors by 1/r^2 near the origin
            if chart.split(k).0 >= 2 {
                assert!((fd[k] - 2.0).abs() < 2e-2, "node {k}: {}", fd[k]);
            }
        }
    }
}
