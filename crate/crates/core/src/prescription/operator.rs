//! The Dirichlet operator `(n - 1) Laplacian + s` on interior grid nodes and
//! its spectrum near zero.

use crate::error::{Error, Result};
use crate::linalg::{eigs_near, BandLu, Csr};
use crate::metric::{GridField, GridMetric};
use crate::par::Execution;

/// `L = (n - 1) Laplacian + s` with zero boundary values, stored in the
/// symmetric form `W^{1/2} L W^{-1/2}` where `W` holds the node volumes.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    pub metric: GridMetric,
    pub dimension: usize,
    /// Symmetric matrix on unknowns (interior nodes in chart order).
    pub matrix: Csr,
    sqrt_w: Vec<f64>,
    pub exec: Execution,
}

impl DirichletOperator {
    pub fn assemble(metric: &GridMetric, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidArgument(format!("dimension {dimension} < 2")));
        }
        let chart = &metric.chart;
        let nu = chart.unknowns();
        let stored_w = metric.weights();
        let sqrt_w: Vec<f64> = (0..nu)
            .map(|q| stored_w[chart.unknown_to_stored(q)].sqrt())
            .collect();
        let c = (dimension - 1) as f64;
        let mut t = Vec::with_capacity(9 * nu);
        for p in 0..nu {
            let k = chart.unknown_to_stored(p);
            t.push((p, p, metric.scalar_curvature[k]));
            for (nb, w) in metric.stencil(k) {
                if let Some(q) = chart.stored_to_unknown(nb) {
                    t.push((p, q, c * w / (sqrt_w[p] * stored_w[nb].sqrt())));
                }
            }
        }
        Ok(Self {
            metric: metric.clone(),
            dimension,
            matrix: Csr::from_triplets(nu, t),
            sqrt_w,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.n
    }

    /// Same operator with `shift` added to the curvature term.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            matrix: self.matrix.plus_diagonal(&vec![shift; self.matrix.n]),
            metric: self.metric.with_curvature_shift(shift),
            ..self.clone()
        }
    }

    /// `(row, col, value)` entries of the symmetric matrix.
    pub fn to_coo(&self) -> Vec<(usize, usize, f64)> {
        self.matrix.triplets()
    }

    /// Applies `L` to a field, using only its interior values.
    pub fn apply(&self, f: &GridField) -> GridField {
        let chart = &self.metric.chart;
        let y: Vec<f64> = f
            .interior(chart)
            .iter()
            .zip(&self.sqrt_w)
            .map(|(v, s)| v * s)
            .collect();
        let ly = self.matrix.matvec(&y);
        let x: Vec<f64> = ly.iter().zip(&self.sqrt_w).map(|(v, s)| v / s).collect();
        GridField::from_interior(chart, &x)
    }

    /// Solves `L u = rhs` on the interior with zero boundary values.
    pub fn solve(&self, rhs: &GridField) -> Result<GridField> {
        let chart = &self.metric.chart;
        let lu = BandLu::factor(&self.matrix, self.exec)?;
        let b: Vec<f64> = rhs
            .interior(chart)
            .iter()
            .zip(&self.sqrt_w)
            .map(|(v, s)| v * s)
            .collect();
        let y = lu.solve(&b);
        let x: Vec<f64> = y.iter().zip(&self.sqrt_w).map(|(v, s)| v / s).collect();
        Ok(GridField::from_interior(chart, &x))
    }

    /// `count` eigenpairs nearest `shift`, with eigenfields normalized so that
    /// the volume-weighted sum of squares is one.
    pub fn eigenpairs(&self, shift: f64, count: usize) -> Result<Vec<(f64, GridField)>> {
        let pairs = match eigs_near(&self.matrix, shift, count, 1e-10, self.exec) {
            Err(Error::SingularMatrix(_)) => {
                // the shift is itself an eigenvalue to working precision
                let nudge = 1e-7 * self.matrix.vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                eigs_near(&self.matrix, shift + nudge, count, 1e-10, self.exec)?
            }
            r => r?,
        };
        let chart = &self.metric.chart;
        Ok(pairs
            .into_iter()
            .map(|(v, y)| {
                let x: Vec<f64> = y.iter().zip(&self.sqrt_w).map(|(a, s)| a / s).collect();
                (v, GridField::from_interior(chart, &x))
            })
            .collect())
    }
}

/// Result of the kernel test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpscVerdict {
    /// Eigenvalue of smallest modulus.
    pub eigenvalue: f64,
    /// Whether that modulus exceeds the gap tolerance, so the operator is
    /// invertible with margin.
    pub lpsc: bool,
}

pub fn lpsc_test(op: &DirichletOperator, gap_tol: f64) -> Result<LpscVerdict> {
    let (eigenvalue, _) = op
        .eigenpairs(0.0, 1)?
        .into_iter()
        .next()
        .ok_or(Error::EigenNonConvergence(f64::NAN))?;
    Ok(LpscVerdict {
        eigenvalue,
        lpsc: eigenvalue.abs() > gap_tol,
    })
}

/// Eigenpairs with `|eigenvalue| < radius`.
#[derive(Debug, Clone)]
pub struct SpectralWindow {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<GridField>,
    pub radius: f64,
}

impl SpectralWindow {
    /// Collects up to `max_count` eigenvalues inside `(-radius, radius)`.
    pub fn new(op: &DirichletOperator, radius: f64, max_count: usize) -> Result<Self> {
        let mut eigenvalues = Vec::new();
        let mut eigenvectors = Vec::new();
        for (v, u) in op.eigenpairs(0.0, max_count)? {
            if v.abs() < radius {
                eigenvalues.push(v);
                eigenvectors.push(u);
            }
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            radius,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// First-order change of the window's eigenvalue sum under the conformal
/// change `exp(2 s k) g`, at `s = 0`:
/// `-(n - 1)(n / 2 + 1) sum(W * Laplacian(k) * theta)` with `theta` the sum of
/// squared normalized eigenfields, plus `-2 sum_i lambda_i sum(W k u_i^2)`,
/// which vanishes on an exact kernel.
pub fn eigenvalue_derivative(
    op: &DirichletOperator,
    window: &SpectralWindow,
    k: &GridField,
) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty spectral window".into()));
    }
    let m = &op.metric;
    let lap = m.laplacian(k);
    let n = op.dimension as f64;
    let mut theta = GridField::zeros(&m.chart);
    for u in &window.eigenvectors {
        for (t, v) in theta.values.iter_mut().zip(&u.values) {
            *t += v * v;
        }
    }
    let prod = GridField {
        values: lap
            .values
            .iter()
            .zip(&theta.values)
            .map(|(a, b)| a * b)
            .collect(),
    };
    let mut out = -(n - 1.0) * (n / 2.0 + 1.0) * m.integrate(&prod);
    for (lambda, u) in window.eigenvalues.iter().zip(&window.eigenvectors) {
        let ku2 = GridField {
            values: k
                .values
                .iter()
                .zip(&u.values)
                .map(|(a, b)| a * b * b)
                .collect(),
        };
        out -= 2.0 * lambda * m.integrate(&ku2);
    }
    Ok(out)
}

/// A conformally flat disk `exp(2 a (1 - r^2)) |dx|^2` whose amplitude `a` is
/// tuned by regula falsi so that the discrete operator (dimension two) has
/// an eigenvalue at zero. Returns the metric and the amplitude.
pub fn kernel_tuned_disk(radial: usize, angular: usize) -> Result<(GridMetric, f64)> {
    let flat = GridMetric::flat_polar_disk(1.0, radial, angular)?;
    let metric_for = |a: f64| -> Result<GridMetric> {
        let phi = GridField::from_fn(&flat.chart, |r, _| a * (1.0 - r * r));
        flat.conformal(&phi)
    };
    let eig = |a: f64| -> Result<f64> {
        let op = DirichletOperator::assemble(&metric_for(a)?, 2)?;
        Ok(lpsc_test(&op, 0.0)?.eigenvalue)
    };
    let (mut a0, mut a1) = (0.5, 1.0);
    let (mut l0, mut l1) = (eig(a0)?, eig(a1)?);
    if l0 * l1 > 0.0 {
        return Err(Error::InvalidArgument(
            "tuning interval does not bracket a kernel".into(),
        ));
    }
    for _ in 0..100 {
        let a = (a0 * l1 - a1 * l0) / (l1 - l0);
        let l = eig(a)?;
        if l.abs() < 1e-11 || (a1 - a0).abs() < 1e-15 {
            return Ok((metric_for(a)?, a));
        }
        if l * l1 < 0.0 {
            a0 = a1;
            l0 = l1;
        } else {
            l0 *= 0.5;
        }
        a1 = a;
        l1 = l;
    }
    Err(Error::EigenNonConvergence(l1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const J01_SQ: f64 = 5.783185962946784;

    fn lowest(metric: &GridMetric) -> f64 {
        let op = DirichletOperator::assemble(metric, 2).unwrap();
        // the flat operator is the Laplacian, so look near the bottom
        op.eigenpairs(-5.0, 1).unwrap()[0].0
    }

    #[test]
    fn flat_disk_ground_state() {
        let coarse = lowest(&GridMetric::flat_polar_disk(1.0, 32, 32).unwrap());
        let fine = lowest(&GridMetric::flat_polar_disk(1.0, 64, 64).unwrap());
        assert!((fine + J01_SQ).abs() < (coarse + J01_SQ).abs());
        assert_relative_eq!(fine, -J01_SQ, epsilon = 5e-3);
    }

    #[test]
    fn symmetric_and_shift_invariant() {
        let g = GridMetric::flat_polar_disk(1.0, 8, 8).unwrap();
        let op = DirichletOperator::assemble(&g, 2).unwrap();
        let coo = op.to_coo();
        let lookup = |i: usize, j: usize| -> f64 {
            coo.iter()
                .filter(|t| t.0 == i && t.1 == j)
                .map(|t| t.2)
                .sum()
        };
        for &(i, j, v) in &coo {
            assert_relative_eq!(v, lookup(j, i), epsilon = 1e-12, max_relative = 1e-12);
        }
        let a = op.eigenpairs(-5.0, 2).unwrap();
        let b = op.shifted(0.75).eigenpairs(-4.25, 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.0 + 0.75, y.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn solve_inverts_apply() {
        let g = GridMetric::flat_polar_disk(1.0, 12, 16).unwrap();
        let op = DirichletOperator::assemble(&g, 3).unwrap().shifted(1.0);
        let u = GridField::from_cartesian(&g.chart, |p| (1.0 - p.norm_squared()) * (1.0 + p.x));
        let back = op.solve(&op.apply(&u)).unwrap();
        for (k, (a, b)) in u.values.iter().zip(&back.values).enumerate() {
            if !g.boundary_mask[k] {
                assert_relative_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tuned_disk_has_a_kernel_and_matching_derivative() {
        let (g, a) = kernel_tuned_disk(24, 24).unwrap();
        assert!(a > 0.5 && a < 1.0);
        let op = DirichletOperator::assemble(&g, 2).unwrap();
        let verdict = lpsc_test(&op, 1e-9).unwrap();
        assert!(!verdict.lpsc, "{verdict:?}");
        let window = SpectralWindow::new(&op, 1e-3, 2).unwrap();
        assert_eq!(window.len(), 1);
        let k =
            GridField::from_cartesian(&g.chart, |p| (1.0 - p.norm_squared()) * (1.0 + 0.5 * p.x));
        let exact = eigenvalue_derivative(&op, &window, &k).unwrap();
        let at = |s: f64| {
            let m = g.conformal(&k.scaled(s)).unwrap();
            lpsc_test(&DirichletOperator::assemble(&m, 2).unwrap(), 0.0)
                .unwrap()
                .eigenvalue
        };
        let h = 1e-4;
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert_relative_eq!(exact, fd, max_relative = 1e-4);
    }
}
