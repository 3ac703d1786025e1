//! Small conformal perturbations that move eigenvalues of the Dirichlet
//! operator off zero.

use super::operator::{eigenvalue_derivative, lpsc_test, DirichletOperator, SpectralWindow};
use crate::error::{Error, Result};
use crate::metric::{grid_cm_norm, Chart, GridField, GridMetric, Point};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbOptions {
    /// Eigenvalues with modulus at most this count as kernel.
    pub gap_tol: f64,
    /// Radius of the spectral window whose eigenvalues are tracked.
    pub window_radius: f64,
    /// Derivatives below this do not split the kernel.
    pub min_derivative: f64,
    pub exec: Execution,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            window_radius: 1e-3,
            min_derivative: 1e-8,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    /// Total conformal factor.
    pub f: GridField,
    pub metric: GridMetric,
    /// Eigenvalue of smallest modulus before and after.
    pub eigenvalue_before: f64,
    pub eigenvalue_after: f64,
    /// Grid `C^2` norm of `f` in the original metric.
    pub c2_norm: f64,
    /// Number of kernel-splitting steps taken.
    pub steps: usize,
}

/// Smooth compactly supported bumps `exp(1 - 1 / (1 - |x - c|^2 / rho^2))`
/// whose supports stay inside the chart.
pub fn bump_basis(chart: &Chart) -> Vec<GridField> {
    let (centers, rho): (Vec<Point>, f64) = if chart.is_polar() {
        let r = chart.u.hi;
        let mut c = vec![Point::new(0.0, 0.0)];
        for ring in [0.25, 0.5] {
            for a in 0..6 {
                let t = a as f64 * std::f64::consts::TAU / 6.0;
                c.push(Point::new(ring * r * t.cos(), ring * r * t.sin()));
            }
        }
        (c, 0.3 * r)
    } else {
        let (u, v) = (chart.u, chart.v);
        let mut c = Vec::new();
        for a in 1..4 {
            for b in 1..4 {
                c.push(Point::new(
                    u.lo + (u.hi - u.lo) * a as f64 / 4.0,
                    v.lo + (v.hi - v.lo) * b as f64 / 4.0,
                ));
            }
        }
        (c, 0.2 * (u.hi - u.lo).min(v.hi - v.lo))
    };
    centers
        .iter()
        .map(|c| {
            GridField::from_cartesian(chart, |p| {
                let q = (p - c).norm_squared() / (rho * rho);
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            })
        })
        .collect()
}

fn near_kernel(window: &SpectralWindow, gap_tol: f64) -> usize {
    window
        .eigenvalues
        .iter()
        .filter(|v| v.abs() <= gap_tol)
        .count()
}

/// Conformal factor `f` with `||f||_{C^2} < epsilon` such that `exp(2f) g`
/// passes the kernel test. Each step picks the basis bump with the largest
/// eigenvalue derivative and doubles its amplitude until one kernel
/// eigenvalue leaves `[-gap_tol, gap_tol]`; each step may spend
/// `epsilon / K` of the budget, `K` being the initial kernel dimension.
pub fn lpsc_perturb(
    metric: &GridMetric,
    epsilon: f64,
    opts: &PerturbOptions,
) -> Result<Perturbation> {
    let assemble =
        |g: &GridMetric| DirichletOperator::assemble(g, 2).map(|o| o.with_execution(opts.exec));
    let op = assemble(metric)?;
    let before = lpsc_test(&op, opts.gap_tol)?;
    let window = SpectralWindow::new(&op, opts.window_radius, 4)?;
    let kernel = near_kernel(&window, opts.gap_tol);
    let mut f = GridField::zeros(&metric.chart);
    if before.lpsc || kernel == 0 {
        return Ok(Perturbation {
            f,
            metric: metric.clone(),
            eigenvalue_before: before.eigenvalue,
            eigenvalue_after: before.eigenvalue,
            c2_norm: 0.0,
            steps: 0,
        });
    }
    let budget = epsilon / kernel as f64;
    let basis = bump_basis(&metric.chart);
    let mut g = metric.clone();
    let mut steps = 0;
    let mut after = before;
    while !after.lpsc {
        if steps >= kernel {
            return Err(Error::NotLpsc(after.eigenvalue));
        }
        steps += 1;
        let op = assemble(&g)?;
        let window = SpectralWindow::new(&op, opts.window_radius, kernel + 2)?;
        let count = near_kernel(&window, opts.gap_tol);
        // restrict to the kernel part of the window
        let kernel_window = SpectralWindow {
            eigenvalues: window
                .eigenvalues
                .iter()
                .cloned()
                .filter(|v| v.abs() <= opts.gap_tol)
                .collect(),
            eigenvectors: window
                .eigenvalues
                .iter()
                .zip(&window.eigenvectors)
                .filter(|(v, _)| v.abs() <= opts.gap_tol)
                .map(|(_, u)| u.clone())
                .collect(),
            radius: opts.gap_tol,
        };
        let derivs: Vec<Result<(f64, f64)>> = par::map(opts.exec, &basis, |_, k| {
            let norm = grid_cm_norm(&g, k, 2)?;
            Ok((eigenvalue_derivative(&op, &kernel_window, k)? / norm, norm))
        });
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, d) in derivs.into_iter().enumerate() {
            let (rate, norm) = d?;
            if best.map_or(true, |(_, r, _)| rate.abs() > r.abs()) {
                best = Some((i, rate, norm));
            }
        }
        let (i, rate, norm) = best.ok_or(Error::NoSplittingDirection(0))?;
        if rate.abs() < opts.min_derivative {
            return Err(Error::NoSplittingDirection(basis.len()));
        }
        let lambda = kernel_window.sum();
        let direction = if lambda == 0.0 {
            rate.signum()
        } else {
            rate.signum() * lambda.signum()
        };
        let mut amp = opts.gap_tol / rate.abs();
        loop {
            if amp > budget {
                return Err(Error::NotLpsc(after.eigenvalue));
            }
            let step = basis[i].scaled(direction * amp / norm);
            let trial = g.conformal(&step)?;
            let top = assemble(&trial)?;
            let w = SpectralWindow::new(&top, opts.window_radius, kernel + 2)?;
            if near_kernel(&w, opts.gap_tol) < count {
                for (a, b) in f.values.iter_mut().zip(&step.values) {
                    *a += b;
                }
                g = trial;
                after = lpsc_test(&top, opts.gap_tol)?;
                break;
            }
            amp *= 2.0;
        }
    }
    Ok(Perturbation {
        c2_norm: grid_cm_norm(metric, &f, 2)?,
        f,
        metric: g,
        eigenvalue_before: before.eigenvalue,
        eigenvalue_after: after.eigenvalue,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prescription::kernel_tuned_disk;

    #[test]
    fn splits_the_tuned_kernel() {
        let (g, _) = kernel_tuned_disk(24, 24).unwrap();
        let p = lpsc_perturb(&g, 1e-2, &PerturbOptions::default()).unwrap();
        assert!(p.eigenvalue_before.abs() <= 1e-9);
        assert!(p.eigenvalue_after.abs() > 1e-6, "{}", p.eigenvalue_after);
        assert!(p.c2_norm < 1e-2 && p.c2_norm > 0.0);
        assert_eq!(p.steps, 1);
        let op = DirichletOperator::assemble(&p.metric, 2).unwrap();
        assert!(lpsc_test(&op, 1e-6).unwrap().lpsc);
    }

    #[test]
    fn leaves_invertible_operators_alone() {
        let g = GridMetric::flat_polar_disk(1.0, 12, 12).unwrap();
        let p = lpsc_perturb(&g, 1e-2, &PerturbOptions::default()).unwrap();
        assert_eq!(p.steps, 0);
        assert_eq!(p.f.sup(), 0.0);
    }

    #[test]
    fn basis_vanishes_on_the_boundary() {
        let g = GridMetric::flat_polar_disk(1.0, 12, 12).unwrap();
        for b in bump_basis(&g.chart) {
            for (k, v) in b.values.iter().enumerate() {
                if g.boundary_mask[k] {
                    assert_eq!(*v, 0.0);
                }
            }
            assert!(b.sup() > 0.5);
        }
    }
}
