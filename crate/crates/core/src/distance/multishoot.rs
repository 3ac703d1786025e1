//! Multiple shooting for long boundary-to-boundary geodesics on bands.
//!
//! Single shooting loses all precision once a geodesic winds several times
//! around a hyperbolic core, because the exit point depends exponentially on
//! the entry angle. Here the geodesic is split into segments of roughly unit
//! length whose start states are unknowns, so every Newton sub-problem stays
//! well conditioned. Higher windings are reached by continuation: one extra
//! loop is spliced in at the middle and the system is re-solved.

use nalgebra::{DMatrix, DVector};

use super::shoot::{entry, Endpoints};
use crate::error::{Error, Result};
use crate::flow::rk;
use crate::metric::{Metric, Point, Surface, Vector};

type State = [f64; 4];

fn rhs(m: &dyn Metric) -> impl Fn(&State) -> Result<State> + '_ {
    move |y: &State| {
        let p = Point::new(y[0], y[1]);
        let v = Vector::new(y[2], y[3]);
        let a = -m.christoffel(&p)?.contract(&v, &v);
        Ok([y[2], y[3], a.x, a.y])
    }
}

/// Fixed-step flow, smooth in both the start state and the duration.
fn flow(m: &dyn Metric, y: &State, duration: f64, steps: usize) -> Result<State> {
    let f = rhs(m);
    let h = duration / steps as f64;
    let mut z = *y;
    for _ in 0..steps {
        z = rk::step_from(&f, &z, h)?;
    }
    Ok(z)
}

/// A discretized geodesic from `x` with `weights[k] * length` the duration
/// of segment `k`.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub angle: f64,
    pub nodes: Vec<State>,
    pub weights: Vec<f64>,
    pub steps: Vec<usize>,
    pub length: f64,
    /// Target chart position of the far end.
    pub target: (f64, f64),
    pub residual: f64,
}

pub(crate) struct Shooter<'a> {
    pub surface: &'a Surface,
    pub ends: Endpoints,
    pub segment: f64,
    pub steps_per_unit: f64,
}

impl<'a> Shooter<'a> {
    fn metric(&self) -> &dyn Metric {
        self.surface.metric()
    }

    fn steps_for(&self, duration: f64) -> usize {
        ((duration * self.steps_per_unit).ceil() as usize).max(8)
    }

    /// Builds a chain by sampling the geodesic with the given entry angle
    /// and length.
    pub fn from_shot(&self, angle: f64, length: f64, target: (f64, f64)) -> Result<Chain> {
        let m = (length / self.segment).ceil().max(1.0) as usize;
        let d = length / m as f64;
        let steps = self.steps_for(d);
        let s0 = entry(self.surface, &self.ends, angle)?;
        let mut nodes = vec![[s0.base.x, s0.base.y, s0.dir.x, s0.dir.y]];
        for k in 1..m {
            let z = flow(self.metric(), &nodes[k - 1], d, steps)?;
            nodes.push(z);
        }
        let mut c = Chain {
            angle,
            nodes,
            weights: vec![1.0 / m as f64; m],
            steps: vec![steps; m],
            length,
            target,
            residual: f64::INFINITY,
        };
        self.solve(&mut c)?;
        Ok(c)
    }

    fn first_node(&self, angle: f64) -> Result<State> {
        let s = entry(self.surface, &self.ends, angle)?;
        Ok([s.base.x, s.base.y, s.dir.x, s.dir.y])
    }

    fn node(&self, c: &Chain, k: usize, angle: f64) -> Result<State> {
        if k == 0 {
            self.first_node(angle)
        } else {
            Ok(c.nodes[k])
        }
    }

    fn residual(&self, c: &Chain) -> Result<DVector<f64>> {
        let m = c.nodes.len();
        let mut r = DVector::zeros(4 * m - 2);
        for k in 0..m {
            let z = self.node(c, k, c.angle)?;
            let e = flow(self.metric(), &z, c.weights[k] * c.length, c.steps[k])?;
            if k + 1 < m {
                for i in 0..4 {
                    r[4 * k + i] = e[i] - c.nodes[k + 1][i];
                }
            } else {
                r[4 * k] = e[0] - c.target.0;
                r[4 * k + 1] = e[1] - c.target.1;
            }
        }
        Ok(r)
    }

    fn jacobian(&self, c: &Chain) -> Result<DMatrix<f64>> {
        let m = c.nodes.len();
        let dim = 4 * m - 2;
        let mut jac = DMatrix::zeros(dim, dim);
        let metric = self.metric();
        let f = rhs(metric);
        let rows = |k: usize| if k + 1 < m { 4 } else { 2 };
        for k in 0..m {
            let dur = c.weights[k] * c.length;
            let z = self.node(c, k, c.angle)?;
            let end = flow(metric, &z, dur, c.steps[k])?;
            let fe = f(&end)?;
            // duration column
            for i in 0..rows(k) {
                jac[(4 * k + i, dim - 1)] = c.weights[k] * fe[i];
            }
            if k + 1 < m {
                for i in 0..4 {
                    jac[(4 * k + i, 4 * k + 1 + i)] -= 1.0;
                }
            }
            if k == 0 {
                let h = 1e-7;
                let p = flow(metric, &self.first_node(c.angle + h)?, dur, c.steps[k])?;
                let q = flow(metric, &self.first_node(c.angle - h)?, dur, c.steps[k])?;
                for i in 0..rows(k) {
                    jac[(i, 0)] = (p[i] - q[i]) / (2.0 * h);
                }
            } else {
                for j in 0..4 {
                    let h = 1e-7 * z[j].abs().max(1.0);
                    let mut zp = z;
                    let mut zq = z;
                    zp[j] += h;
                    zq[j] -= h;
                    let p = flow(metric, &zp, dur, c.steps[k])?;
                    let q = flow(metric, &zq, dur, c.steps[k])?;
                    // node k occupies unknown columns 1 + 4(k-1) ..
                    let col = 1 + 4 * (k - 1) + j;
                    for i in 0..rows(k) {
                        jac[(4 * k + i, col)] += (p[i] - q[i]) / (2.0 * h);
                    }
                }
            }
        }
        Ok(jac)
    }

    fn apply(c: &Chain, dx: &DVector<f64>, t: f64) -> Chain {
        let mut n = c.clone();
        n.angle -= t * dx[0];
        for k in 1..c.nodes.len() {
            for i in 0..4 {
                n.nodes[k][i] -= t * dx[1 + 4 * (k - 1) + i];
            }
        }
        n.length -= t * dx[dx.len() - 1];
        n
    }

    /// Damped Newton on the matching conditions.
    pub fn solve(&self, c: &mut Chain) -> Result<()> {
        let mut r = self.residual(c)?;
        let mut norm = r.amax();
        let mut history = vec![norm];
        for _ in 0..40 {
            if norm < 1e-11 {
                break;
            }
            let jac = self.jacobian(c)?;
            let dx = jac.lu().solve(&r).ok_or(Error::SingularMatrix(r.len()))?;
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-4 {
                let trial = Self::apply(c, &dx, t);
                if trial.length > 0.0 && trial.angle.abs() < std::f64::consts::FRAC_PI_2 {
                    if let Ok(rt) = self.residual(&trial) {
                        let nt = rt.amax();
                        if nt < norm {
                            *c = trial;
                            r = rt;
                            norm = nt;
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            history.push(norm);
            if !accepted {
                break;
            }
        }
        c.residual = norm;
        if norm < 1e-8 {
            Ok(())
        } else {
            Err(Error::NewtonDivergence(history))
        }
    }

    /// Adds one loop around the band at the middle node (in the direction of
    /// `sign`) and re-solves for the next class.
    pub fn add_loop(&self, c: &Chain, sign: f64) -> Result<Chain> {
        let period = self.ends.period;
        let j = c.nodes.len() / 2;
        let start = c.nodes[j];
        let metric = self.metric();
        let f = rhs(metric);
        let goal = start[1] + sign * period;
        let opts = rk::Adaptive::new(1e-12);
        let mut hit: Option<(f64, State)> = None;
        rk::integrate(&opts, &f, start, 100.0 * period, |t0, ya, h, yb| {
            if (yb[1] - goal) * sign >= 0.0 {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let z = rk::step_from(&f, ya, mid)?;
                    if (z[1] - goal) * sign >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hit = Some((t0 + hi, rk::step_from(&f, ya, hi)?));
                return Ok(rk::Control::Stop);
            }
            Ok(rk::Control::Continue)
        })?;
        let (loop_len, _) = hit.ok_or_else(|| {
            Error::InvalidArgument("no loop around the band from the middle node".into())
        })?;
        let pieces = (loop_len / self.segment).ceil().max(1.0) as usize;
        let d = loop_len / pieces as f64;
        let steps = self.steps_for(d);
        let mut nodes: Vec<State> = c.nodes[..=j].to_vec();
        let mut durations: Vec<f64> = c.weights[..j].iter().map(|w| w * c.length).collect();
        let mut step_counts: Vec<usize> = c.steps[..j].to_vec();
        let mut z = start;
        for _ in 1..pieces {
            z = flow(metric, &z, d, steps)?;
            nodes.push(z);
        }
        durations.extend(std::iter::repeat(d).take(pieces));
        step_counts.extend(std::iter::repeat(steps).take(pieces));
        for k in j..c.nodes.len() {
            let mut s = c.nodes[k];
            s[1] += sign * period;
            nodes.push(s);
            durations.push(c.weights[k] * c.length);
            step_counts.push(c.steps[k]);
        }
        let length = c.length + loop_len;
        let mut next = Chain {
            angle: c.angle,
            nodes,
            weights: durations.iter().map(|d| d / length).collect(),
            steps: step_counts,
            length,
            target: (c.target.0, c.target.1 + sign * period),
            residual: f64::INFINITY,
        };
        self.solve(&mut next)?;
        Ok(next)
    }
}
