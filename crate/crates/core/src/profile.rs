//! One-variable warping profiles `f(t)` for metrics `dt^2 + f(t)^2 dtheta^2`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;

/// Highest derivative order exposed by [`Profile::derivatives`].
pub const MAX_ORDER: usize = 6;

/// Which branch to use when evaluating at a declared joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

pub trait Profile: Send + Sync + fmt::Debug {
    /// `[f, f', f'']` at `t`.
    fn d2(&self, t: f64) -> [f64; 3] {
        let d = self.derivatives(t);
        [d[0], d[1], d[2]]
    }

    /// `f` and its derivatives through order [`MAX_ORDER`].
    fn derivatives(&self, t: f64) -> [f64; MAX_ORDER + 1];

    /// Branch-selected derivatives; profiles without joints ignore `side`.
    fn derivatives_one_sided(&self, t: f64, _side: Side) -> [f64; MAX_ORDER + 1] {
        self.derivatives(t)
    }

    /// Interval on which the profile is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Points where only `C^{1,1}` regularity holds.
    fn joints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Highest derivative order that is meaningful (not identically zero by construction).
    fn resolvable_order(&self) -> usize {
        MAX_ORDER
    }

    fn value(&self, t: f64) -> f64 {
        self.d2(t)[0]
    }
}

/// Closed-form profile in the variable `t`.
#[derive(Debug, Clone)]
pub struct ExprProfile {
    expr: Expr,
}

impl ExprProfile {
    pub fn new(expr: Expr) -> Result<Self> {
        if expr.num_vars() != 1 {
            return Err(Error::Expression(
                "profile expressions take exactly the variable t".into(),
            ));
        }
        Ok(Self { expr })
    }

    pub fn parse(source: &str) -> Result<Self> {
        Self::new(Expr::parse(source, &["t"])?)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl Profile for ExprProfile {
    fn d2(&self, t: f64) -> [f64; 3] {
        self.expr.eval_jet(&[Jet::<3>::variable(t)]).derivatives()
    }

    fn derivatives(&self, t: f64) -> [f64; MAX_ORDER + 1] {
        self.expr
            .eval_jet(&[Jet::<{ MAX_ORDER + 1 }>::variable(t)])
            .derivatives()
    }
}

/// Natural cubic spline through sampled `(t, f)` pairs.
#[derive(Debug, Clone)]
pub struct CubicTable {
    t: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
}

impl CubicTable {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 3 || f.len() != n {
            return Err(Error::InvalidArgument(
                "profile table needs at least 3 samples and equal lengths".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "profile table abscissae must be strictly increasing".into(),
            ));
        }
        // Second derivatives m_i from the tridiagonal system with m_0 = m_{n-1} = 0.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let r = (f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { t, f, m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.t.len();
        match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }
}

impl Profile for CubicTable {
    fn derivatives(&self, x: f64) -> [f64; MAX_ORDER + 1] {
        let i = self.segment(x);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let a = t1 - x;
        let b = x - t0;
        let mut out = [0.0; MAX_ORDER + 1];
        out[0] = m0 * a.powi(3) / (6.0 * h)
            + m1 * b.powi(3) / (6.0 * h)
            + (f0 / h - m0 * h / 6.0) * a
            + (f1 / h - m1 * h / 6.0) * b;
        out[1] = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (f0 / h - m0 * h / 6.0)
            + (f1 / h - m1 * h / 6.0);
        out[2] = m0 * a / h + m1 * b / h;
        out[3] = (m1 - m0) / h;
        out
    }

    fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn resolvable_order(&self) -> usize {
        2
    }
}

/// `t -> inner(t + shift)`.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub inner: Arc<dyn Profile>,
    pub shift: f64,
}

impl Profile for Shifted {
    fn d2(&self, t: f64) -> [f64; 3] {
        self.inner.d2(t + self.shift)
    }
    fn derivatives(&self, t: f64) -> [f64; MAX_ORDER + 1] {
        self.inner.derivatives(t + self.shift)
    }
    fn derivatives_one_sided(&self, t: f64, side: Side) -> [f64; MAX_ORDER + 1] {
        self.inner.derivatives_one_sided(t + self.shift, side)
    }
    fn domain(&self) -> (f64, f64) {
        let (a, b) = self.inner.domain();
        (a - self.shift, b - self.shift)
    }
    fn joints(&self) -> Vec<f64> {
        self.inner
            .joints()
            .into_iter()
            .map(|j| j - self.shift)
            .collect()
    }
    fn resolvable_order(&self) -> usize {
        self.inner.resolvable_order()
    }
}
