//! Piecewise collar profiles attached outside a convex boundary circle.
//!
//! In the rotationally symmetric case every circle `t = const` carries the
//! metric `w(t) dtheta^2`; the collar metric is `dt^2 + w(t) dtheta^2` with
//!
//! * `t < 0`: the extended surface itself,
//! * `[0, 1 + eps]`: `rho(t - eps) r0^2 + e(t) 2 kappa0 r0^2`,
//! * `[1 + eps, 2 + 2 eps]`: `e(t) (rho(t - 1 - eps) 2 kappa0 r0^2 + (1 - rho(t - 1 - eps)) c)`,
//! * `[2 + 2 eps, 4]`: `c (sinh(kappa (t + r)) / kappa)^2`,
//!
//! where `e(t) = (exp(ell t) - 1) / ell`, `rho` is [`smooth_step_jet`] and
//! `c = (2 pi / period)^2` converts the unit-circle metric `ds^2` into the
//! `theta` chart.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::step::{exp_warp_jet, smooth_step_jet};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::WarpedMetric;
use crate::profile::{Profile, Shifted, Side, MAX_ORDER};

/// Outer end of the collar.
pub const COLLAR_END: f64 = 4.0;

const JET: usize = MAX_ORDER + 1;
type J = Jet<JET>;

/// Parameters of a collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarSpec {
    /// Width of the equidistant band inside the collar.
    pub delta0: f64,
    pub epsilon: f64,
    /// Growth rate of the exponential warp.
    pub ell: f64,
    /// Mollification width.
    pub delta: f64,
    /// `sqrt(w)` at the collar's inner edge.
    pub r0: f64,
    /// Geodesic curvature of the inner edge circle.
    pub kappa0: f64,
    pub period: f64,
}

impl CollarSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta0", self.delta0),
            ("epsilon", self.epsilon),
            ("ell", self.ell),
            ("delta", self.delta),
            ("r0", self.r0),
            ("kappa0", self.kappa0),
            ("period", self.period),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.delta >= 0.5 * self.epsilon {
            return Err(Error::InvalidArgument(format!(
                "delta = {} must be below epsilon / 2 = {}",
                self.delta,
                0.5 * self.epsilon
            )));
        }
        if self.tail_start() >= COLLAR_END {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} leaves no room for the hyperbolic tail",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Start of the constant curvature tail, `2 + 2 eps`.
    pub fn tail_start(&self) -> f64 {
        2.0 + 2.0 * self.epsilon
    }

    /// End of the deformation region, `1 + eps`.
    pub fn round_start(&self) -> f64 {
        1.0 + self.epsilon
    }

    /// Coefficient of `dtheta^2` in the unit-circle metric `ds^2`.
    pub fn circle_scale(&self) -> f64 {
        (TAU / self.period).powi(2)
    }

    /// `[-delta0, 0, 1 + eps, 2 + 2 eps, 4]`.
    pub fn breakpoints(&self) -> [f64; 5] {
        [
            -self.delta0,
            0.0,
            self.round_start(),
            self.tail_start(),
            COLLAR_END,
        ]
    }

    /// Spec for a collar on the outer circle `t = t_max` of `metric`.
    pub fn at_outer_circle(
        metric: &WarpedMetric,
        delta0: f64,
        epsilon: f64,
        ell: f64,
        delta: f64,
    ) -> Self {
        let d = metric
            .profile
            .derivatives_one_sided(metric.t_max, Side::Left);
        Self {
            delta0,
            epsilon,
            ell,
            delta,
            r0: d[0],
            kappa0: d[1] / d[0],
            period: metric.period,
        }
    }

    /// The flat model `r0 (1 + kappa0 t)` for the band below the collar.
    pub fn flat_band(&self) -> Arc<dyn Profile> {
        Arc::new(LinearProfile {
            r0: self.r0,
            kappa0: self.kappa0,
        })
    }
}

/// `r0 (1 + kappa0 t)`: a flat cone whose circle `t = 0` has length factor
/// `r0` and curvature `kappa0`.
#[derive(Debug, Clone, Copy)]
struct LinearProfile {
    r0: f64,
    kappa0: f64,
}

impl Profile for LinearProfile {
    fn derivatives(&self, t: f64) -> [f64; JET] {
        let mut d = [0.0; JET];
        d[0] = self.r0 * (1.0 + self.kappa0 * t);
        d[1] = self.r0 * self.kappa0;
        d
    }

    fn domain(&self) -> (f64, f64) {
        (-1.0 / self.kappa0, f64::INFINITY)
    }
}

/// Parameters of the tail `c (sinh(kappa (t + r)) / kappa)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub kappa: f64,
    pub r_tilde: f64,
}

/// Matches the tail to `w(at) = value`, `w'(at) = derivative` with
/// circle scale `scale`. With `F = sqrt(w / c)` the conditions read
/// `sinh(x) / kappa = F`, `cosh(x) = F'` for `x = kappa (at + r)`, which have
/// a solution with `x > 0` exactly when `F' > 1`. The closed form is
/// polished by Newton's method on the two conditions.
pub fn solve_tail(value: f64, derivative: f64, at: f64, scale: f64) -> Result<TailParams> {
    if !(value > 0.0) || !(scale > 0.0) {
        return Err(Error::InvalidArgument(
            "tail matching needs positive w and scale".into(),
        ));
    }
    let f = (value / scale).sqrt();
    let df = derivative / (2.0 * (value * scale).sqrt());
    if !(df > 1.0) {
        return Err(Error::TailInfeasible {
            value: f,
            derivative: df,
        });
    }
    let mut x = df.acosh();
    let mut kappa = (df * df - 1.0).sqrt() / f;
    for _ in 0..4 {
        let (s, c) = (x.sinh(), x.cosh());
        let r = [s / kappa - f, c - df];
        if r[0].abs() <= 1e-15 * f && r[1].abs() <= 1e-15 * df {
            break;
        }
        // unknowns (x, kappa)
        let a = [[c / kappa, -s / (kappa * kappa)], [s, 0.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 {
            break;
        }
        x -= (r[0] * a[1][1] - r[1] * a[0][1]) / det;
        kappa -= (a[0][0] * r[1] - a[1][0] * r[0]) / det;
    }
    Ok(TailParams {
        kappa,
        r_tilde: x / kappa - at,
    })
}

/// Region of a collar point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// The equidistant band and the surface inside it.
    Band,
    /// Deformation toward the exponential warp.
    Deform,
    /// Rounding toward the unit circle metric.
    Round,
    /// Constant curvature tail.
    Tail,
}

impl Region {
    pub fn tag(self) -> u8 {
        match self {
            Region::Band => 1,
            Region::Deform => 2,
            Region::Round => 3,
            Region::Tail => 4,
        }
    }
}

/// Regularity of the profile at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    Smooth,
    /// `C^{1,1}`: first derivatives match, second derivatives jump.
    Lipschitz,
    Mollified,
}

/// Collar profile. As a [`Profile`] it exposes `f = sqrt(w)`.
#[derive(Debug, Clone)]
pub struct Collar {
    pub spec: CollarSpec,
    /// Profile `f` of the band (`t <= 0`).
    pub band: Arc<dyn Profile>,
    pub tail: TailParams,
    /// Mollification width, once applied.
    pub mollified: Option<f64>,
}

/// Builds the collar over `band`, whose value and log-derivative at `t = 0`
/// must equal `spec.r0` and `spec.kappa0`.
pub fn build_collar(spec: &CollarSpec, band: Arc<dyn Profile>) -> Result<Collar> {
    spec.validate()?;
    let (lo, hi) = band.domain();
    if lo > -spec.delta0 || hi < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "band profile domain [{lo}, {hi}] does not cover [-delta0, 0]"
        )));
    }
    let d = band.derivatives(0.0);
    if (d[0] - spec.r0).abs() > 1e-9 * spec.r0
        || (d[1] / d[0] - spec.kappa0).abs() > 1e-9 * spec.kappa0.max(1.0)
    {
        return Err(Error::InvalidArgument(format!(
            "band profile gives r0 = {}, kappa0 = {} at t = 0, spec has {}, {}",
            d[0],
            d[1] / d[0],
            spec.r0,
            spec.kappa0
        )));
    }
    let mut collar = Collar {
        spec: *spec,
        band,
        tail: TailParams {
            kappa: 1.0,
            r_tilde: 0.0,
        },
        mollified: None,
    };
    let t = spec.tail_start();
    let w = collar.raw_jet(J::variable(t), Side::Left);
    collar.tail = solve_tail(w.c[0], w.c[1], t, spec.circle_scale())?;
    Ok(collar)
}

impl Collar {
    pub fn region(&self, t: f64) -> Region {
        if t < 0.0 {
            Region::Band
        } else if t < self.spec.round_start() {
            Region::Deform
        } else if t < self.spec.tail_start() {
            Region::Round
        } else {
            Region::Tail
        }
    }

    /// Breakpoints with their regularity.
    pub fn smoothness(&self) -> Vec<(f64, Smoothness)> {
        let s = &self.spec;
        let glued = if self.mollified.is_some() {
            Smoothness::Mollified
        } else {
            Smoothness::Lipschitz
        };
        vec![
            (-s.delta0, Smoothness::Smooth),
            (0.0, glued),
            (s.round_start(), Smoothness::Smooth),
            (s.tail_start(), glued),
            (COLLAR_END, Smoothness::Smooth),
        ]
    }

    /// Region whose formula applies at `t`, taking the branch on `side` at
    /// breakpoints.
    pub fn region_at(&self, t: f64, side: Side) -> Region {
        let r = self.region(t);
        let on_break = self.spec.breakpoints()[1..4].contains(&t);
        match (on_break, side, r) {
            (true, Side::Left, Region::Deform) => Region::Band,
            (true, Side::Left, Region::Round) => Region::Deform,
            (true, Side::Left, Region::Tail) => Region::Round,
            _ => r,
        }
    }

    /// Jet of the unmollified `w` along `t`, using the branch on `side` at
    /// breakpoints.
    pub fn raw_jet<const N: usize>(&self, t: Jet<N>, side: Side) -> Jet<N> {
        let s = &self.spec;
        let h = 2.0 * s.kappa0 * s.r0 * s.r0;
        let c = s.circle_scale();
        match self.region_at(t.value(), side) {
            Region::Band => {
                let d = self.band.derivatives_one_sided(t.value(), side);
                let mut f = Jet::<N>::constant(0.0);
                let mut fact = 1.0;
                for k in 0..N.min(JET) {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    f.c[k] = d[k] / fact;
                }
                let f = compose(&f, &t);
                f * f
            }
            Region::Deform => {
                let rho = smooth_step_jet(t + (-s.epsilon));
                rho * (s.r0 * s.r0) + exp_warp_jet(s.ell, t) * h
            }
            Region::Round => {
                let rho = smooth_step_jet(t + (-s.round_start()));
                let one = Jet::<N>::constant(1.0);
                exp_warp_jet(s.ell, t) * (rho * h + (one - rho) * c)
            }
            Region::Tail => {
                let k = self.tail.kappa;
                let (sh, _) = ((t + self.tail.r_tilde) * k).sinh_cosh();
                let f = sh * (c.sqrt() / k);
                f * f
            }
        }
    }

    /// Jet of `w`, mollified near the glued joints when requested.
    pub fn w_jet(&self, t: f64, side: Side) -> J {
        let var = J::variable(t);
        let raw = self.raw_jet(var, side);
        let Some(delta) = self.mollified else {
            return raw;
        };
        for b in [0.0, self.spec.tail_start()] {
            let dist = (t - b).abs();
            if dist >= delta {
                continue;
            }
            let q = 0.25 * delta;
            let smooth = self.convolve(t, b, q);
            if dist <= q {
                return smooth;
            }
            // blend weight, 1 within delta/4 of the joint and 0 beyond delta
            let sign = if t >= b { 1.0 } else { -1.0 };
            let beta = smooth_step_jet(((var + (-b)) * sign + (-q)) * (1.0 / (delta - q)));
            return raw + beta * (smooth - raw);
        }
        raw
    }

    /// `(phi_r * w)(t)` and its derivatives, as `int phi_r^(k)(t - y) w(y) dy`
    /// split at the joint `b`.
    fn convolve(&self, t: f64, b: f64, r: f64) -> J {
        let (nodes, weights) = gauss_legendre();
        let norm = mollifier_mass();
        let mut out = J::constant(0.0);
        let pieces = [
            (t - r, b.clamp(t - r, t + r), Side::Left),
            (b.clamp(t - r, t + r), t + r, Side::Right),
        ];
        for (lo, hi, side) in pieces {
            if hi <= lo {
                continue;
            }
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, wq) in nodes.iter().zip(weights) {
                let y = mid + half * x;
                let w = self.raw_jet(Jet::<1>::constant(y), side).value();
                // derivatives in t of phi((t - y) / r) / (r * mass)
                let u = (t - y) / r;
                let phi = bump_jet(J::variable(u)).derivatives();
                let mut scale = wq * half * w / (r * norm);
                let mut fact = 1.0;
                for k in 0..JET {
                    if k > 0 {
                        scale /= r;
                        fact *= k as f64;
                    }
                    out.c[k] += scale * phi[k] / fact;
                }
            }
        }
        out
    }

    /// `[w, w', w'']` at `t`.
    pub fn w(&self, t: f64) -> [f64; 3] {
        let d = self.w_jet(t, Side::Right).derivatives();
        [d[0], d[1], d[2]]
    }

    /// Gaussian curvature `-f''/f` of `dt^2 + w dtheta^2`.
    pub fn curvature(&self, t: f64, side: Side) -> f64 {
        let d = self.derivatives_one_sided(t, side);
        -d[2] / d[0]
    }

    /// The collar as a metric on `[-delta0, 4]`.
    pub fn metric(self) -> Result<WarpedMetric> {
        let (lo, period) = (-self.spec.delta0, self.spec.period);
        WarpedMetric::new(Arc::new(self), lo, COLLAR_END, period)
    }
}

/// Replaces the profile near `t = 0` and `t = 2 + 2 eps` by its convolution
/// with a bump of radius `delta / 4`, blended back to the raw profile over
/// `delta / 4 <= |t - joint| <= delta`. Values at least `delta` away from the
/// joints are untouched. The blend zone is three times the bump radius so
/// that the blend's own second derivative stays small against the profile's
/// curvature.
pub fn mollify_joints(collar: &Collar, delta: f64) -> Result<Collar> {
    let s = &collar.spec;
    if !(delta > 0.0) || delta >= 0.5 * s.epsilon {
        return Err(Error::InvalidArgument(format!(
            "mollification width {delta} must lie in (0, epsilon / 2)"
        )));
    }
    // the convolution reads w up to 5 delta / 4 from each joint
    let reach = 1.25 * delta;
    if -reach < collar.band.domain().0 {
        return Err(Error::Overlap(format!(
            "width {delta} reaches below the band profile's domain"
        )));
    }
    if s.tail_start() + reach >= COLLAR_END {
        return Err(Error::Overlap(format!(
            "width {delta} reaches the collar end"
        )));
    }
    Ok(Collar {
        mollified: Some(delta),
        ..collar.clone()
    })
}

impl Profile for Collar {
    fn derivatives(&self, t: f64) -> [f64; JET] {
        self.derivatives_one_sided(t, Side::Right)
    }

    fn derivatives_one_sided(&self, t: f64, side: Side) -> [f64; JET] {
        self.w_jet(t, side).sqrt().derivatives()
    }

    // the tail formula continues past the collar end, so geodesics can
    // overshoot the outer circle while their exit is located
    fn domain(&self) -> (f64, f64) {
        (self.band.domain().0, f64::INFINITY)
    }

    fn joints(&self) -> Vec<f64> {
        if self.mollified.is_some() {
            Vec::new()
        } else {
            vec![0.0, self.spec.tail_start()]
        }
    }
}

/// `sum_k a_k (t - t0)^k` composed with a jet `t` whose value is `t0`.
fn compose<const N: usize>(taylor: &Jet<N>, t: &Jet<N>) -> Jet<N> {
    let mut dt = *t;
    dt.c[0] = 0.0;
    let mut out = Jet::<N>::constant(0.0);
    for k in (0..N).rev() {
        out = out * dt + taylor.c[k];
    }
    out
}

fn bump_jet(u: J) -> J {
    if u.value().abs() >= 1.0 {
        return J::constant(0.0);
    }
    let one = J::constant(1.0);
    (-(one / (one - u * u))).exp()
}

const NODES: usize = 64;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let step = p1 / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

fn mollifier_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let (x, w) = gauss_legendre();
        // split at 0 for a rule twice as fine on the flat ends
        x.iter()
            .zip(w)
            .map(|(x, w)| {
                let a = bump_jet(J::constant(0.5 * (x - 1.0))).value();
                let b = bump_jet(J::constant(0.5 * (x + 1.0))).value();
                0.5 * w * (a + b)
            })
            .sum()
    })
}

/// Profile of `metric` in collar coordinates, `t = 0` on its outer circle.
pub fn band_of(metric: &WarpedMetric) -> Arc<dyn Profile> {
    Arc::new(Shifted {
        inner: metric.profile.clone(),
        shift: metric.t_max,
    })
}

/// `metric` with `collar` attached at its outer circle; the result lives on
/// `[t_min, t_max + 4]`. It agrees with `metric` below `t_max`, or below
/// `t_max - delta` when the collar is mollified. Extend `metric`
/// equidistantly by `delta0` first to keep the original boundary untouched.
pub fn glue(metric: &WarpedMetric, collar: Collar) -> Result<WarpedMetric> {
    let profile = Shifted {
        inner: Arc::new(collar),
        shift: -metric.t_max,
    };
    WarpedMetric::new(
        Arc::new(profile),
        metric.t_min,
        metric.t_max + COLLAR_END,
        metric.period,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::step::{exp_warp, smooth_step};
    use approx::assert_relative_eq;

    fn reference(ell: f64) -> CollarSpec {
        CollarSpec {
            delta0: 0.05,
            epsilon: 0.1,
            ell,
            delta: 0.04,
            r0: 1.0,
            kappa0: 1.0,
            period: TAU,
        }
    }

    #[test]
    fn tail_round_trip() {
        let at: f64 = 2.2;
        let x: f64 = 2.0 * (at + 0.1);
        let w = (x.sinh() / 2.0).powi(2);
        let dw = 2.0 * (x.sinh() / 2.0) * x.cosh();
        let tail = solve_tail(w, dw, at, 1.0).unwrap();
        assert_relative_eq!(tail.kappa, 2.0, epsilon = 1e-10);
        assert_relative_eq!(tail.r_tilde, 0.1, epsilon = 1e-10);
        // kappa is close to F'/F here, so it follows the slope proportionally
        let mut prev = tail.kappa;
        for i in 1..=20 {
            let scale = 1.0 + 0.005 * i as f64;
            let bent = solve_tail(w, scale * dw, at, 1.0).unwrap();
            let step = bent.kappa / prev - 1.0;
            assert!(step > 0.0 && step < 0.006, "{bent:?}");
            prev = bent.kappa;
        }
        assert!(prev / tail.kappa - 1.0 < 0.101);
        assert!(matches!(
            solve_tail(1.0, 1.0, at, 1.0),
            Err(Error::TailInfeasible { .. })
        ));
    }

    #[test]
    fn branches_meet() {
        let spec = reference(8.0);
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        // value formulas at the two inner joints
        assert_relative_eq!(c.w(0.0)[0], 1.0, epsilon = 1e-15);
        let b = spec.round_start();
        let expect = exp_warp(8.0, b) * 2.0;
        let l = c.raw_jet(Jet::<3>::variable(b), Side::Left).value();
        let r = c.raw_jet(Jet::<3>::variable(b), Side::Right).value();
        assert_relative_eq!(l, expect, max_relative = 1e-15);
        assert_relative_eq!(r, expect, max_relative = 1e-15);
        for b in [0.0, spec.round_start(), spec.tail_start()] {
            let l = c.raw_jet(Jet::<3>::variable(b), Side::Left);
            let r = c.raw_jet(Jet::<3>::variable(b), Side::Right);
            assert!((l.c[0] - r.c[0]).abs() <= 1e-12 * r.c[0]);
            assert!((l.c[1] - r.c[1]).abs() <= 1e-10 * r.c[1]);
        }
        // the step is 1 on the whole first region's left part
        assert_eq!(smooth_step(-spec.epsilon), 1.0);
    }

    #[test]
    fn tail_has_constant_curvature() {
        let spec = reference(8.0);
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        let k2 = c.tail.kappa.powi(2);
        for i in 0..=50 {
            let t = spec.tail_start() + (COLLAR_END - spec.tail_start()) * i as f64 / 50.0;
            assert!((c.curvature(t, Side::Right) + k2).abs() <= 1e-8);
        }
    }

    #[test]
    fn tail_curvature_grows_with_the_warp() {
        let mut prev = 0.0;
        for ell in [2.0, 4.0, 8.0, 16.0] {
            let spec = reference(ell);
            let k = build_collar(&spec, spec.flat_band()).unwrap().tail.kappa;
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn invalid_specs() {
        let spec = CollarSpec {
            delta: 0.05,
            ..reference(8.0)
        };
        assert!(matches!(
            build_collar(&spec, spec.flat_band()),
            Err(Error::InvalidArgument(_))
        ));
        let spec = reference(8.0);
        let other = CollarSpec {
            kappa0: 2.0,
            ..spec
        }
        .flat_band();
        assert!(matches!(
            build_collar(&spec, other),
            Err(Error::InvalidArgument(_))
        ));
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        assert!(matches!(
            mollify_joints(&c, 0.06),
            Err(Error::InvalidArgument(_))
        ));
        let narrow = CollarSpec {
            epsilon: 0.95,
            delta: 0.4,
            delta0: 0.8,
            ..spec
        };
        let c = build_collar(&narrow, narrow.flat_band()).unwrap();
        assert!(matches!(mollify_joints(&c, 0.4), Err(Error::Overlap(_))));
    }

    #[test]
    fn mollification_is_local() {
        let spec = reference(8.0);
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        let m = mollify_joints(&c, spec.delta).unwrap();
        for i in 0..=400 {
            let t = -spec.delta0 + (COLLAR_END + spec.delta0) * i as f64 / 400.0;
            let near = t.abs() < spec.delta || (t - spec.tail_start()).abs() < spec.delta;
            if !near {
                assert_eq!(c.w(t), m.w(t), "t = {t}");
            }
        }
    }

    #[test]
    fn mollified_second_derivative_is_continuous() {
        let spec = reference(2.0);
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        let m = mollify_joints(&c, spec.delta).unwrap();
        // the raw profile jumps in w'' at t = 0
        let jump = c
            .raw_jet(Jet::<3>::variable(0.0), Side::Right)
            .derivative(2)
            - c.raw_jet(Jet::<3>::variable(0.0), Side::Left).derivative(2);
        assert!(jump.abs() > 1.0);
        let h = 1e-6;
        for b in [0.0, spec.tail_start()] {
            let (l, r) = (m.w(b - h)[2], m.w(b + h)[2]);
            assert!((l - r).abs() < 1e-3 * jump.abs(), "b = {b}: {l} vs {r}");
        }
    }

    #[test]
    fn mollification_error_is_quadratic() {
        let spec = reference(2.0);
        let c = build_collar(&spec, spec.flat_band()).unwrap();
        let widths = [0.04, 0.02, 0.01, 0.005];
        let change: Vec<f64> = widths
            .iter()
            .map(|&d| {
                let m = mollify_joints(&c, d).unwrap();
                (0..=200)
                    .map(|i| {
                        let t = -d + 2.0 * d * i as f64 / 200.0;
                        (m.w(t)[0] - c.w(t)[0]).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for pair in change.windows(2) {
            let slope = (pair[0] / pair[1]).log2();
            assert!((slope - 2.0).abs() < 0.2, "{change:?}");
        }
    }
}
