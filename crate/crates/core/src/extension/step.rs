//! The smooth step and the exponential warp used by collars.

use crate::jet::Jet;

fn psi<const N: usize>(x: Jet<N>) -> Jet<N> {
    if x.value() <= 0.0 {
        Jet::constant(0.0)
    } else {
        (-(Jet::constant(1.0) / x)).exp()
    }
}

/// Nonincreasing `C^inf` step, `1` on `(-inf, 0]` and `0` on `[1, inf)`:
/// `psi(1 - x) / (psi(1 - x) + psi(x))` with `psi(x) = exp(-1/x)` for `x > 0`.
pub fn smooth_step_jet<const N: usize>(x: Jet<N>) -> Jet<N> {
    let v = x.value();
    if v <= 0.0 {
        return Jet::constant(1.0);
    }
    if v >= 1.0 {
        return Jet::constant(0.0);
    }
    let one = Jet::constant(1.0);
    let a = psi(one - x);
    a / (a + psi(x))
}

pub fn smooth_step(x: f64) -> f64 {
    smooth_step_jet(Jet::<1>::constant(x)).value()
}

/// `(exp(ell t) - 1) / ell`, as a jet in `t`.
pub fn exp_warp_jet<const N: usize>(ell: f64, t: Jet<N>) -> Jet<N> {
    let mut out = (t * ell).exp() * (1.0 / ell);
    out.c[0] = exp_warp(ell, t.value());
    out
}

/// `(exp(ell t) - 1) / ell`, accurate for small `ell t`.
pub fn exp_warp(ell: f64, t: f64) -> f64 {
    (ell * t).exp_m1() / ell
}
