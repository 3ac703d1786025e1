//! Dormand-Prince 5(4) pair with PI step-size control.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// C2..C5 document the autonomous stage abscissae
const _: [f64; 4] = [C2, C3, C4, C5];

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (a, k) in terms {
        for i in 0..N {
            out[i] += h * a * k[i];
        }
    }
    out
}

/// One step of size `h` from `y` for the autonomous system `y' = f(y)`.
///
/// Returns the fifth-order solution, its derivative (reusable as the next
/// first stage) and the embedded error estimate vector.
pub fn step<const N: usize, F>(
    f: &F,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<([f64; N], [f64; N], [f64; N])>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(&combo(y, h, &[(A21, k1)]))?;
    let k3 = f(&combo(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(&combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(&combo(
        y,
        h,
        &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ))?;
    let k6 = f(&combo(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ))?;
    let y1 = combo(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = f(&y1)?;
    let mut e = [0.0; N];
    for i in 0..N {
        e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y1, k7, e))
}

/// Single step that computes its own first stage; used to re-step to event
/// locations from the start of an accepted step.
pub fn step_from<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    if h == 0.0 {
        return Ok(*y);
    }
    let k1 = f(y)?;
    Ok(step(f, y, &k1, h)?.0)
}

/// Tolerances and step bounds for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Adaptive {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            h_init: 1e-2,
            h_max: 0.5,
            h_min: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

/// Outcome of an accepted-step callback.
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `y' = f(y)` from time 0 to `t_end`, calling `on_step(t0, y0,
/// h, y1)` after every accepted step. The callback may modify `y1` (for
/// renormalization) or stop the run. Stage evaluation failures are treated
/// as rejected steps; a step size below `h_min` is an error.
pub fn integrate<const N: usize, F, C>(
    opts: &Adaptive,
    f: &F,
    y0: [f64; N],
    t_end: f64,
    mut on_step: C,
) -> Result<(f64, [f64; N])>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
    C: FnMut(f64, &[f64; N], f64, &mut [f64; N]) -> Result<Control>,
{
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y)?;
    let mut h = opts.h_init.min(opts.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let mut last_error: Option<Error> = None;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { time: t, step: h });
        }
        steps += 1;
        let h_try = h.min(t_end - t);
        if h_try < opts.h_min && t_end - t > opts.h_min {
            return Err(last_error.unwrap_or(Error::StepUnderflow {
                time: t,
                step: h_try,
            }));
        }
        match step(f, &y, &k1, h_try) {
            Ok((mut y1, k7, e)) => {
                let mut s = 0.0;
                for i in 0..N {
                    let sc = opts.tol + opts.tol * y[i].abs().max(y1[i].abs());
                    s += (e[i] / sc).powi(2);
                }
                let err = (s / N as f64).sqrt();
                if !err.is_finite() {
                    h = h_try * 0.2;
                    continue;
                }
                if err <= 1.0 {
                    let t0 = t;
                    let y_prev = y;
                    t += h_try;
                    let before = y1;
                    let ctl = on_step(t0, &y_prev, h_try, &mut y1)?;
                    k1 = if y1 == before { k7 } else { f(&y1)? };
                    y = y1;
                    if let Control::Stop = ctl {
                        return Ok((t, y));
                    }
                    let fac = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
                    };
                    err_prev = err.max(1e-4);
                    h = (h_try * fac).min(opts.h_max);
                } else {
                    h = h_try * (0.9 * err.powf(-0.2)).max(0.2);
                }
            }
            Err(e) => {
                last_error = Some(e);
                h = h_try * 0.25;
            }
        }
    }
    Ok((t, y))
}
