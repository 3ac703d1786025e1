//! Truncated Taylor series in one variable.
//!
//! A `Jet<N>` stores the coefficients `c[k] = f^{(k)}(t0) / k!` for `k < N`.
//! Arithmetic propagates them exactly (up to rounding), which gives exact
//! derivatives of closed-form profiles and fields without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    /// The independent variable `t0 + s` expanded at `s = 0`.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = t0;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    /// `t0 + slope * s`.
    pub fn line(t0: f64, slope: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = t0;
        if N > 1 {
            c[1] = slope;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative with respect to the expansion variable.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    pub fn derivatives(&self) -> [f64; N] {
        let mut out = self.c;
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            fact *= k as f64;
            *o *= fact;
        }
        out
    }

    pub fn scale(mut self, a: f64) -> Self {
        for v in &mut self.c {
            *v *= a;
        }
        self
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; N];
        e[0] = self.c[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut l = [0.0; N];
        l[0] = a0.ln();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * l[j] * self.c[k - j];
            }
            l[k] = (self.c[k] - s / k as f64) / a0;
        }
        Self { c: l }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..N {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let ja = j as f64 * self.c[j];
                ss += ja * c[k - j];
                cc += ja * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn sinh_cosh(&self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        s[0] = self.c[0].sinh();
        c[0] = self.c[0].cosh();
        for k in 1..N {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let ja = j as f64 * self.c[j];
                ss += ja * c[k - j];
                cc += ja * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn tanh(&self) -> Self {
        let (s, c) = self.sinh_cosh();
        s / c
    }

    pub fn sqrt(&self) -> Self {
        let mut r = [0.0; N];
        r[0] = self.c[0].sqrt();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += r[j] * r[k - j];
            }
            r[k] = (self.c[k] - s) / (2.0 * r[0]);
        }
        Self { c: r }
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return Self::constant(1.0) / self.powi(-n);
        }
        let mut out = Self::constant(1.0);
        let mut base = *self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }

    /// Real power with a constant exponent; requires a positive base unless
    /// the exponent is an integer.
    pub fn powf(&self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        let a0 = self.c[0];
        let mut y = [0.0; N];
        y[0] = a0.powf(p);
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((p + 1.0) * j as f64 - k as f64) * self.c[j] * y[k - j];
            }
            y[k] = s / (k as f64 * a0);
        }
        Self { c: y }
    }

    pub fn pow(&self, e: &Self) -> Self {
        if e.c[1..].iter().all(|&v| v == 0.0) {
            return self.powf(e.c[0]);
        }
        (*e * self.ln()).exp()
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for k in 0..N {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for k in 0..N {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * o.c[k - j];
            }
            c[k] = s;
        }
        Self { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; N];
        for k in 0..N {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= o.c[j] * q[k - j];
            }
            q[k] = s / o.c[0];
        }
        Self { c: q }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] += o;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.scale(o)
    }
}
