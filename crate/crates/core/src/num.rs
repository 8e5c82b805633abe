//! Scalar helpers shared by every module.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use libm::{atan, atan2, ceil, cos, exp, fabs as abs, floor, hypot, log as ln, pow, round, sin, sqrt};

pub const TAU: f64 = 2.0 * PI;

pub type V2 = [f64; 2];

#[inline]
pub fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Scalar cross product `a × b = a₁b₂ − a₂b₁`.
#[inline]
pub fn cross(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: V2) -> f64 {
    hypot(a[0], a[1])
}

#[inline]
pub fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Rotation by +π/2.
#[inline]
pub fn perp(a: V2) -> V2 {
    [-a[1], a[0]]
}

#[inline]
pub fn sq(x: f64) -> f64 {
    x * x
}

/// Representative of `x` modulo 2π in `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x - TAU * floor(x / TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Representative of `x` modulo 2π in `[0, 2π)`.
pub fn wrap_tau(x: f64) -> f64 {
    let y = x - TAU * floor(x / TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Neumaier-compensated sum; order-deterministic.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if abs(self.s) >= abs(x) {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if abs(dz) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    x.iter().zip(w.iter()).map(|(&xi, &wi)| (c + h * xi, h * wi)).collect()
}

/// Least-squares line `y ≈ a x + b`; returns `(a, b, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = sum(x.iter().copied()) / n;
    let my = sum(y.iter().copied()) / n;
    let sxx = sum(x.iter().map(|&xi| sq(xi - mx)));
    let sxy = sum(x.iter().zip(y).map(|(&xi, &yi)| (xi - mx) * (yi - my)));
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rms = sqrt(sum(x.iter().zip(y).map(|(&xi, &yi)| sq(yi - a * xi - b))) / n);
    (a, b, rms)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
