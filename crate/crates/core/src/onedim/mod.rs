//! One-dimensional nonlocal reduction: the functional `F_ε` on an interval,
//! truncations, the rearrangement and co-area inequalities, half-plane
//! Poisson extension, and half-disk fields around a boundary vortex.

mod halfdisk;

pub use halfdisk::{
    halfdisk_energy, higher_multiplicity_profile, minimize_f_eps, peierls_energy_oracle, peierls_profile, ArcData,
    FEpsMinimizer, HalfDiskEnergy, HalfDiskField, HalfDiskMesh, HalfDiskResolution,
};

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::num::{atan, cos, floor, gauss_legendre, ln, sin, sq, Sum};

/// Piecewise-linear phase `φ` on the nodes `x` (strictly increasing, usually uniform).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub eps: f64,
}

impl Profile1D {
    pub fn new(x: Vec<f64>, values: Vec<f64>, eps: f64) -> Result<Self> {
        if x.len() < 2 || x.len() != values.len() {
            return Err(invalid("profile needs at least two nodes and one value per node"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("profile nodes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) || !(eps > 0.0) {
            return Err(invalid("profile values must be finite and eps positive"));
        }
        Ok(Profile1D { x, values, eps })
    }

    /// `n` uniform elements on `(a, b)` sampled from `f`.
    pub fn uniform(a: f64, b: f64, n: usize, eps: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(invalid("need b > a and at least one element"));
        }
        let x: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let values = x.iter().map(|&t| f(t)).collect();
        Profile1D::new(x, values, eps)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn max_spacing(&self) -> f64 {
        self.x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Node spacing below `ε/4`.
    pub fn resolved(&self) -> bool {
        self.max_spacing() < 0.25 * self.eps
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.values[0];
        }
        if t >= self.x[n - 1] {
            return self.values[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let s = (t - self.x[k]) / (self.x[k + 1] - self.x[k]);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile1D {
        Profile1D { x: self.x.clone(), values: self.values.iter().map(|&v| f(v)).collect(), eps: self.eps }
    }

    /// Same function with extra nodes where it crosses any of `levels`.
    pub fn refine_at_levels(&self, levels: &[f64]) -> Profile1D {
        let mut x = vec![self.x[0]];
        let mut v = vec![self.values[0]];
        for k in 0..self.x.len() - 1 {
            let (x0, x1, v0, v1) = (self.x[k], self.x[k + 1], self.values[k], self.values[k + 1]);
            let mut cuts: Vec<f64> = levels
                .iter()
                .filter(|&&l| (l - v0) * (l - v1) < 0.0)
                .map(|&l| (l - v0) / (v1 - v0))
                .filter(|&s| s > 1e-12 && s < 1.0 - 1e-12)
                .collect();
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for s in cuts {
                let xs = x0 + s * (x1 - x0);
                if xs > *x.last().unwrap() {
                    x.push(xs);
                    v.push(v0 + s * (v1 - v0));
                }
            }
            x.push(x1);
            v.push(v1);
        }
        Profile1D { x, values: v, eps: self.eps }
    }
}

fn slope(p: &Profile1D, e: usize) -> f64 {
    (p.values[e + 1] - p.values[e]) / (p.x[e + 1] - p.x[e])
}

struct Rules {
    polar: Vec<(f64, f64)>,
    g: [Vec<(f64, f64)>; 4],
}

fn rules() -> Rules {
    let unit = |n: usize| {
        let (x, w) = gauss_legendre(n);
        x.iter().zip(&w).map(|(&xi, &wi)| (0.5 * (xi + 1.0), 0.5 * wi)).collect::<Vec<_>>()
    };
    Rules { polar: unit(24), g: [unit(2), unit(3), unit(5), unit(8)] }
}

/// `∫_e ∫_f ((φ(s)−φ(t))/(s−t))²` for two elements sharing the node between them
/// (`f = e + 1`): the integrand depends only on the polar angle about that node.
fn adjacent_pair(p: &Profile1D, e: usize, r: &Rules) -> f64 {
    let a = p.x[e + 1] - p.x[e];
    let b = p.x[e + 2] - p.x[e + 1];
    let (m1, m2) = (slope(p, e), slope(p, e + 1));
    let tc = libm::atan2(a, b);
    let q = |th: f64| {
        let (c, s) = (cos(th), sin(th));
        sq((m2 * c + m1 * s) / (c + s))
    };
    let mut acc = 0.0;
    for &(u, w) in &r.polar {
        let th = u * tc;
        acc += w * tc * q(th) * 0.5 * sq(b / cos(th));
        let th = tc + u * (0.5 * PI - tc);
        acc += w * (0.5 * PI - tc) * q(th) * 0.5 * sq(a / sin(th));
    }
    acc
}

fn far_pair(p: &Profile1D, e: usize, f: usize, r: &Rules) -> f64 {
    let (xe, le) = (p.x[e], p.x[e + 1] - p.x[e]);
    let (xf, lf) = (p.x[f], p.x[f + 1] - p.x[f]);
    let gap = xf - (xe + le);
    let size = le.max(lf);
    let rule = if gap < 1.5 * size {
        &r.g[3]
    } else if gap < 4.5 * size {
        &r.g[2]
    } else if gap < 16.5 * size {
        &r.g[1]
    } else {
        &r.g[0]
    };
    let (ve, me) = (p.values[e], slope(p, e));
    let (vf, mf) = (p.values[f], slope(p, f));
    let mut acc = 0.0;
    for &(u, wu) in rule {
        let s = u * le;
        let ps = ve + me * s;
        for &(v, wv) in rule {
            let t = v * lf;
            let pt = vf + mf * t;
            acc += wu * wv * sq((ps - pt) / (xe + s - xf - t));
        }
    }
    acc * le * lf
}

/// `∬_{I×I} ((φ(s)−φ(t))/(s−t))² ds dt` for the piecewise-linear profile.
pub fn nonlocal_seminorm(p: &Profile1D) -> f64 {
    let r = rules();
    let n = p.x.len() - 1;
    let mut total = Sum::new();
    for e in 0..n {
        let l = p.x[e + 1] - p.x[e];
        let mut row = sq(slope(p, e) * l);
        if e + 1 < n {
            row += 2.0 * adjacent_pair(p, e, &r);
        }
        for f in e + 2..n {
            row += 2.0 * far_pair(p, e, f, &r);
        }
        total.add(row);
    }
    total.value()
}

/// `∫_I sin²φ`.
pub fn anchoring_integral(p: &Profile1D) -> f64 {
    let (x, w) = gauss_legendre(4);
    let mut s = Sum::new();
    for e in 0..p.x.len() - 1 {
        let l = p.x[e + 1] - p.x[e];
        for (xi, wi) in x.iter().zip(&w) {
            let u = 0.5 * (xi + 1.0);
            let v = p.values[e] + u * (p.values[e + 1] - p.values[e]);
            s.add(0.5 * wi * l * sq(sin(v)));
        }
    }
    s.value()
}

/// `F_ε(φ; I) = (1/2π)∬|(φ(s)−φ(t))/(s−t)|² + (1/2πε)∫ sin²φ`.
pub fn f_eps(p: &Profile1D) -> f64 {
    (nonlocal_seminorm(p) + anchoring_integral(p) / p.eps) / (2.0 * PI)
}

/// `T_kφ − kπ` with `T_kφ = (φ ∧ (k+1)π) ∨ kπ`, exact (crossing points become nodes).
pub fn truncate(p: &Profile1D, k: i64) -> Profile1D {
    let lo = k as f64 * PI;
    let hi = lo + PI;
    p.refine_at_levels(&[lo, hi]).map(|v| v.clamp(lo, hi) - lo)
}

/// Profile refined at every level `jπ` it crosses, with its nonzero band truncations.
#[derive(Debug, Clone)]
pub struct Truncations {
    pub refined: Profile1D,
    pub parts: Vec<(i64, Profile1D)>,
}

impl Truncations {
    /// `F_ε(φ) − Σ_j F_ε(φ^{(j)})`, nonnegative in exact arithmetic.
    pub fn superadditivity_margin(&self) -> f64 {
        f_eps(&self.refined) - self.parts.iter().map(|(_, q)| f_eps(q)).sum::<f64>()
    }
}

pub fn truncations(p: &Profile1D) -> Truncations {
    let lo = p.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = p.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k0 = floor(lo / PI) as i64;
    let k1 = (floor(hi / PI) as i64).max(k0);
    let levels: Vec<f64> = (k0..=k1 + 1).map(|k| k as f64 * PI).collect();
    let refined = p.refine_at_levels(&levels);
    let parts = (k0..=k1)
        .map(|k| {
            let l = k as f64 * PI;
            (k, refined.map(|v| v.clamp(l, l + PI) - l))
        })
        .filter(|(_, q)| q.values.iter().any(|&v| v != 0.0 && v != PI))
        .collect();
    Truncations { refined, parts }
}

/// `∫_α∫_β |s−t|^{−2}` for disjoint intervals; infinite when they touch.
pub fn interval_pair(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (l, r) = if a.1 <= b.0 { (a, b) } else { (b, a) };
    if r.0 - l.1 <= 0.0 {
        return f64::INFINITY;
    }
    ln((r.0 - l.0) * (r.1 - l.1) / ((r.0 - l.1) * (r.1 - l.0)))
}

fn normalise(set: &[(f64, f64)], i: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let mut s: Vec<(f64, f64)> = set.to_vec();
    if s.iter().any(|&(a, b)| !(b > a) || a < i.0 || b > i.1) {
        return Err(invalid("intervals must be nonempty and inside I"));
    }
    s.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    if s.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(invalid("intervals of one union must not overlap"));
    }
    Ok(s)
}

fn measure(s: &[(f64, f64)]) -> f64 {
    s.iter().map(|(a, b)| b - a).sum()
}

fn union_pair(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut s = Sum::new();
    for &x in a {
        for &y in b {
            s.add(interval_pair(x, y));
        }
    }
    s.value()
}

fn check_disjoint(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<()> {
    for &x in a {
        for &y in b {
            if x.0.max(y.0) < x.1.min(y.1) {
                return Err(invalid("A and B overlap"));
            }
        }
    }
    Ok(())
}

/// `(∫_A∫_B |s−t|^{−2}, log[(|I|−|A|)(|I|−|B|)/(|I|(|I|−|A|−|B|))])`.
pub fn rearrangement_bound(a: &[(f64, f64)], b: &[(f64, f64)], i: (f64, f64)) -> Result<(f64, f64)> {
    let a = normalise(a, i)?;
    let b = normalise(b, i)?;
    check_disjoint(&a, &b)?;
    let (ma, mb, mi) = (measure(&a), measure(&b), i.1 - i.0);
    if ma + mb >= mi {
        return Err(invalid("|A| + |B| must be smaller than |I|"));
    }
    let rhs = ln((mi - ma) * (mi - mb) / (mi * (mi - ma - mb)));
    Ok((union_pair(&a, &b), rhs))
}

/// Variant for `|B| ≥ c|I|`: `(lhs, log(1 + c|A|/|P|))` with `P = I ∖ (A ∪ B)`.
pub fn rearrangement_bound_fraction(a: &[(f64, f64)], b: &[(f64, f64)], i: (f64, f64), c: f64) -> Result<(f64, f64)> {
    let (lhs, _) = rearrangement_bound(a, b, i)?;
    let (ma, mb, mi) = (measure(a), measure(b), i.1 - i.0);
    if !(c > 0.0 && c < 1.0) || mb < c * mi {
        return Err(invalid("need c in (0, 1) with |B| ≥ c|I|"));
    }
    Ok((lhs, ln(1.0 + c * ma / (mi - ma - mb))))
}

/// Sublevel/superlevel sets of a piecewise-linear profile: `{φ > c}` or `{φ < c}`.
fn level_set(p: &Profile1D, c: f64, above: bool) -> Vec<(f64, f64)> {
    let inside = |v: f64| if above { v > c } else { v < c };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut push = |a: f64, b: f64| {
        if b <= a {
            return;
        }
        if let Some(last) = out.last_mut() {
            if last.1 == a {
                last.1 = b;
                return;
            }
        }
        out.push((a, b));
    };
    for e in 0..p.x.len() - 1 {
        let (x0, x1, v0, v1) = (p.x[e], p.x[e + 1], p.values[e], p.values[e + 1]);
        let (i0, i1) = (inside(v0), inside(v1));
        if i0 && i1 {
            push(x0, x1);
        } else if i0 != i1 {
            let xc = x0 + (c - v0) / (v1 - v0) * (x1 - x0);
            if i0 {
                push(x0, xc);
            } else {
                push(xc, x1);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ThetaReport {
    pub gammas: Vec<f64>,
    pub theta: Vec<f64>,
    /// `∬|(φ(s)−φ(t))/(s−t)|²`.
    pub lhs: f64,
    /// Right-endpoint Stieltjes sum of `∫(1−2γ/π)² dΘ` (a lower bound for the integral).
    pub stieltjes: f64,
    pub monotone: bool,
}

impl ThetaReport {
    pub fn margin(&self) -> f64 {
        self.lhs - self.stieltjes
    }
}

/// Co-area quantity `Θ_φ(γ) = ∬_{E_γ×E_γ} |(φ̂(s)−φ̂(t))/(s−t)|²` on an increasing
/// grid in `[0, π/2)`, with `φ̂` the `{0, π}`-valued rounding of `φ`.
pub fn theta_coarea(p: &Profile1D, gammas: &[f64]) -> Result<ThetaReport> {
    if p.values.iter().any(|&v| !(-1e-12..=PI + 1e-12).contains(&v)) {
        return Err(invalid("theta_coarea needs 0 ≤ φ ≤ π"));
    }
    if gammas.windows(2).any(|w| w[1] <= w[0]) || gammas.iter().any(|&g| !(0.0..=0.5 * PI).contains(&g)) {
        return Err(invalid("gamma grid must be increasing inside [0, π/2]"));
    }
    let theta: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            let a = level_set(p, PI - g, true);
            let b = level_set(p, g, false);
            2.0 * PI * PI * union_pair(&a, &b)
        })
        .collect();
    let monotone = theta.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs());
    let mut st = 0.0;
    let mut prev = 0.0;
    for (k, &g) in gammas.iter().enumerate() {
        let t = theta[k];
        if t.is_finite() {
            st += sq(1.0 - 2.0 * g / PI) * (t - prev);
            prev = t;
        }
    }
    Ok(ThetaReport { gammas: gammas.to_vec(), theta, lhs: nonlocal_seminorm(p), stieltjes: st, monotone })
}

/// Bounded harmonic extension to the upper half-plane of a trace given by a
/// profile on `(a, b)` and its end values continued as constants.
#[derive(Debug, Clone)]
pub struct PoissonTrace {
    pub profile: Profile1D,
}

impl PoissonTrace {
    /// Convolution with `y/(π(x²+y²))`, exact for the piecewise-linear trace.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let p = &self.profile;
        let n = p.x.len();
        if y <= 0.0 {
            return p.eval(x);
        }
        let at = |s: f64| atan((s - x) / y);
        let lg = |s: f64| ln(sq(s - x) + sq(y));
        let mut acc = p.values[0] * (at(p.x[0]) + 0.5 * PI) / PI + p.values[n - 1] * (0.5 * PI - at(p.x[n - 1])) / PI;
        for e in 0..n - 1 {
            let (s1, s2) = (p.x[e], p.x[e + 1]);
            let m = slope(p, e);
            let vx = p.values[e] + m * (x - s1);
            acc += vx / PI * (at(s2) - at(s1)) + m * y / (2.0 * PI) * (lg(s2) - lg(s1));
        }
        acc
    }
}

pub fn poisson_extension(trace: &Profile1D, points: &[(f64, f64)]) -> Vec<f64> {
    let pt = PoissonTrace { profile: trace.clone() };
    points.iter().map(|&(x, y)| pt.eval(x, y)).collect()
}

/// Harmonic extension of `g̃_r`: `g` on `(−r, r)` and `g(r²/x)` for `|x| > r`.
pub fn reflected_extension(g: &Profile1D, r: f64, x: f64, y: f64) -> f64 {
    let inner = PoissonTrace { profile: g.clone() }.eval(x, y);
    let (a, b) = g.interval();
    // remove the constant tails counted by `eval`, then add the inverted part
    let tail = |s0: f64, left: bool| -> f64 {
        let t = atan((s0 - x) / y);
        if left {
            (t + 0.5 * PI) / PI
        } else {
            (0.5 * PI - t) / PI
        }
    };
    let mut acc = inner - g.values[0] * tail(a, true) - g.values[g.values.len() - 1] * tail(b, false);
    // ∫_{|s|>r} P_y(x−s) g(r²/s) ds = ∫_{|σ|<r} P_y(x − r²/σ) g(σ) r²/σ² dσ
    let (gx, gw) = gauss_legendre(16);
    for e in 0..g.x.len() - 1 {
        let (s1, s2) = (g.x[e], g.x[e + 1]);
        for (xi, wi) in gx.iter().zip(&gw) {
            let sig = 0.5 * (s1 + s2) + 0.5 * (s2 - s1) * xi;
            if sig == 0.0 {
                continue;
            }
            let s = r * r / sig;
            let ker = y / (PI * (sq(x - s) + sq(y))) * r * r / sq(sig);
            acc += 0.5 * (s2 - s1) * wi * ker * g.eval(sig);
        }
    }
    acc
}
