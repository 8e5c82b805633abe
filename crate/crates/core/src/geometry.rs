//! Star-shaped C^{1,1} domains, their boundary frame and structured polar meshes.
//!
//! Meshes are built as `x = r·γ(t)` over a grid of radial levels `r ∈ [0, 1]`
//! and curve parameters `t ∈ [0, 2π)`: one centre node, then ring after ring.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::mesh::TriMesh;
use crate::num::{abs, atan2, cos, cross, gauss_on, hypot, norm, sin, sq, wrap_tau, TAU, V2};

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCurve {
    Disk { radius: f64 },
    /// Polar graph `ρ(t) = R(1 + Σ a_k cos(m_k t))`.
    Fourier { radius: f64, coeffs: Vec<(f64, u32)> },
    /// `(a cos t, b sin t)`.
    Ellipse { a: f64, b: f64 },
}

impl BoundaryCurve {
    fn polar_radius(&self, t: f64) -> (f64, f64, f64) {
        match self {
            BoundaryCurve::Disk { radius } => (*radius, 0.0, 0.0),
            BoundaryCurve::Fourier { radius, coeffs } => {
                let mut r = 1.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for &(a, m) in coeffs {
                    let m = m as f64;
                    r += a * cos(m * t);
                    d1 -= a * m * sin(m * t);
                    d2 -= a * m * m * cos(m * t);
                }
                (radius * r, radius * d1, radius * d2)
            }
            BoundaryCurve::Ellipse { .. } => unreachable!(),
        }
    }

    /// `(γ, γ′, γ″)` at parameter `t`.
    pub fn eval(&self, t: f64) -> (V2, V2, V2) {
        let (c, s) = (cos(t), sin(t));
        match self {
            BoundaryCurve::Ellipse { a, b } => ([a * c, b * s], [-a * s, b * c], [-a * c, -b * s]),
            _ => {
                let (r, r1, r2) = self.polar_radius(t);
                let p = [r * c, r * s];
                let d1 = [r1 * c - r * s, r1 * s + r * c];
                let d2 = [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s];
                (p, d1, d2)
            }
        }
    }

    pub fn point(&self, t: f64) -> V2 {
        self.eval(t).0
    }

    pub fn speed(&self, t: f64) -> f64 {
        norm(self.eval(t).1)
    }

    /// Signed curvature `(x′y″ − y′x″)/|γ′|³`.
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d1, d2) = self.eval(t);
        cross(d1, d2) / sq(norm(d1)) / norm(d1)
    }

    /// Outward normal and unit tangent at parameter `t`; `τ = ν⊥`.
    pub fn frame(&self, t: f64) -> (V2, V2) {
        let (_, d1, _) = self.eval(t);
        let l = norm(d1);
        let nu = [d1[1] / l, -d1[0] / l];
        (nu, [-nu[1], nu[0]])
    }

    /// `(r, t)` with `x = r·γ(t)`.
    pub fn polar_coords(&self, x: V2) -> (f64, f64) {
        match self {
            BoundaryCurve::Ellipse { a, b } => {
                let (p, q) = (x[0] / a, x[1] / b);
                (hypot(p, q), wrap_tau(atan2(q, p)))
            }
            _ => {
                let t = wrap_tau(atan2(x[1], x[0]));
                (hypot(x[0], x[1]) / self.polar_radius(t).0, t)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BoundaryCurve::Disk { radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(invalid("radius must be positive"));
                }
            }
            BoundaryCurve::Ellipse { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(invalid("ellipse semi-axes must be positive"));
                }
            }
            BoundaryCurve::Fourier { radius, coeffs } => {
                if !(*radius > 0.0) {
                    return Err(invalid("radius must be positive"));
                }
                if coeffs.iter().any(|&(a, m)| !a.is_finite() || m == 0) {
                    return Err(invalid("Fourier modes must be finite with mode ≥ 1"));
                }
                let n = 4096;
                for k in 0..n {
                    let t = TAU * k as f64 / n as f64;
                    let (r, _, _) = self.polar_radius(t);
                    if !(r > 1e-3 * radius) {
                        return Err(Error::Geometry(format!(
                            "perturbed radius collapses to {r:.3e} at t = {t:.4}"
                        )));
                    }
                    if !self.curvature(t).is_finite() {
                        return Err(Error::Geometry(format!("infinite curvature at t = {t:.4}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `∫_{t0}^{t1} |γ′| dt` by Gauss-Legendre.
    pub fn arc_length(&self, t0: f64, t1: f64) -> f64 {
        gauss_on(t0, t1, 16).iter().map(|&(t, w)| w * self.speed(t)).sum()
    }

    fn sector(&self, t0: f64, t1: f64) -> f64 {
        gauss_on(t0, t1, 16)
            .iter()
            .map(|&(t, w)| {
                let (p, d1, _) = self.eval(t);
                w * cross(p, d1)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub t: f64,
    /// Arc length from `t = 0`.
    pub s: f64,
    pub normal: V2,
    pub tangent: V2,
    pub curvature: f64,
    /// `|γ′(t)|`.
    pub speed: f64,
    /// Trapezoid weight for `ds`; sums to the perimeter.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Indices into `Domain::boundary`.
    pub a: usize,
    pub b: usize,
    /// The triangle carrying this edge.
    pub tri: usize,
    pub dt: f64,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub curve: BoundaryCurve,
    pub mesh: TriMesh,
    /// Radial levels, `radial[0] = 0`, last = 1.
    pub radial: Vec<f64>,
    /// Curve parameters of the angular grid, increasing in `[0, 2π)`.
    pub params: Vec<f64>,
    pub boundary: Vec<BoundaryNode>,
    pub edges: Vec<BoundaryEdge>,
    pub perimeter: f64,
    /// Exact area `½∮γ×γ′`.
    pub area: f64,
}

pub fn make_disk(radius: f64, n_r: usize, n_theta: usize) -> Result<Domain> {
    check_resolution(n_r, n_theta)?;
    Domain::build(BoundaryCurve::Disk { radius }, uniform_levels(n_r), uniform_params(n_theta))
}

pub fn make_perturbed_disk(coeffs: &[(f64, u32)], n_r: usize, n_theta: usize) -> Result<Domain> {
    check_resolution(n_r, n_theta)?;
    let curve = if coeffs.iter().all(|c| c.0 == 0.0) {
        BoundaryCurve::Disk { radius: 1.0 }
    } else {
        BoundaryCurve::Fourier { radius: 1.0, coeffs: coeffs.to_vec() }
    };
    Domain::build(curve, uniform_levels(n_r), uniform_params(n_theta))
}

pub fn make_ellipse(a: f64, b: f64, n_r: usize, n_theta: usize) -> Result<Domain> {
    check_resolution(n_r, n_theta)?;
    Domain::build(BoundaryCurve::Ellipse { a, b }, uniform_levels(n_r), uniform_params(n_theta))
}

fn check_resolution(n_r: usize, n_theta: usize) -> Result<()> {
    if n_r < 4 || n_theta < 8 {
        return Err(invalid(format!("resolution too small: n_r = {n_r}, n_theta = {n_theta}")));
    }
    Ok(())
}

pub fn uniform_levels(n_r: usize) -> Vec<f64> {
    (0..=n_r).map(|i| i as f64 / n_r as f64).collect()
}

pub fn uniform_params(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Radial levels with a uniform interior of spacing `h_max` and geometric
/// refinement (ratio `growth`) down to spacing `h_min` at the boundary.
pub fn boundary_graded_levels(h_min: f64, h_max: f64, growth: f64) -> Vec<f64> {
    let mut steps = Vec::new();
    let mut h = h_min;
    let mut acc = 0.0;
    while h < h_max && acc + h < 1.0 {
        steps.push(h);
        acc += h;
        h *= growth;
    }
    let rest = 1.0 - acc;
    let n_uni = libm::ceil(rest / h_max).max(1.0) as usize;
    let mut levels = Vec::with_capacity(n_uni + steps.len() + 1);
    for i in 0..=n_uni {
        levels.push(rest * i as f64 / n_uni as f64);
    }
    let mut r = rest;
    for h in steps.iter().rev() {
        r += h;
        levels.push(r);
    }
    let last = levels.len() - 1;
    levels[last] = 1.0;
    levels
}

/// Angular parameters with base spacing `h_max`, refined geometrically toward each
/// of `centers` down to `h_min` (an exact node is put at every centre).
pub fn graded_params(centers: &[f64], h_min: f64, h_max: f64, growth: f64) -> Vec<f64> {
    let spacing = |t: f64| -> f64 {
        let mut h = h_max;
        for &c in centers {
            let d = abs(crate::num::wrap_pi(t - c));
            // spacing grows linearly away from the centre: h(d) = h_min + (growth-1)·d
            let hd = h_min + (growth - 1.0) * d;
            if hd < h {
                h = hd;
            }
        }
        h
    };
    let mut pts: Vec<f64> = Vec::new();
    if centers.is_empty() {
        let n = libm::ceil(TAU / h_max) as usize;
        return uniform_params(n.max(8));
    }
    let mut cs: Vec<f64> = centers.iter().map(|&c| wrap_tau(c)).collect();
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (k, &c) in cs.iter().enumerate() {
        let next = if k + 1 < cs.len() { cs[k + 1] } else { cs[0] + TAU };
        // march forward from c to next with the local spacing, then rescale to land exactly
        let mut seg = alloc::vec![c];
        let mut t = c;
        while t < next {
            t += spacing(t);
            seg.push(t);
        }
        let n_steps = seg.len() - 1;
        let scale = (next - c) / (seg[n_steps] - c);
        for p in seg.iter().take(n_steps) {
            pts.push(wrap_tau(c + (p - c) * scale));
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| abs(*a - *b) < 1e-15);
    pts
}

impl Domain {
    /// Structured polar mesh over `x = r·γ(t)`.
    pub fn build(curve: BoundaryCurve, radial: Vec<f64>, params: Vec<f64>) -> Result<Domain> {
        curve.validate()?;
        let n_r = radial.len() - 1;
        let nt = params.len();
        if n_r < 1 || nt < 3 {
            return Err(invalid("need at least one ring and three angular nodes"));
        }
        if radial[0] != 0.0 || abs(radial[n_r] - 1.0) > 1e-15 || radial.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("radial levels must increase from 0 to 1"));
        }
        if params[0] < 0.0 || params[nt - 1] >= TAU || params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("curve parameters must increase within [0, 2π)"));
        }
        let gam: Vec<V2> = params.iter().map(|&t| curve.point(t)).collect();
        let mut nodes = Vec::with_capacity(1 + n_r * nt);
        nodes.push([0.0, 0.0]);
        for &r in &radial[1..] {
            for g in &gam {
                nodes.push([r * g[0], r * g[1]]);
            }
        }
        let id = |i: usize, j: usize| 1 + (i - 1) * nt + (j % nt);
        let next_t = |j: usize| if j + 1 < nt { params[j + 1] } else { params[0] + TAU };
        let sectors: Vec<f64> = (0..nt).map(|j| curve.sector(params[j], next_t(j))).collect();

        let mut tris = Vec::with_capacity(nt * (2 * n_r - 1));
        let mut quad_measure = Vec::with_capacity(nt * (2 * n_r - 1));
        for j in 0..nt {
            tris.push([0, id(1, j), id(1, j + 1)]);
            quad_measure.push(0.5 * sq(radial[1]) * sectors[j]);
        }
        for i in 1..n_r {
            for j in 0..nt {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                tris.push([a, b, c]);
                tris.push([a, c, d]);
                let q = 0.5 * (sq(radial[i + 1]) - sq(radial[i])) * sectors[j];
                quad_measure.push(q);
                quad_measure.push(q);
            }
        }
        let straight = TriMesh::new(nodes, tris, None)
            .map_err(|e| Error::Geometry(format!("mesh construction failed: {e}")))?;
        // split each curved quad between its two triangles in proportion to straight area
        let mut measure = straight.area.clone();
        for j in 0..nt {
            measure[j] = quad_measure[j];
        }
        let mut k = nt;
        while k < straight.n_tris() {
            let (a0, a1) = (straight.area[k], straight.area[k + 1]);
            let q = quad_measure[k];
            measure[k] = q * a0 / (a0 + a1);
            measure[k + 1] = q * a1 / (a0 + a1);
            k += 2;
        }
        let mesh = TriMesh::new(straight.nodes, straight.tris, Some(measure))
            .map_err(|e| Error::Geometry(format!("curved cell measures invalid: {e}")))?;

        let mut boundary = Vec::with_capacity(nt);
        let mut edges = Vec::with_capacity(nt);
        let mut s = 0.0;
        let first_ring_tri = |j: usize| nt + 2 * ((n_r - 2) * nt + j);
        for j in 0..nt {
            let t = params[j];
            let (nu, tau) = curve.frame(t);
            let t_prev = if j == 0 { params[nt - 1] - TAU } else { params[j - 1] };
            let speed = curve.speed(t);
            boundary.push(BoundaryNode {
                node: id(n_r, j),
                t,
                s,
                normal: nu,
                tangent: tau,
                curvature: curve.curvature(t),
                speed,
                weight: 0.5 * speed * (next_t(j) - t_prev),
            });
            let length = curve.arc_length(t, next_t(j));
            edges.push(BoundaryEdge {
                a: j,
                b: (j + 1) % nt,
                tri: if n_r == 1 { j } else { first_ring_tri(j) },
                dt: next_t(j) - t,
                length,
            });
            s += length;
        }
        // arc coordinate of t = 0 may precede the first node
        let offset = if params[0] > 0.0 { curve.arc_length(0.0, params[0]) } else { 0.0 };
        for b in boundary.iter_mut() {
            b.s += offset;
        }
        let area = 0.5 * sectors.iter().sum::<f64>();
        Ok(Domain { curve, mesh, radial, params, boundary, edges, perimeter: s, area })
    }

    pub fn n_rings(&self) -> usize {
        self.radial.len() - 1
    }

    pub fn n_theta(&self) -> usize {
        self.params.len()
    }

    /// Mesh node at ring `i ≥ 1`, angular index `j`.
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        1 + (i - 1) * self.n_theta() + (j % self.n_theta())
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().map(|b| b.node)
    }

    /// Mask of nodes lying on ∂Ω.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut m = alloc::vec![false; self.mesh.n_nodes()];
        for b in &self.boundary {
            m[b.node] = true;
        }
        m
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.curve, BoundaryCurve::Disk { .. })
    }

    /// Curve parameter at arc length `s ∈ [0, L)`.
    pub fn param_at(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s < self.perimeter) {
            return Err(invalid(format!("arc length {s} outside [0, {})", self.perimeter)));
        }
        if let BoundaryCurve::Disk { radius } = self.curve {
            return Ok(s / radius);
        }
        // locate the interval by the arc coordinates of the nodes, then Newton
        let (mut t0, mut s0) = (0.0, 0.0);
        for b in &self.boundary {
            if b.s <= s {
                t0 = b.t;
                s0 = b.s;
            }
        }
        if self.boundary[0].s > s {
            t0 = 0.0;
            s0 = 0.0;
        }
        let mut t = t0 + (s - s0) / self.curve.speed(t0);
        for _ in 0..50 {
            let f = s0 + self.curve.arc_length(t0, t) - s;
            let dt = f / self.curve.speed(t);
            t -= dt;
            if abs(dt) < 1e-15 {
                break;
            }
        }
        Ok(t)
    }

    /// Arc length of the curve parameter `t ∈ [0, 2π)`.
    pub fn arc_at(&self, t: f64) -> f64 {
        if let BoundaryCurve::Disk { radius } = self.curve {
            return radius * t;
        }
        self.curve.arc_length(0.0, t)
    }

    /// Triangle containing `x` (or the nearest one when `x` is in the sliver
    /// between a chord and the curved boundary) and its barycentrics.
    pub fn locate(&self, x: V2) -> (usize, [f64; 3]) {
        let (r, t) = self.curve.polar_coords(x);
        let nt = self.n_theta();
        let n_r = self.n_rings();
        let j = match self.params.partition_point(|&p| p <= t) {
            0 => nt - 1,
            k => k - 1,
        };
        let i = self.radial.partition_point(|&q| q <= r).saturating_sub(1).min(n_r - 1);
        let candidates: Vec<usize> = if i == 0 {
            alloc::vec![j]
        } else {
            let base = nt + 2 * ((i - 1) * nt + j);
            alloc::vec![base, base + 1]
        };
        let mut best = (candidates[0], [0.0; 3], f64::NEG_INFINITY);
        for &c in &candidates {
            let l = self.mesh.barycentric(c, x);
            let m = l[0].min(l[1]).min(l[2]);
            if m > best.2 {
                best = (c, l, m);
            }
        }
        (best.0, best.1)
    }

    /// P1 interpolation of nodal values at `x`.
    pub fn interpolate<const D: usize>(&self, values: &[[f64; D]], x: V2) -> [f64; D] {
        let (t, l) = self.locate(x);
        let tri = self.mesh.tris[t];
        let mut out = [0.0; D];
        for k in 0..3 {
            for d in 0..D {
                out[d] += l[k] * values[tri[k]][d];
            }
        }
        out
    }

    /// `∫_{∂Ω} κ ds` by the boundary trapezoid rule.
    pub fn total_curvature(&self) -> f64 {
        crate::num::sum(self.boundary.iter().map(|b| b.curvature * b.weight))
    }

    /// Estimate of the tubular-neighbourhood radius: `1/max κ⁺` capped by half
    /// the smallest distance between boundary nodes a quarter perimeter apart.
    pub fn reach_estimate(&self) -> f64 {
        let kmax = self.boundary.iter().map(|b| b.curvature).fold(0.0, f64::max);
        let mut reach = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
        let nb = self.boundary.len();
        let step = (nb / 16).max(1);
        for a in (0..nb).step_by(step) {
            for b in (0..nb).step_by(step) {
                let ds = abs(self.boundary[a].s - self.boundary[b].s);
                let ds = ds.min(self.perimeter - ds);
                if ds > 0.25 * self.perimeter {
                    let p = self.mesh.nodes[self.boundary[a].node];
                    let q = self.mesh.nodes[self.boundary[b].node];
                    reach = reach.min(0.5 * hypot(p[0] - q[0], p[1] - q[1]));
                }
            }
        }
        reach
    }
}

/// `(ν, τ)` at arc length `s`.
pub fn boundary_frame(domain: &Domain, s: f64) -> Result<(V2, V2)> {
    let t = domain.param_at(s)?;
    Ok(domain.curve.frame(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn disk_basics() {
        let d = make_disk(1.0, 16, 64).unwrap();
        assert!((d.perimeter - TAU).abs() < 1e-12);
        assert!((d.total_curvature() - TAU).abs() < 1e-12);
        assert!((d.mesh.total_measure() - PI).abs() < 1e-12);
        for b in &d.boundary {
            assert!((b.curvature - 1.0).abs() < 1e-12);
            assert_eq!(b.tangent, [-b.normal[1], b.normal[0]]);
        }
    }

    #[test]
    fn frame_at_zero_and_half() {
        let d = make_disk(1.0, 8, 32).unwrap();
        let (nu, tau) = boundary_frame(&d, 0.0).unwrap();
        assert!((nu[0] - 1.0).abs() < 1e-15 && nu[1].abs() < 1e-15);
        assert!(tau[0].abs() < 1e-15 && (tau[1] - 1.0).abs() < 1e-15);
        let (nu, tau) = boundary_frame(&d, PI).unwrap();
        assert!((nu[0] + 1.0).abs() < 1e-12 && (tau[1] + 1.0).abs() < 1e-12);
        assert!(boundary_frame(&d, TAU).is_err());
        assert!(boundary_frame(&d, -0.1).is_err());
    }

    #[test]
    fn ellipse_curvature_at_vertex() {
        let d = make_ellipse(2.0, 1.0, 8, 64).unwrap();
        assert!((d.boundary[0].curvature - 2.0).abs() < 1e-12);
        assert!((d.total_curvature() - TAU).abs() < 1e-6 * TAU);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(make_disk(0.0, 8, 32).is_err());
        assert!(make_disk(1.0, 3, 32).is_err());
        assert!(make_disk(1.0, 8, 7).is_err());
        assert!(matches!(
            make_perturbed_disk(&[(1.2, 2)], 8, 32),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn locate_interpolates_linear_functions() {
        let d = make_perturbed_disk(&[(0.1, 3)], 10, 48).unwrap();
        let f: Vec<[f64; 1]> = d.mesh.nodes.iter().map(|p| [3.0 * p[0] - p[1]]).collect();
        for &(x, y) in &[(0.1, 0.2), (-0.5, 0.3), (0.0, -0.7), (0.01, 0.0)] {
            let v = d.interpolate(&f, [x, y]);
            assert!((v[0] - (3.0 * x - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn graded_levels_and_params_are_monotone() {
        let l = boundary_graded_levels(1e-4, 0.05, 1.2);
        assert_eq!(l[0], 0.0);
        assert_eq!(*l.last().unwrap(), 1.0);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!((1.0 - l[l.len() - 2] - 1e-4).abs() < 1e-12);
        let p = graded_params(&[0.0, PI], 1e-4, 0.05, 1.2);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p[0], 0.0);
        assert!(p.iter().any(|&t| (t - PI).abs() < 1e-14));
        assert!(p[1] < 2e-4);
    }
}
