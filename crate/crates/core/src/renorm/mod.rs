//! Renormalised energy of boundary vortices, recovery fields and the
//! two-term energy expansion sweep.

mod recovery;
mod sweep;

pub use recovery::{recovery_domain, recovery_field, RecoveryOptions};
pub use sweep::{
    gamma_sweep_minimize, gamma_sweep_recovery, GammaRecord, GammaReport, MinimizeSweepOptions, SweepFit,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{boundary_graded_levels, graded_params, BoundaryCurve, Domain};
use crate::jacobian::VortexSet;
use crate::lifting::{bv_limit_lifting, BVLimitLifting};
use crate::mesh::harmonic_solve;
use crate::num::{atan2, cos, cross, dot, hypot, linear_fit, ln, round, sin, sq, Sum, V2};

/// Core constant `π(1 − log 4π)` of a single boundary vortex.
pub fn gamma0() -> f64 {
    PI * (1.0 - ln(4.0 * PI))
}

/// `W = −2π Σ_{k<j} d_k d_j log|a_k − a_j|` on the disk of radius `r`.
pub fn w_disk(vortices: &VortexSet, r: f64) -> Result<f64> {
    if vortices.vortices.iter().any(|v| v.d.abs() != 1) {
        return Err(invalid("closed-form renormalised energy needs multiplicities ±1"));
    }
    let pts: Vec<(V2, f64)> = vortices.vortices.iter().map(|v| ([r * cos(v.t), r * sin(v.t)], v.d as f64)).collect();
    let mut w = 0.0;
    for k in 0..pts.len() {
        for j in k + 1..pts.len() {
            let dist = hypot(pts[k].0[0] - pts[j].0[0], pts[k].0[1] - pts[j].0[1]);
            if dist < 1e-14 * r {
                return Err(Error::Singular(format!("vortices {k} and {j} coincide")));
            }
            w -= 2.0 * PI * pts[k].1 * pts[j].1 * ln(dist);
        }
    }
    Ok(w)
}

/// Angle of `x − q` measured from the inward normal `−ν`, in `(−π, π]`; the
/// branch cut is the outward ray from `q`.
#[inline]
pub(crate) fn local_angle(x: V2, q: V2, nu: V2) -> f64 {
    let v = [x[0] - q[0], x[1] - q[1]];
    let m = [-nu[0], -nu[1]];
    atan2(cross(m, v), dot(m, v))
}

#[inline]
pub(crate) fn local_angle_grad(x: V2, q: V2) -> V2 {
    let v = [x[0] - q[0], x[1] - q[1]];
    let r2 = sq(v[0]) + sq(v[1]);
    [-v[1] / r2, v[0] / r2]
}

/// `φ* = Σ d_j θ_j + h`: the singular angles about the vortices plus a nodal
/// harmonic correction carrying the remaining (continuous) boundary data.
#[derive(Debug, Clone)]
pub struct SingularHarmonic {
    pub poles: Vec<(V2, V2, f64)>,
    /// Nodal values of the regular part.
    pub regular: Vec<f64>,
}

impl SingularHarmonic {
    pub fn singular_part(&self, x: V2) -> f64 {
        self.poles.iter().map(|(a, nu, d)| d * local_angle(x, *a, *nu)).sum()
    }

    pub fn value_at_node(&self, domain: &Domain, i: usize) -> f64 {
        self.singular_part(domain.mesh.nodes[i]) + self.regular[i]
    }
}

/// Harmonic extension of arbitrary nodal boundary data (no singularities).
pub fn harmonic_extend_data(domain: &Domain, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() != domain.boundary.len() {
        return Err(invalid("one datum per boundary node required"));
    }
    let fixed: Vec<(usize, f64)> = domain.boundary.iter().zip(data).map(|(b, &v)| (b.node, v)).collect();
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    harmonic_solve(&domain.mesh, &fixed, &vec![mean; domain.mesh.n_nodes()], 1e-12)
}

/// Harmonic extension of the limit lifting, split into its singular angles
/// (one per jump of `φ₀`) and a nodal regular part.
pub fn harmonic_extend(domain: &Domain, phi0: &BVLimitLifting) -> Result<SingularHarmonic> {
    let poles: Vec<(V2, V2, f64)> = phi0
        .jumps
        .iter()
        .map(|&(t, h)| (domain.curve.point(t), domain.curve.frame(t).0, round(-h / PI)))
        .collect();
    let sh = SingularHarmonic { poles, regular: Vec::new() };
    let nb = domain.boundary.len();
    let mut resid = vec![0.0; nb];
    let mut at_pole = vec![false; nb];
    for (k, b) in domain.boundary.iter().enumerate() {
        let x = domain.mesh.nodes[b.node];
        if sh.poles.iter().any(|(a, _, _)| hypot(x[0] - a[0], x[1] - a[1]) < 1e-12) {
            at_pole[k] = true;
            continue;
        }
        resid[k] = phi0.values[k] - sh.singular_part(x);
    }
    // the residual is continuous; remove 2π ambiguities relative to the first node
    for k in 0..nb {
        if !at_pole[k] {
            let r0 = resid.iter().zip(&at_pole).find(|(_, &p)| !p).map(|(r, _)| *r).unwrap_or(0.0);
            resid[k] = r0 + crate::num::wrap_pi(resid[k] - r0);
        }
    }
    for k in 0..nb {
        if at_pole[k] {
            let prev = (k + nb - 1) % nb;
            let next = (k + 1) % nb;
            resid[k] = 0.5 * (resid[prev] + resid[next]);
        }
    }
    let regular = harmonic_extend_data(domain, &resid)?;
    Ok(SingularHarmonic { regular, ..sh })
}

/// Degree-5 seven-point rule on a triangle, barycentric `(λ₀, λ₁)` and weight.
const TRI7: [(f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 0.225),
    (0.059715871789770, 0.470142064105115, 0.132394152788506),
    (0.470142064105115, 0.059715871789770, 0.132394152788506),
    (0.470142064105115, 0.470142064105115, 0.132394152788506),
    (0.797426985353087, 0.101286507323456, 0.125939180544827),
    (0.101286507323456, 0.797426985353087, 0.125939180544827),
    (0.101286507323456, 0.101286507323456, 0.125939180544827),
];

fn seg_dist(c: V2, p: V2, q: V2) -> f64 {
    let e = [q[0] - p[0], q[1] - p[1]];
    let l2 = sq(e[0]) + sq(e[1]);
    let s = if l2 > 0.0 { (((c[0] - p[0]) * e[0] + (c[1] - p[1]) * e[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    hypot(c[0] - p[0] - s * e[0], c[1] - p[1] - s * e[1])
}

fn point_in_tri(c: V2, p: [V2; 3]) -> bool {
    let s = |a: V2, b: V2| cross([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
    s(p[0], p[1]) >= 0.0 && s(p[1], p[2]) >= 0.0 && s(p[2], p[0]) >= 0.0
}

/// `∫_T f` over the part of the triangle outside every ball, subdividing cells
/// that are cut by a ball or large relative to their distance from a centre.
pub(crate) fn integrate_outside(p: [V2; 3], f: &dyn Fn(V2) -> f64, balls: &[(V2, f64)], depth: usize) -> f64 {
    let area = 0.5 * cross([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
    let diam = hypot(p[1][0] - p[0][0], p[1][1] - p[0][1])
        .max(hypot(p[2][0] - p[1][0], p[2][1] - p[1][1]))
        .max(hypot(p[0][0] - p[2][0], p[0][1] - p[2][1]));
    let mut cut = false;
    let mut near = false;
    for &(c, rho) in balls {
        let dmax = p.iter().map(|v| hypot(v[0] - c[0], v[1] - c[1])).fold(0.0, f64::max);
        if dmax <= rho {
            return 0.0;
        }
        let dmin = if point_in_tri(c, p) {
            0.0
        } else {
            seg_dist(c, p[0], p[1]).min(seg_dist(c, p[1], p[2])).min(seg_dist(c, p[2], p[0]))
        };
        if dmin < rho {
            cut = true;
        }
        if diam > 0.25 * dmin.max(rho) {
            near = true;
        }
    }
    if (cut || near) && depth > 0 {
        let m01 = [0.5 * (p[0][0] + p[1][0]), 0.5 * (p[0][1] + p[1][1])];
        let m12 = [0.5 * (p[1][0] + p[2][0]), 0.5 * (p[1][1] + p[2][1])];
        let m20 = [0.5 * (p[2][0] + p[0][0]), 0.5 * (p[2][1] + p[0][1])];
        return integrate_outside([p[0], m01, m20], f, balls, depth - 1)
            + integrate_outside([m01, p[1], m12], f, balls, depth - 1)
            + integrate_outside([m20, m12, p[2]], f, balls, depth - 1)
            + integrate_outside([m01, m12, m20], f, balls, depth - 1);
    }
    let mut s = 0.0;
    for &(l0, l1, w) in &TRI7 {
        let l2 = 1.0 - l0 - l1;
        let x = [l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0], l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1]];
        if balls.iter().any(|&(c, rho)| hypot(x[0] - c[0], x[1] - c[1]) < rho) {
            continue;
        }
        s += w * f(x);
    }
    s * area
}

/// `∫_{Ω∖∪B_ρ(a_j)} |∇φ*|²` with the singular gradients evaluated exactly.
pub fn dirichlet_outside_balls(domain: &Domain, sh: &SingularHarmonic, rho: f64) -> f64 {
    let m = &domain.mesh;
    let balls: Vec<(V2, f64)> = sh.poles.iter().map(|(a, _, _)| (*a, rho)).collect();
    let mut total = Sum::new();
    for t in 0..m.n_tris() {
        let gh = m.grad_scalar(t, &sh.regular);
        let f = |x: V2| {
            let mut g = gh;
            for (a, _, d) in &sh.poles {
                let gs = local_angle_grad(x, *a);
                g[0] += d * gs[0];
                g[1] += d * gs[1];
            }
            sq(g[0]) + sq(g[1])
        };
        let tri = m.tris[t];
        let p = [m.nodes[tri[0]], m.nodes[tri[1]], m.nodes[tri[2]]];
        // straight cells: rescale to the curved measure
        let scale = m.measure[t] / m.area[t];
        total.add(scale * integrate_outside(p, &f, &balls, 6));
    }
    total.value()
}

/// Mesh graded toward the boundary and toward the vortex parameters.
pub fn singular_domain(curve: BoundaryCurve, vortices: &VortexSet, h_min: f64) -> Result<Domain> {
    let centres: Vec<f64> = vortices.vortices.iter().map(|v| v.t).collect();
    let levels = boundary_graded_levels(h_min, 1.0 / 32.0, 1.12);
    let params = graded_params(&centres, h_min, core::f64::consts::TAU / 256.0, 1.12);
    Domain::build(curve, levels, params)
}

#[derive(Debug, Clone)]
pub struct RenormResult {
    pub w: f64,
    /// `(ρ, ∫_{Ω_ρ}|∇φ*|² − Nπ log(1/ρ))`.
    pub intermediates: Vec<(f64, f64)>,
    /// RMS residual of the linear extrapolation in ρ.
    pub fit_residual: f64,
}

/// Renormalised energy by singularity splitting, evaluated along a decreasing
/// ρ-schedule and extrapolated linearly to ρ = 0 from the last three values.
pub fn w_numeric(domain: &Domain, vortices: &VortexSet, rho_schedule: &[f64]) -> Result<RenormResult> {
    if vortices.vortices.iter().any(|v| v.d.abs() != 1) {
        return Err(invalid("renormalised energy needs multiplicities ±1"));
    }
    if rho_schedule.len() < 3 || rho_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("need at least three decreasing radii"));
    }
    let rho_min = *rho_schedule.last().unwrap();
    let h_near = local_spacing(domain, vortices);
    if h_near > 0.25 * rho_min {
        return Err(Error::Resolution(format!(
            "mesh spacing {h_near:.3e} near the vortices is too coarse for rho = {rho_min:.3e}"
        )));
    }
    let sh = harmonic_extend(domain, &bv_limit_lifting(domain, vortices)?)?;
    let n = vortices.len() as f64;
    let inter: Vec<(f64, f64)> = rho_schedule
        .iter()
        .map(|&rho| (rho, dirichlet_outside_balls(domain, &sh, rho) - n * PI * ln(1.0 / rho)))
        .collect();
    let tail = &inter[inter.len() - 3..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (_, b, res) = linear_fit(&xs, &ys);
    // successive differences must shrink for the limit to be trusted
    let diffs: Vec<f64> = inter.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    if diffs.windows(2).any(|w| w[1] > 1.05 * w[0] + 1e-9) {
        return Err(Error::Resolution(format!("intermediate values are not Cauchy: {inter:?}")));
    }
    Ok(RenormResult { w: b, intermediates: inter, fit_residual: res })
}

/// Largest mesh edge among cells touching a vortex position.
fn local_spacing(domain: &Domain, vortices: &VortexSet) -> f64 {
    let m = &domain.mesh;
    let mut h: f64 = 0.0;
    for v in &vortices.vortices {
        let a = domain.curve.point(v.t);
        for (t, tri) in m.tris.iter().enumerate() {
            let c = m.centroid(t);
            if hypot(c[0] - a[0], c[1] - a[1]) < 0.05 {
                let near = tri.iter().any(|&i| hypot(m.nodes[i][0] - a[0], m.nodes[i][1] - a[1]) < 1e-9);
                if near {
                    for k in 0..3 {
                        let (p, q) = (m.nodes[tri[k]], m.nodes[tri[(k + 1) % 3]]);
                        h = h.max(hypot(p[0] - q[0], p[1] - q[1]));
                    }
                }
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use crate::jacobian::Vortex;

    fn pair(t1: f64, t2: f64) -> VortexSet {
        VortexSet::new(vec![Vortex { t: t1, d: 1 }, Vortex { t: t2, d: 1 }]).unwrap()
    }

    #[test]
    fn gamma0_value() {
        assert!((gamma0() + 4.809854).abs() < 1e-5);
        assert!((gamma0() - (PI + PI * ln(1.0 / (4.0 * PI)))).abs() < 1e-14);
        assert!(gamma0() < 0.0);
    }

    #[test]
    fn disk_formula() {
        assert!((w_disk(&pair(0.0, PI), 1.0).unwrap() + 2.0 * PI * ln(2.0)).abs() < 1e-12);
        let d = 1.3;
        let w = w_disk(&pair(0.2, 0.2 + d), 1.0).unwrap();
        assert!((w + 2.0 * PI * ln(2.0 * sin(d / 2.0))).abs() < 1e-12);
        let rot = w_disk(&pair(1.2, 1.2 + d), 1.0).unwrap();
        assert!((w - rot).abs() < 1e-12);
        let r = 2.5;
        assert!((w_disk(&pair(0.2, 0.2 + d), r).unwrap() - (w - 2.0 * PI * ln(r))).abs() < 1e-12);
        let dbl = VortexSet::new(vec![Vortex { t: 0.0, d: 2 }]).unwrap();
        assert!(w_disk(&dbl, 1.0).is_err());
    }

    #[test]
    fn extension_of_smooth_data() {
        let d = make_disk(1.0, 16, 64).unwrap();
        let data: Vec<f64> = d.boundary.iter().map(|b| sin(b.t)).collect();
        let h = harmonic_extend_data(&d, &data).unwrap();
        let e = d.mesh.dirichlet_scalar(&h);
        assert!((e - PI).abs() < 2e-3 * PI, "{e}");
        let c = harmonic_extend_data(&d, &vec![0.7; d.boundary.len()]).unwrap();
        assert!(c.iter().all(|v| (v - 0.7).abs() < 1e-10));
    }

    #[test]
    fn disk_regular_part_is_constant() {
        let vs = pair(0.0, PI);
        let d = singular_domain(BoundaryCurve::Disk { radius: 1.0 }, &vs, 0.01).unwrap();
        let sh = harmonic_extend(&d, &bv_limit_lifting(&d, &vs).unwrap()).unwrap();
        let (lo, hi) = sh.regular.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo < 1e-8, "{lo} {hi}");
    }

    #[test]
    fn annulus_quadrature_is_accurate() {
        // ∫ over the unit disk outside B_ρ(0) of 1/|x|² is 2π log(1/ρ)
        let d = make_disk(1.0, 32, 128).unwrap();
        let rho = 0.2;
        let f = |x: V2| 1.0 / (sq(x[0]) + sq(x[1]));
        let mut s = 0.0;
        for t in 0..d.mesh.n_tris() {
            let tri = d.mesh.tris[t];
            let p = [d.mesh.nodes[tri[0]], d.mesh.nodes[tri[1]], d.mesh.nodes[tri[2]]];
            s += d.mesh.measure[t] / d.mesh.area[t] * integrate_outside(p, &f, &[([0.0, 0.0], rho)], 6);
        }
        assert!((s - 2.0 * PI * ln(1.0 / rho)).abs() < 1e-3 * s, "{s}");
    }
}
