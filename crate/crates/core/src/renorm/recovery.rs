use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use super::{harmonic_extend, local_angle, SingularHarmonic};
use crate::error::{invalid, Error, Result};
use crate::field::VectorField2D;
use crate::geometry::{boundary_graded_levels, graded_params, BoundaryCurve, Domain};
use crate::jacobian::VortexSet;
use crate::lifting::bv_limit_lifting;
use crate::num::{abs, hypot, ln, sqrt, V2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// Patch radius; `None` means `10√ε`, capped at a quarter of the smallest chord.
    pub r_patch: Option<f64>,
    /// Finest mesh spacing is `ε / mesh_ratio` (relative to the domain size).
    pub mesh_ratio: f64,
    pub growth: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { r_patch: None, mesh_ratio: 8.0, growth: 1.1 }
    }
}

fn size(curve: &BoundaryCurve) -> f64 {
    match *curve {
        BoundaryCurve::Disk { radius } => radius,
        BoundaryCurve::Fourier { radius, .. } => radius,
        BoundaryCurve::Ellipse { a, b } => sqrt(a * b),
    }
}

fn min_chord(curve: &BoundaryCurve, vortices: &VortexSet) -> f64 {
    let pts: Vec<V2> = vortices.vortices.iter().map(|v| curve.point(v.t)).collect();
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
        }
    }
    if m.is_finite() {
        m
    } else {
        2.0 * size(curve)
    }
}

pub(crate) fn patch_radius(curve: &BoundaryCurve, vortices: &VortexSet, eps: f64, opts: &RecoveryOptions) -> f64 {
    opts.r_patch.unwrap_or_else(|| (10.0 * sqrt(eps) * size(curve)).min(0.25 * min_chord(curve, vortices)))
}

/// Tangential offsets of the unit poles a vortex of multiplicity `d` is split into.
fn sub_offsets(d: i32, eps: f64, r_patch: f64) -> Vec<f64> {
    let n = d.unsigned_abs() as usize;
    if n == 1 {
        return alloc::vec![0.0];
    }
    let s = (0.25 * r_patch).min(1.0 / ln(1.0 / eps).max(1.0));
    (0..n).map(|k| (k as f64 - 0.5 * (n - 1) as f64) * s).collect()
}

/// Mesh graded toward the boundary and toward every (sub-)pole down to `ε / mesh_ratio`.
pub fn recovery_domain(curve: BoundaryCurve, vortices: &VortexSet, eps: f64, opts: &RecoveryOptions) -> Result<Domain> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let r = size(&curve);
    let r_patch = patch_radius(&curve, vortices, eps, opts);
    let h_min = eps / opts.mesh_ratio / r;
    let mut centres = Vec::new();
    for v in &vortices.vortices {
        let speed = curve.speed(v.t);
        for o in sub_offsets(v.d, eps, r_patch) {
            centres.push(v.t + o / speed);
        }
    }
    let levels = boundary_graded_levels(h_min, 1.0 / 32.0, opts.growth);
    let params = graded_params(&centres, h_min, TAU / 256.0, opts.growth);
    Domain::build(curve, levels, params)
}

/// Unit field `e^{iψ̂}`: the singular harmonic extension far from the vortices,
/// with each pole pushed outward by `2πε` along the normal inside its patch.
/// Vortices of higher multiplicity are split into unit poles spread tangentially.
pub fn recovery_field(domain: Arc<Domain>, vortices: &VortexSet, eps: f64, eta: f64, r_patch: f64) -> Result<VectorField2D> {
    if !(eps > 0.0) || !(r_patch > 0.0) {
        return Err(invalid("eps and patch radius must be positive"));
    }
    let h = near_spacing(&domain, vortices);
    if r_patch < 4.0 * h {
        return Err(Error::Resolution(format!("patch radius {r_patch:.3e} below mesh spacing {h:.3e}")));
    }
    if h > 2.0 * PI * eps {
        return Err(Error::Resolution(format!("mesh spacing {h:.3e} does not resolve the core at eps = {eps:.3e}")));
    }
    let phi0 = bv_limit_lifting(&domain, vortices)?;
    let sh: SingularHarmonic = harmonic_extend(&domain, &phi0)?;
    struct Pole {
        a: V2,
        nu: V2,
        tau: V2,
        sign: f64,
        offset: f64,
    }
    let mut poles = Vec::new();
    for v in &vortices.vortices {
        let (nu, tau) = domain.curve.frame(v.t);
        let a = domain.curve.point(v.t);
        for o in sub_offsets(v.d, eps, r_patch) {
            poles.push(Pole { a, nu, tau, sign: v.d.signum() as f64, offset: o });
        }
    }
    let shift = 2.0 * PI * eps;
    let phase: Vec<f64> = domain
        .mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut s = sh.regular[i];
            for p in &poles {
                let dist = hypot(x[0] - p.a[0], x[1] - p.a[1]);
                let f = if dist <= 0.5 * r_patch {
                    1.0
                } else if dist >= r_patch {
                    0.0
                } else {
                    2.0 * (1.0 - dist / r_patch)
                };
                let q = [
                    p.a[0] + f * (shift * p.nu[0] + p.offset * p.tau[0]),
                    p.a[1] + f * (shift * p.nu[1] + p.offset * p.tau[1]),
                ];
                s += p.sign * local_angle(x, q, p.nu);
            }
            s
        })
        .collect();
    VectorField2D::from_phase(domain, &phase, eps, eta)
}

/// Largest edge of the cells within `8·spacing` of any vortex, measured along the boundary.
fn near_spacing(domain: &Domain, vortices: &VortexSet) -> f64 {
    let mut h: f64 = 0.0;
    for v in &vortices.vortices {
        // closest boundary node and its two boundary neighbours
        let nb = domain.boundary.len();
        let k = (0..nb)
            .min_by(|&i, &j| {
                let di = abs(crate::num::wrap_pi(domain.boundary[i].t - v.t));
                let dj = abs(crate::num::wrap_pi(domain.boundary[j].t - v.t));
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap_or(0);
        for e in [(k + nb - 1) % nb, k] {
            h = h.max(domain.edges[e].length);
        }
        // radial spacing at the boundary
        let n = domain.radial.len();
        h = h.max((domain.radial[n - 1] - domain.radial[n - 2]) * size(&domain.curve));
    }
    h
}
