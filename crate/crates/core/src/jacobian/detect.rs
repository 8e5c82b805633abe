use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{Vortex, VortexSet};
use crate::error::{Error, Result};
use crate::field::VectorField2D;
use crate::geometry::Domain;
use crate::lifting::tangent_lifting;
use crate::num::{abs, atan2, norm, round, wrap_pi, wrap_tau, TAU};

/// Boundary vortices of `u` from the phase of `u/|u|` relative to the tangent.
///
/// The relative phase sits near multiples of π where `u ≈ ±τ`; every passage
/// through an odd multiple of π/2 marks a transition. Crossings closer than
/// `window` (arc length) form one vortex whose multiplicity is minus the
/// plateau-to-plateau change divided by π.
pub fn detect_boundary_vortices(u: &VectorField2D, window: f64, threshold: f64) -> Result<VortexSet> {
    let d = &u.domain;
    let nb = d.boundary.len();
    for b in &d.boundary {
        let m = norm(u.values[b.node]);
        if m < 0.5 {
            return Err(Error::UnresolvedCore { node: b.node, modulus: m });
        }
    }
    let g = tangent_lifting(d);
    let arg: Vec<f64> = d.boundary.iter().map(|b| atan2(u.values[b.node][1], u.values[b.node][0])).collect();
    // relative phase ψ along the closed loop, nb+1 samples (last = first + total change)
    let mut psi = Vec::with_capacity(nb + 1);
    psi.push(wrap_pi(arg[0] - g.values[0]));
    for k in 0..nb {
        let next = (k + 1) % nb;
        let dg = if next == 0 { g.values[0] + TAU - g.values[k] } else { g.values[next] - g.values[k] };
        let v = psi[k] + wrap_pi(arg[next] - arg[k]) - dg;
        psi.push(v);
    }
    let s_of = |k: usize| -> f64 { if k == nb { d.perimeter + d.boundary[0].s } else { d.boundary[k].s } };

    // crossings of (m+½)π on each boundary edge, with interpolated arc position
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for k in 0..nb {
        let (a, b) = (psi[k], psi[k + 1]);
        let lo = a.min(b);
        let hi = a.max(b);
        let mut m = libm::ceil(lo / PI - 0.5);
        while (m + 0.5) * PI <= hi {
            let level = (m + 0.5) * PI;
            if level > lo {
                let f = (level - a) / (b - a);
                let s = s_of(k) + f * (s_of(k + 1) - s_of(k));
                crossings.push((k, s));
            }
            m += 1.0;
        }
    }
    if crossings.is_empty() {
        return Err(Error::Topology("no phase transitions on the boundary".into()));
    }
    // clusters along the loop; a cluster may wrap through the seam
    let mut clusters: Vec<Vec<(usize, f64)>> = Vec::new();
    for c in crossings {
        match clusters.last_mut() {
            Some(cl) if c.1 - cl.last().unwrap().1 <= window => cl.push(c),
            _ => clusters.push(alloc::vec![c]),
        }
    }
    if clusters.len() > 1 {
        let first_s = clusters[0][0].1;
        let last_s = clusters.last().unwrap().last().unwrap().1;
        if first_s + d.perimeter - last_s <= window {
            let mut tail = clusters.pop().unwrap();
            let head = core::mem::take(&mut clusters[0]);
            tail.extend(head.into_iter().map(|(k, s)| (k + nb, s + d.perimeter)));
            clusters[0] = tail;
        }
    }
    // edge ranges of clusters in the doubled index sequence
    let mut ranges: Vec<(usize, usize)> = clusters.iter().map(|c| (c[0].0, c.last().unwrap().0)).collect();
    ranges.sort();
    let nc = ranges.len();
    let total = psi[nb] - psi[0];
    let psi_at = |k: usize| -> f64 {
        if k >= nb {
            psi[k - nb] + total
        } else {
            psi[k]
        }
    };
    // plateau of the nodes strictly between cluster c and c+1
    let plateau = |from: usize, to: usize| -> f64 {
        let mut best = (f64::INFINITY, psi_at(from));
        for k in from..=to {
            let v = psi_at(k);
            let dist = abs(v - PI * round(v / PI));
            if dist < best.0 {
                best = (dist, v);
            }
        }
        best.1
    };
    let mut out = Vec::new();
    for (ci, &(first, last)) in ranges.iter().enumerate() {
        let (pf, pl) = if ci == 0 {
            let (pf0, pl0) = ranges[nc - 1];
            let _ = pf0;
            (pl0 + 1, first)
        } else {
            (ranges[ci - 1].1 + 1, first)
        };
        let before = if ci == 0 {
            // previous plateau lies one loop earlier
            plateau(pf, pl + nb) - total
        } else {
            plateau(pf, pl)
        };
        let after_end = if ci + 1 < nc { ranges[ci + 1].0 } else { ranges[0].0 + nb };
        let after = plateau(last + 1, after_end);
        let change = after - before;
        let q = -change / PI;
        let dq = round(q);
        if abs(q - dq) >= threshold {
            return Err(Error::Topology(format!(
                "fractional transition {q:.3} at arc {:.4} (residual above {threshold})",
                clusters_pos(&clusters, first, d.perimeter)
            )));
        }
        if dq != 0.0 {
            let s = clusters_pos(&clusters, first, d.perimeter);
            let t = d.param_at(wrap_arc(s, d.perimeter)).unwrap_or(0.0);
            out.push(Vortex { t, d: dq as i32 });
        }
    }
    let sum_d: i32 = out.iter().map(|v| v.d).sum();
    if sum_d != 2 {
        return Err(Error::Topology(format!(
            "detected multiplicities {:?} sum to {sum_d}",
            out.iter().map(|v| (v.t, v.d)).collect::<Vec<_>>()
        )));
    }
    VortexSet::new(out)
}

fn wrap_arc(s: f64, l: f64) -> f64 {
    let r = s - l * libm::floor(s / l);
    if r >= l {
        0.0
    } else {
        r
    }
}

fn clusters_pos(clusters: &[Vec<(usize, f64)>], first_edge: usize, _l: f64) -> f64 {
    let c = clusters.iter().find(|c| c[0].0 == first_edge).expect("cluster exists");
    c.iter().map(|x| x.1).sum::<f64>() / c.len() as f64
}

/// `J = −κ ds + π Σ d_j δ_{a_j}` sampled on the boundary nodes.
#[derive(Debug, Clone)]
pub struct LimitJacobianMeasure {
    /// `−κ_b w_b` per boundary node.
    pub diffuse: Vec<f64>,
    /// `(curve parameter, π d_j)`.
    pub atoms: Vec<(f64, f64)>,
}

impl LimitJacobianMeasure {
    pub fn total_mass(&self) -> f64 {
        crate::num::sum(self.diffuse.iter().copied().chain(self.atoms.iter().map(|a| a.1)))
    }
}

pub fn limit_measure(domain: &Domain, vortices: &VortexSet) -> LimitJacobianMeasure {
    LimitJacobianMeasure {
        diffuse: domain.boundary.iter().map(|b| -b.curvature * b.weight).collect(),
        atoms: vortices.vortices.iter().map(|v| (wrap_tau(v.t), PI * v.d as f64)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use crate::num::{atan, cos, sin};
    use alloc::vec;
    use alloc::sync::Arc;

    /// Unit field whose boundary trace follows the limit lifting smoothed over `w`.
    fn smooth_two_jump(domain: Arc<Domain>, centres: &[(f64, i32)], w: f64) -> VectorField2D {
        let vals = domain
            .mesh
            .nodes
            .iter()
            .map(|p| {
                let t = wrap_tau(atan2(p[1], p[0]));
                let mut phi = t + PI / 2.0;
                for &(c, dj) in centres {
                    // smoothed step −π d_j across t = c
                    phi -= dj as f64 * (PI / 2.0 + atan((t - c) / w));
                }
                [cos(phi), sin(phi)]
            })
            .collect();
        VectorField2D::new(domain, vals, 0.05, 1e-3).unwrap()
    }

    #[test]
    fn detects_antipodal_pair() {
        let d = Arc::new(make_disk(1.0, 4, 256).unwrap());
        let u = smooth_two_jump(d.clone(), &[(PI / 2.0, 1), (1.5 * PI, 1)], 0.02);
        let v = detect_boundary_vortices(&u, 0.3, 0.2).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.vortices.iter().all(|x| x.d == 1));
        let sep = wrap_tau(v.vortices[1].t - v.vortices[0].t);
        assert!((sep - PI).abs() < 0.03, "{v:?}");
    }

    #[test]
    fn detects_double_vortex() {
        let d = Arc::new(make_disk(1.0, 4, 256).unwrap());
        let u = smooth_two_jump(d, &[(1.0, 2)], 0.03);
        let v = detect_boundary_vortices(&u, 0.3, 0.2).unwrap();
        assert_eq!(v.vortices.len(), 1);
        assert_eq!(v.vortices[0].d, 2);
        assert!((v.vortices[0].t - 1.0).abs() < 0.05);
    }

    #[test]
    fn weak_boundary_modulus_is_unresolved() {
        let d = Arc::new(make_disk(1.0, 4, 64).unwrap());
        let u = VectorField2D::from_fn(d, 0.1, 0.1, |p| [0.3 * p[0], 0.3 * p[1]]).unwrap();
        assert!(matches!(detect_boundary_vortices(&u, 0.3, 0.2), Err(Error::UnresolvedCore { .. })));
    }

    #[test]
    fn limit_measure_has_zero_mass() {
        let d = make_disk(1.0, 4, 128).unwrap();
        let vs = VortexSet::new(vec![Vortex { t: 0.3, d: 1 }, Vortex { t: 2.0, d: 1 }]).unwrap();
        assert!(limit_measure(&d, &vs).total_mass().abs() < 1e-12);
    }
}
