//! Phase liftings: mesh unwrapping of S¹-valued fields, the tangent lifting `g`
//! of the boundary and the piecewise-smooth limit lifting with jumps at vortices.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::Domain;
use crate::jacobian::VortexSet;
use crate::mesh::TriMesh;
use crate::num::{abs, atan2, norm, wrap_pi, wrap_tau, V2};

/// Lifts a unit field `U` to `φ` with `e^{iφ} = U`, anchored so `φ(node 0) ∈ [0, 2π)`.
///
/// Fails when an edge turns by `π − margin` or more, or when the increments do
/// not close up around some cycle (a vortex inside the mesh or around a hole).
pub fn unwrap_phase(mesh: &TriMesh, u: &[V2], margin: f64) -> Result<Vec<f64>> {
    let n = mesh.n_nodes();
    if u.len() != n {
        return Err(invalid("one value per node required"));
    }
    for (i, v) in u.iter().enumerate() {
        if abs(norm(*v) - 1.0) > 1e-8 {
            return Err(invalid(format!("|U| = {} at node {i} is not 1", norm(*v))));
        }
    }
    let arg: Vec<f64> = u.iter().map(|v| atan2(v[1], v[0])).collect();
    let edges = mesh.edges();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        let d = wrap_pi(arg[b] - arg[a]);
        if abs(d) >= PI - margin {
            return Err(Error::UnresolvedPhase(a, b));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut phi = vec![f64::NAN; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if !phi[root].is_nan() {
            continue;
        }
        phi[root] = wrap_tau(arg[root]);
        queue.push_back(root);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if phi[b].is_nan() {
                    phi[b] = phi[a] + wrap_pi(arg[b] - arg[a]);
                    queue.push_back(b);
                }
            }
        }
    }
    for &(a, b) in &edges {
        let defect = phi[b] - phi[a] - wrap_pi(arg[b] - arg[a]);
        if abs(defect) > 1e-6 {
            return Err(Error::InteriorVortex(defect));
        }
    }
    Ok(phi)
}

/// Boundary values of `g` with `e^{ig} = τ`; continuous in the arc coordinate
/// except for a single drop of 2π when closing the loop at the first node.
#[derive(Debug, Clone)]
pub struct BoundaryLifting {
    pub values: Vec<f64>,
    /// `g` drops by 2π between the last boundary node and this one.
    pub jump_node: usize,
    /// `max |Δg/Δs − κ|` over boundary edges away from the jump.
    pub curvature_mismatch: f64,
}

pub fn tangent_lifting(domain: &Domain) -> BoundaryLifting {
    let nb = domain.boundary.len();
    let mut values = Vec::with_capacity(nb);
    let t0 = domain.boundary[0].tangent;
    let mut g = wrap_tau(atan2(t0[1], t0[0]));
    values.push(g);
    for k in 1..nb {
        let (p, q) = (domain.boundary[k - 1].tangent, domain.boundary[k].tangent);
        g += wrap_pi(atan2(q[1], q[0]) - atan2(p[1], p[0]));
        values.push(g);
    }
    let mut mismatch: f64 = 0.0;
    for e in &domain.edges[..nb - 1] {
        let kappa = 0.5 * (domain.boundary[e.a].curvature + domain.boundary[e.b].curvature);
        let slope = (values[e.b] - values[e.a]) / e.length;
        mismatch = mismatch.max(abs(slope - kappa));
    }
    BoundaryLifting { values, jump_node: 0, curvature_mismatch: mismatch }
}

/// Continuous tangent angle `G(t)` on `[0, 2π)` with `G(0) ∈ [0, 2π)`.
pub fn tangent_angle(domain: &Domain, t: f64) -> f64 {
    let (_, tau0) = domain.curve.frame(0.0);
    let g0 = wrap_tau(atan2(tau0[1], tau0[0]));
    // integrate the turning in small steps so the branch stays continuous
    let steps = 1 + (t / 0.05) as usize;
    let mut g = g0;
    let mut prev = atan2(tau0[1], tau0[0]);
    for k in 1..=steps {
        let s = t * k as f64 / steps as f64;
        let (_, tau) = domain.curve.frame(s);
        let a = atan2(tau[1], tau[0]);
        g += wrap_pi(a - prev);
        prev = a;
    }
    g
}

/// Limit lifting `φ₀` with `∂_τφ₀ = κ − π Σ d_j δ_{a_j}`.
#[derive(Debug, Clone)]
pub struct BVLimitLifting {
    pub values: Vec<f64>,
    /// `(curve parameter, jump height −π d_j)`.
    pub jumps: Vec<(f64, f64)>,
}

impl BVLimitLifting {
    /// `φ₀` at curve parameter `t`, with the jump at `a_j` counted for `t ≥ a_j`.
    pub fn eval(&self, domain: &Domain, t: f64) -> f64 {
        let t = wrap_tau(t);
        let mut v = tangent_angle(domain, t);
        for &(a, h) in &self.jumps {
            if t >= a {
                v += h;
            }
        }
        v
    }
}

pub fn bv_limit_lifting(domain: &Domain, vortices: &VortexSet) -> Result<BVLimitLifting> {
    let total: i32 = vortices.vortices.iter().map(|v| v.d).sum();
    if total != 2 {
        return Err(Error::Topology(format!("multiplicities sum to {total}, not 2")));
    }
    if vortices.vortices.iter().any(|v| v.d == 0) {
        return Err(invalid("zero multiplicity"));
    }
    let jumps: Vec<(f64, f64)> = vortices.vortices.iter().map(|v| (wrap_tau(v.t), -PI * v.d as f64)).collect();
    let g = tangent_lifting(domain);
    let values = domain
        .boundary
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let mut v = g.values[k];
            for &(a, h) in &jumps {
                if b.t >= a {
                    v += h;
                }
            }
            v
        })
        .collect();
    Ok(BVLimitLifting { values, jumps })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk, make_ellipse};
    use crate::jacobian::Vortex;
    use crate::num::{cos, sin, TAU};

    #[test]
    fn unwrap_plane_wave() {
        let d = make_disk(1.0, 8, 32).unwrap();
        let u: Vec<V2> = d.mesh.nodes.iter().map(|p| [cos(p[0]), sin(p[0])]).collect();
        let phi = unwrap_phase(&d.mesh, &u, 0.3).unwrap();
        for (i, p) in d.mesh.nodes.iter().enumerate() {
            assert!((phi[i] - p[0]).abs() < 1e-12);
        }
        let c = vec![[0.0, 1.0]; d.mesh.n_nodes()];
        let phi = unwrap_phase(&d.mesh, &c, 0.3).unwrap();
        assert!(phi.iter().all(|&p| (p - PI / 2.0).abs() < 1e-15));
    }

    #[test]
    fn vortex_around_hole_is_rejected() {
        let (n_r, nt) = (4, 24);
        let mut nodes = Vec::new();
        for i in 0..=n_r {
            let r = 0.2 + 0.8 * i as f64 / n_r as f64;
            for j in 0..nt {
                let t = TAU * j as f64 / nt as f64;
                nodes.push([r * cos(t), r * sin(t)]);
            }
        }
        let id = |i: usize, j: usize| i * nt + j % nt;
        let mut tris = Vec::new();
        for i in 0..n_r {
            for j in 0..nt {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mesh = TriMesh::new(nodes, tris, None).unwrap();
        let u: Vec<V2> = mesh.nodes.iter().map(|p| [p[0] / norm(*p), p[1] / norm(*p)]).collect();
        assert!(matches!(unwrap_phase(&mesh, &u, 0.2), Err(Error::InteriorVortex(_))));
    }

    #[test]
    fn disk_tangent_lifting() {
        let d = make_disk(1.0, 4, 64).unwrap();
        let g = tangent_lifting(&d);
        for (k, b) in d.boundary.iter().enumerate() {
            assert!((g.values[k] - (b.t + PI / 2.0)).abs() < 1e-12);
            assert!((cos(g.values[k]) - b.tangent[0]).abs() < 1e-12);
        }
        assert!(g.curvature_mismatch < 1e-3);
        let nb = g.values.len();
        assert!((g.values[nb - 1] + TAU / nb as f64 - g.values[0] - TAU).abs() < 1e-12);
    }

    #[test]
    fn ellipse_tangent_lifting_tracks_curvature() {
        let d = make_ellipse(2.0, 1.0, 4, 512).unwrap();
        assert!(tangent_lifting(&d).curvature_mismatch < 1e-2);
    }

    #[test]
    fn limit_lifting_closes_up() {
        let d = make_disk(1.0, 4, 64).unwrap();
        let vs = VortexSet::new(vec![Vortex { t: 0.0, d: 1 }, Vortex { t: PI, d: 1 }]).unwrap();
        let p = bv_limit_lifting(&d, &vs).unwrap();
        assert_eq!(p.jumps.len(), 2);
        for (k, b) in d.boundary.iter().enumerate() {
            let v = p.values[k];
            assert!((cos(v) * b.normal[0] + sin(v) * b.normal[1]).abs() < 1e-12);
        }
        // the vortex at t = 0 sits on the seam, so closing the loop crosses its jump
        assert!((p.eval(&d, TAU - 1e-9) - p.eval(&d, 0.0) - PI).abs() < 1e-6);
        let off = VortexSet::new(vec![Vortex { t: 1.0, d: 1 }, Vortex { t: 4.0, d: 1 }]).unwrap();
        let q = bv_limit_lifting(&d, &off).unwrap();
        assert!((q.eval(&d, TAU - 1e-9) - q.eval(&d, 0.0)).abs() < 1e-6);
        let single = VortexSet::new(vec![Vortex { t: 0.0, d: 2 }]).unwrap();
        let q = bv_limit_lifting(&d, &single).unwrap();
        assert_eq!(q.jumps, vec![(0.0, -TAU)]);
    }
}
