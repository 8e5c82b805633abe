//! Nodal ℝ²-valued maps and the anchoring Ginzburg-Landau energy
//! `∫|∇u|² + η⁻²∫(1−|u|²)² + (2πε)⁻¹∫_{∂Ω}(u·ν)²`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geometry::Domain;
use crate::lifting::BoundaryLifting;
use crate::num::{cos, dot, sin, sq, Sum, V2};

#[derive(Debug, Clone)]
pub struct VectorField2D {
    pub domain: Arc<Domain>,
    pub values: Vec<V2>,
    pub eps: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub penalty: f64,
    pub anchoring: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(dirichlet: f64, penalty: f64, anchoring: f64) -> Self {
        EnergyBreakdown { dirichlet, penalty, anchoring, total: dirichlet + penalty + anchoring }
    }
}

impl VectorField2D {
    pub fn new(domain: Arc<Domain>, values: Vec<V2>, eps: f64, eta: f64) -> Result<Self> {
        if values.len() != domain.mesh.n_nodes() {
            return Err(invalid("one value per mesh node required"));
        }
        if !(eps > 0.0 && eta > 0.0) {
            return Err(invalid("eps and eta must be positive"));
        }
        if values.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(VectorField2D { domain, values, eps, eta })
    }

    pub fn from_fn(domain: Arc<Domain>, eps: f64, eta: f64, f: impl Fn(V2) -> V2) -> Result<Self> {
        let values = domain.mesh.nodes.iter().map(|&p| f(p)).collect();
        Self::new(domain, values, eps, eta)
    }

    /// `e^{iφ}` from nodal phases.
    pub fn from_phase(domain: Arc<Domain>, phi: &[f64], eps: f64, eta: f64) -> Result<Self> {
        let values = phi.iter().map(|&p| [cos(p), sin(p)]).collect();
        Self::new(domain, values, eps, eta)
    }

    pub fn with_params(&self, eps: f64, eta: f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.values.clone(), eps, eta)
    }

    pub fn with_values(&self, values: Vec<V2>) -> Result<Self> {
        Self::new(self.domain.clone(), values, self.eps, self.eta)
    }

    pub fn modulus_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            let m = crate::num::norm(*v);
            (lo.min(m), hi.max(m))
        })
    }
}

pub fn energy(u: &VectorField2D) -> EnergyBreakdown {
    local_energy_impl(u, None)
}

/// Energy restricted to the cells flagged in `cells` (and the boundary edges they carry).
pub fn local_energy(u: &VectorField2D, cells: &[bool]) -> EnergyBreakdown {
    local_energy_impl(u, Some(cells))
}

fn local_energy_impl(u: &VectorField2D, cells: Option<&[bool]>) -> EnergyBreakdown {
    let d = &u.domain;
    let m = &d.mesh;
    let keep = |t: usize| cells.is_none_or(|c| c[t]);
    let mut dir = Sum::new();
    let mut pen = Sum::new();
    for t in 0..m.n_tris() {
        if !keep(t) {
            continue;
        }
        let [d1, d2] = m.grad_vector(t, &u.values);
        dir.add(m.measure[t] * (dot(d1, d1) + dot(d2, d2)));
        let p: f64 = m.tris[t].iter().map(|&i| sq(1.0 - dot(u.values[i], u.values[i]))).sum();
        pen.add(m.measure[t] / 3.0 * p);
    }
    let mut anc = Sum::new();
    for e in &d.edges {
        if !keep(e.tri) {
            continue;
        }
        let (a, b) = (&d.boundary[e.a], &d.boundary[e.b]);
        let fa = sq(dot(u.values[a.node], a.normal)) * a.speed;
        let fb = sq(dot(u.values[b.node], b.normal)) * b.speed;
        anc.add(0.5 * e.dt * (fa + fb));
    }
    EnergyBreakdown::from_parts(dir.value(), pen.value() / sq(u.eta), anc.value() / (2.0 * PI * u.eps))
}

/// Gradient of the discrete energy with respect to the nodal values.
pub fn energy_gradient(u: &VectorField2D) -> Vec<V2> {
    let d = &u.domain;
    let m = &d.mesh;
    let mut g = vec![[0.0; 2]; m.n_nodes()];
    let inv_eta2 = 1.0 / sq(u.eta);
    for t in 0..m.n_tris() {
        let [d1, d2] = m.grad_vector(t, &u.values);
        let w = m.measure[t];
        let tri = m.tris[t];
        for k in 0..3 {
            let gl = m.grads[t][k];
            let i = tri[k];
            // ∂/∂u_i of w(|∂₁u|² + |∂₂u|²)
            g[i][0] += 2.0 * w * (d1[0] * gl[0] + d2[0] * gl[1]);
            g[i][1] += 2.0 * w * (d1[1] * gl[0] + d2[1] * gl[1]);
            let v = u.values[i];
            let c = -4.0 * (w / 3.0) * (1.0 - dot(v, v)) * inv_eta2;
            g[i][0] += c * v[0];
            g[i][1] += c * v[1];
        }
    }
    let inv = 1.0 / (2.0 * PI * u.eps);
    for b in &d.boundary {
        let v = u.values[b.node];
        let c = 2.0 * b.weight * dot(v, b.normal) * inv;
        g[b.node][0] += c * b.normal[0];
        g[b.node][1] += c * b.normal[1];
    }
    g
}

/// Positive semidefinite 2×2 per-node approximations of the Hessian diagonal
/// blocks (Dirichlet diagonal, convexified penalty, anchoring).
pub fn hessian_blocks(u: &VectorField2D) -> Vec<[[f64; 2]; 2]> {
    let d = &u.domain;
    let m = &d.mesh;
    let mut h = vec![[[0.0; 2]; 2]; m.n_nodes()];
    let inv_eta2 = 1.0 / sq(u.eta);
    for t in 0..m.n_tris() {
        let w = m.measure[t];
        for k in 0..3 {
            let i = m.tris[t][k];
            let gl = m.grads[t][k];
            let dd = 2.0 * w * dot(gl, gl);
            h[i][0][0] += dd;
            h[i][1][1] += dd;
            let v = u.values[i];
            let r2 = dot(v, v);
            let mw = w / 3.0 * inv_eta2;
            // eigenvalues of the penalty Hessian: radial 8|v|²−4(1−|v|²), tangential −4(1−|v|²)
            let tang = (-4.0 * (1.0 - r2)).max(0.0) * mw;
            let rad = (8.0 * r2 - 4.0 * (1.0 - r2)).max(0.0) * mw;
            if r2 > 0.0 {
                let r = crate::num::sqrt(r2);
                let e = [v[0] / r, v[1] / r];
                for a in 0..2 {
                    for b in 0..2 {
                        let id = if a == b { 1.0 } else { 0.0 };
                        h[i][a][b] += tang * id + (rad - tang) * e[a] * e[b];
                    }
                }
            }
        }
    }
    let inv = 1.0 / (2.0 * PI * u.eps);
    for b in &d.boundary {
        let c = 2.0 * b.weight * inv;
        for p in 0..2 {
            for q in 0..2 {
                h[b.node][p][q] += c * b.normal[p] * b.normal[q];
            }
        }
    }
    h
}

/// Scalar phase energy `∫|∇φ|² + (2πε)⁻¹∫_{∂Ω} sin²(φ − g)`.
pub fn ks_energy(phi: &[f64], domain: &Domain, eps: f64, g: &BoundaryLifting) -> f64 {
    let dir = domain.mesh.dirichlet_scalar(phi);
    let mut anc = Sum::new();
    for (k, b) in domain.boundary.iter().enumerate() {
        anc.add(b.weight * sq(sin(phi[b.node] - g.values[k])));
    }
    dir + anc.value() / (2.0 * PI * eps)
}

/// `‖u − v‖_{L²(Ω)}` with lumped quadrature.
pub fn l2_distance(u: &[V2], v: &[V2], domain: &Domain) -> f64 {
    let mass = domain.mesh.node_mass();
    crate::num::sqrt(crate::num::sum(
        (0..u.len()).map(|i| mass[i] * (sq(u[i][0] - v[i][0]) + sq(u[i][1] - v[i][1]))),
    ))
}

/// `‖u − v‖_{L²(∂Ω)}`.
pub fn l2_boundary_distance(u: &[V2], v: &[V2], domain: &Domain) -> f64 {
    crate::num::sqrt(crate::num::sum(domain.boundary.iter().map(|b| {
        let i = b.node;
        b.weight * (sq(u[i][0] - v[i][0]) + sq(u[i][1] - v[i][1]))
    })))
}

/// `‖∇u‖_{L²(Ω)}`.
pub fn grad_norm(u: &[V2], domain: &Domain) -> f64 {
    let m = &domain.mesh;
    crate::num::sqrt(crate::num::sum((0..m.n_tris()).map(|t| {
        let [d1, d2] = m.grad_vector(t, u);
        m.measure[t] * (dot(d1, d1) + dot(d2, d2))
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(n_r: usize, n_t: usize) -> Arc<Domain> {
        Arc::new(make_disk(1.0, n_r, n_t).unwrap())
    }

    #[test]
    fn constant_field_energy() {
        let d = disk(16, 128);
        let eps = 0.1;
        let u = VectorField2D::from_fn(d.clone(), eps, 0.01, |_| [1.0, 0.0]).unwrap();
        let e = energy(&u);
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.penalty, 0.0);
        assert!((e.anchoring - 1.0 / (2.0 * eps)).abs() < 1e-12);
        let z = VectorField2D::from_fn(d, eps, 0.5, |_| [0.0, 0.0]).unwrap();
        let e = energy(&z);
        assert!((e.penalty - PI / 0.25).abs() < 1e-10);
        assert_eq!(e.anchoring, 0.0);
    }

    #[test]
    fn identity_map_energy_converges() {
        let eps = 0.3;
        let eta = 1.0;
        let mut prev = f64::INFINITY;
        for &(nr, nt) in &[(16usize, 64usize), (32, 128), (64, 256)] {
            let u = VectorField2D::from_fn(disk(nr, nt), eps, eta, |p| p).unwrap();
            let e = energy(&u);
            assert!((e.anchoring - 1.0 / eps).abs() < 1e-12);
            // the linear interpolant of x on a chordal mesh has gradient identity
            assert!((e.dirichlet - 2.0 * PI).abs() < 1e-10);
            let err = (e.penalty - PI / 3.0).abs();
            assert!(err < prev / 3.0 || err < 1e-12);
            prev = err;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn half_disk_local_energy() {
        let d = disk(16, 64);
        let u = VectorField2D::from_fn(d.clone(), 0.2, 1.0, |p| p).unwrap();
        let right: Vec<bool> = (0..d.mesh.n_tris()).map(|t| d.mesh.centroid(t)[0] > 0.0).collect();
        let left: Vec<bool> = right.iter().map(|b| !b).collect();
        let er = local_energy(&u, &right);
        let el = local_energy(&u, &left);
        let e = energy(&u);
        assert!((er.dirichlet - PI).abs() < 1e-9);
        assert!((er.total + el.total - e.total).abs() < 1e-10);
        let none = local_energy(&u, &vec![false; d.mesh.n_tris()]);
        assert_eq!(none.total, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = disk(6, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let vals: Vec<V2> =
                (0..d.mesh.n_nodes()).map(|_| [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)]).collect();
            let u = VectorField2D::new(d.clone(), vals, 0.2, 0.7).unwrap();
            let g = energy_gradient(&u);
            let i = rng.random_range(0..d.mesh.n_nodes());
            let dir = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let h = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            up.values[i][0] += h * dir[0];
            up.values[i][1] += h * dir[1];
            um.values[i][0] -= h * dir[0];
            um.values[i][1] -= h * dir[1];
            let fd = (energy(&up).total - energy(&um).total) / (2.0 * h);
            let an = dot(g[i], dir);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-2), "fd {fd} vs {an}");
        }
    }

    #[test]
    fn unit_modulus_has_no_penalty_gradient() {
        let d = disk(8, 32);
        let u = VectorField2D::from_fn(d.clone(), 1e3, 1e-3, |p| [cos(p[0] + 2.0 * p[1]), sin(p[0] + 2.0 * p[1])])
            .unwrap();
        let stiff = energy_gradient(&u);
        let soft = energy_gradient(&u.with_params(1e3, 1.0).unwrap());
        for i in 0..stiff.len() {
            assert!((stiff[i][0] - soft[i][0]).abs() < 1e-9 && (stiff[i][1] - soft[i][1]).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_is_even() {
        let d = disk(8, 32);
        let u = VectorField2D::from_fn(d, 0.1, 0.3, |p| [p[0] * p[1] + 0.3, cos(3.0 * p[0])]).unwrap();
        let neg = u.with_values(u.values.iter().map(|v| [-v[0], -v[1]]).collect()).unwrap();
        assert_eq!(energy(&u), energy(&neg));
    }
}
