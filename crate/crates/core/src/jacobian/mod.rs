//! Distributional Jacobians: the interior Jacobian `∂₁u × ∂₂u`, the global
//! Jacobian `⟨J(u),ζ⟩ = −∫ u×∇u·∇⊥ζ` and the boundary part `J − 2 jac`.
//!
//! Pairings use the straight triangles: with P1 fields and P1 test functions the
//! integrands are linear per cell, so one-point quadrature is exact and the
//! discrete integration-by-parts identities hold to round-off.

mod detect;
mod escaping;

pub use detect::{detect_boundary_vortices, limit_measure, LimitJacobianMeasure};
pub use escaping::{build_escaping_vortex, EscapingVortex};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::field::VectorField2D;
use crate::geometry::Domain;
use crate::num::{abs, cross, dot, hypot, norm, sin, sq, sqrt, sum, wrap_pi, wrap_tau, TAU, V2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    /// Curve parameter of the position (the polar angle on a disk).
    pub t: f64,
    pub d: i32,
}

/// Boundary vortices with nonzero multiplicities summing to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
}

impl VortexSet {
    pub fn new(mut vortices: Vec<Vortex>) -> Result<Self> {
        if vortices.iter().any(|v| v.d == 0) {
            return Err(invalid("vortex multiplicities must be nonzero"));
        }
        let total: i32 = vortices.iter().map(|v| v.d).sum();
        if total != 2 {
            return Err(crate::error::Error::Topology(format!("multiplicities sum to {total}, not 2")));
        }
        for v in vortices.iter_mut() {
            v.t = wrap_tau(v.t);
        }
        vortices.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        for w in vortices.windows(2) {
            if abs(w[1].t - w[0].t) < 1e-12 {
                return Err(invalid("vortex positions must be distinct"));
            }
        }
        Ok(VortexSet { vortices })
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    pub fn abs_degree(&self) -> i32 {
        self.vortices.iter().map(|v| v.d.abs()).sum()
    }

    /// Smallest cyclic parameter distance between consecutive vortices.
    pub fn min_separation(&self) -> f64 {
        let n = self.vortices.len();
        if n < 2 {
            return TAU;
        }
        (0..n)
            .map(|k| wrap_tau(self.vortices[(k + 1) % n].t - self.vortices[k].t))
            .map(|d| if d == 0.0 { TAU } else { d })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct TestFn {
    pub label: String,
    pub values: Vec<f64>,
    /// Largest cell-wise `|∇ζ|`.
    pub lip: f64,
    pub sup: f64,
    pub vanishes_on_boundary: bool,
}

impl TestFn {
    pub fn new(domain: &Domain, label: impl Into<String>, values: Vec<f64>) -> Self {
        let m = &domain.mesh;
        let lip = (0..m.n_tris()).map(|t| norm(m.grad_scalar(t, &values))).fold(0.0, f64::max);
        let sup = values.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
        let vanishes = domain.boundary.iter().all(|b| values[b.node] == 0.0);
        TestFn { label: label.into(), values, lip, sup, vanishes_on_boundary: vanishes }
    }

    pub fn from_fn(domain: &Domain, label: impl Into<String>, f: impl Fn(V2) -> f64) -> Self {
        Self::new(domain, label, domain.mesh.nodes.iter().map(|&p| f(p)).collect())
    }

    /// Rescaled so the cell-wise Lipschitz constant is at most one.
    pub fn normalized(mut self) -> Self {
        if self.lip > 1.0 {
            let s = 1.0 / self.lip;
            self.values.iter_mut().for_each(|v| *v *= s);
            self.sup *= s;
            self.lip = 1.0;
        }
        self
    }

    /// Rescaled so that `sup|ζ| + sup|∇ζ| ≤ 1`.
    pub fn unit_w1inf(mut self) -> Self {
        let s = self.sup + self.lip;
        if s > 1.0 {
            self.values.iter_mut().for_each(|v| *v /= s);
            self.sup /= s;
            self.lip /= s;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictionarySpec {
    /// Hat centres on the boundary.
    pub n_boundary: usize,
    /// Interior hat centres per coordinate direction.
    pub n_interior: usize,
    /// Hat radii as fractions of the diameter.
    pub radii: [f64; 2],
}

impl Default for DictionarySpec {
    fn default() -> Self {
        DictionarySpec { n_boundary: 32, n_interior: 5, radii: [0.08, 0.25] }
    }
}

#[derive(Debug, Clone)]
pub struct TestDictionary {
    pub entries: Vec<TestFn>,
}

impl TestDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn interior(&self) -> impl Iterator<Item = &TestFn> {
        self.entries.iter().filter(|z| z.vanishes_on_boundary)
    }
}

pub fn diameter(domain: &Domain) -> f64 {
    let b: Vec<V2> = domain.boundary.iter().map(|b| domain.mesh.nodes[b.node]).collect();
    let mut d: f64 = 0.0;
    let step = (b.len() / 256).max(1);
    for i in (0..b.len()).step_by(step) {
        for j in (0..b.len()).step_by(step) {
            d = d.max(hypot(b[i][0] - b[j][0], b[i][1] - b[j][1]));
        }
    }
    d
}

/// Distance from each node to the boundary polygon's vertices.
pub fn boundary_distance(domain: &Domain) -> Vec<f64> {
    let pts: Vec<V2> = domain.boundary.iter().map(|b| domain.mesh.nodes[b.node]).collect();
    let mask = domain.boundary_mask();
    domain
        .mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if mask[i] {
                0.0
            } else {
                pts.iter().map(|q| hypot(p[0] - q[0], p[1] - q[1])).fold(f64::INFINITY, f64::min)
            }
        })
        .collect()
}

/// Affine moments, a quadratic, Lipschitz hats on a boundary grid and an
/// interior grid, and boundary-vanishing truncations of the hats.
pub fn default_dictionary(domain: &Domain, spec: &DictionarySpec) -> TestDictionary {
    let diam = diameter(domain);
    let mut e = Vec::new();
    e.push(TestFn::from_fn(domain, "one", |_| 1.0));
    e.push(TestFn::from_fn(domain, "x1", |p| p[0]).normalized());
    e.push(TestFn::from_fn(domain, "x2", |p| p[1]).normalized());
    e.push(TestFn::from_fn(domain, "quad", |p| (sq(p[0]) + sq(p[1])) / (2.0 * diam)).normalized());
    let dist = boundary_distance(domain);
    let mut centres: Vec<(String, V2)> = Vec::new();
    let nb = domain.boundary.len();
    for k in 0..spec.n_boundary {
        let b = &domain.boundary[k * nb / spec.n_boundary];
        centres.push((format!("bd{k}"), domain.mesh.nodes[b.node]));
    }
    let n = spec.n_interior;
    for i in 0..n {
        for j in 0..n {
            let c = [
                -0.5 * diam + diam * (i as f64 + 0.5) / n as f64,
                -0.5 * diam + diam * (j as f64 + 0.5) / n as f64,
            ];
            let (r, _) = domain.curve.polar_coords(c);
            if r < 0.95 {
                centres.push((format!("in{i}_{j}"), c));
            }
        }
    }
    for (label, c) in centres {
        for (ri, &rf) in spec.radii.iter().enumerate() {
            let rho = rf * diam;
            let hat: Vec<f64> =
                domain.mesh.nodes.iter().map(|p| (rho - hypot(p[0] - c[0], p[1] - c[1])).max(0.0)).collect();
            if hat.iter().all(|&v| v == 0.0) {
                continue;
            }
            let trunc: Vec<f64> = hat.iter().zip(&dist).map(|(h, d)| h.min(*d)).collect();
            e.push(TestFn::new(domain, format!("hat_{label}_r{ri}"), hat).normalized());
            if trunc.iter().any(|&v| v > 0.0) {
                e.push(TestFn::new(domain, format!("hat0_{label}_r{ri}"), trunc).normalized());
            }
        }
    }
    TestDictionary { entries: e }
}

/// Cell-wise `∂₁u × ∂₂u`.
pub fn interior_jacobian(u: &VectorField2D) -> Vec<f64> {
    let m = &u.domain.mesh;
    (0..m.n_tris())
        .map(|t| {
            let [d1, d2] = m.grad_vector(t, &u.values);
            cross(d1, d2)
        })
        .collect()
}

fn centroid_value(u: &[V2], tri: [usize; 3]) -> V2 {
    let mut c = [0.0; 2];
    for &i in &tri {
        c[0] += u[i][0] / 3.0;
        c[1] += u[i][1] / 3.0;
    }
    c
}

/// `⟨J(u), ζ⟩ = −∫ u×∇u·∇⊥ζ` with `∇⊥ = (−∂₂, ∂₁)`.
pub fn pair_global(u: &VectorField2D, zeta: &[f64]) -> f64 {
    pair_global_values(&u.domain, &u.values, zeta)
}

pub fn pair_global_values(domain: &Domain, u: &[V2], zeta: &[f64]) -> f64 {
    let m = &domain.mesh;
    -sum((0..m.n_tris()).map(|t| {
        let gz = m.grad_scalar(t, zeta);
        if gz == [0.0, 0.0] {
            return 0.0;
        }
        let [d1, d2] = m.grad_vector(t, u);
        let c = centroid_value(u, m.tris[t]);
        m.area[t] * (cross(c, d1) * -gz[1] + cross(c, d2) * gz[0])
    }))
}

/// `∫ 2·jac(u) ζ`.
pub fn pair_interior(u: &VectorField2D, zeta: &[f64]) -> f64 {
    pair_interior_values(&u.domain, &u.values, zeta)
}

pub fn pair_interior_values(domain: &Domain, u: &[V2], zeta: &[f64]) -> f64 {
    let m = &domain.mesh;
    sum((0..m.n_tris()).map(|t| {
        let [d1, d2] = m.grad_vector(t, u);
        let tri = m.tris[t];
        let zc = (zeta[tri[0]] + zeta[tri[1]] + zeta[tri[2]]) / 3.0;
        2.0 * m.area[t] * cross(d1, d2) * zc
    }))
}

/// `⟨J_bd(u), ζ⟩ = ⟨J(u), ζ⟩ − ∫ 2·jac(u) ζ`.
pub fn pair_boundary(u: &VectorField2D, zeta: &[f64]) -> f64 {
    pair_global(u, zeta) - pair_interior(u, zeta)
}

/// `−∮ (u×∂_τu) ζ ds` along the boundary polygon; for P1 data the integrand on
/// an edge reduces to `u_a × u_b` times the mean of ζ.
pub fn boundary_line_integral(u: &VectorField2D, zeta: &[f64]) -> f64 {
    let d = &u.domain;
    -sum(d.edges.iter().map(|e| {
        let (a, b) = (d.boundary[e.a].node, d.boundary[e.b].node);
        cross(u.values[a], u.values[b]) * 0.5 * (zeta[a] + zeta[b])
    }))
}

/// `−∮ ∂_τφ ζ ds` for a boundary phase, with the increments taken as
/// `sin(Δφ)` to match the polygonal line integral of `e^{iφ}`.
pub fn boundary_phase_integral(domain: &Domain, phi: &[f64], zeta: &[f64]) -> f64 {
    -sum(domain.edges.iter().map(|e| {
        let (a, b) = (domain.boundary[e.a].node, domain.boundary[e.b].node);
        sin(wrap_pi(phi[b] - phi[a])) * 0.5 * (zeta[a] + zeta[b])
    }))
}

#[derive(Debug, Clone)]
pub struct JacobianPairing {
    pub labels: Vec<String>,
    pub global: Vec<f64>,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

pub fn pair_all(u: &VectorField2D, dict: &TestDictionary) -> JacobianPairing {
    let mut p = JacobianPairing { labels: Vec::new(), global: Vec::new(), interior: Vec::new(), boundary: Vec::new() };
    for z in &dict.entries {
        let g = pair_global(u, &z.values);
        let i = pair_interior(u, &z.values);
        p.labels.push(z.label.clone());
        p.global.push(g);
        p.interior.push(i);
        p.boundary.push(g - i);
    }
    p
}

/// Dictionary lower bound `max_ζ |⟨A, ζ⟩|` of the `(Lip)*` norm.
pub fn dual_norm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("empty dictionary"));
    }
    Ok(values.iter().fold(0.0, |a, v| a.max(abs(*v))))
}

/// Dictionary lower bound of `‖J(u) − J(v)‖_{(Lip)*}` and the witnessing entry.
pub fn dual_norm_global_diff(u: &[V2], v: &[V2], domain: &Domain, dict: &TestDictionary) -> Result<(f64, usize)> {
    if dict.is_empty() {
        return Err(invalid("empty dictionary"));
    }
    let mut best = (0.0, 0);
    for (k, z) in dict.entries.iter().enumerate() {
        let d = abs(pair_global_values(domain, u, &z.values) - pair_global_values(domain, v, &z.values));
        if d > best.0 {
            best = (d, k);
        }
    }
    Ok(best)
}

/// `L²` norm with consistent P1 mass on the straight triangles.
pub fn l2_norm_p1(domain: &Domain, w: &[V2]) -> f64 {
    let m = &domain.mesh;
    sqrt(sum((0..m.n_tris()).map(|t| {
        let [a, b, c] = m.tris[t];
        let mut s = 0.0;
        for k in 0..2 {
            let (x, y, z) = (w[a][k], w[b][k], w[c][k]);
            s += x * x + y * y + z * z + x * y + y * z + z * x;
        }
        m.area[t] * s / 6.0
    })))
}

pub fn grad_norm_straight(domain: &Domain, w: &[V2]) -> f64 {
    let m = &domain.mesh;
    sqrt(sum((0..m.n_tris()).map(|t| {
        let [d1, d2] = m.grad_vector(t, w);
        m.area[t] * (dot(d1, d1) + dot(d2, d2))
    })))
}

#[derive(Debug, Clone)]
pub struct InteriorStabilityReport {
    /// Per boundary-vanishing entry: `|∫(jac u − jac v)ζ|`.
    pub lhs: Vec<f64>,
    /// `½‖u−v‖(‖∇u‖+‖∇v‖)`.
    pub rhs: f64,
    /// Same with the mean of `u − v` removed.
    pub rhs_mean_removed: f64,
    pub worst_margin: f64,
    pub witness: Option<String>,
}

impl InteriorStabilityReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.worst_margin >= -slack
    }
}

/// Checks `|∫(jac u − jac v)ζ| ≤ ½‖u−v‖_{L²}(‖∇u‖+‖∇v‖)` for every boundary-vanishing
/// entry rescaled to `sup|ζ| + sup|∇ζ| ≤ 1`, plus the mean-removed variant.
pub fn stability_check_interior(
    domain: &Domain,
    u: &[V2],
    v: &[V2],
    dict: &TestDictionary,
) -> InteriorStabilityReport {
    let w: Vec<V2> = u.iter().zip(v).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    let mass: f64 = domain.mesh.area.iter().sum();
    let mut mean = [0.0; 2];
    for (t, tri) in domain.mesh.tris.iter().enumerate() {
        for &i in tri {
            mean[0] += domain.mesh.area[t] / 3.0 * w[i][0] / mass;
            mean[1] += domain.mesh.area[t] / 3.0 * w[i][1] / mass;
        }
    }
    let w0: Vec<V2> = w.iter().map(|x| [x[0] - mean[0], x[1] - mean[1]]).collect();
    let gsum = grad_norm_straight(domain, u) + grad_norm_straight(domain, v);
    let rhs = 0.5 * l2_norm_p1(domain, &w) * gsum;
    let rhs0 = 0.5 * l2_norm_p1(domain, &w0) * gsum;
    let mut lhs = Vec::new();
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for z in dict.interior() {
        let z = z.clone().unit_w1inf();
        let l = 0.5 * abs(pair_interior_values(domain, u, &z.values) - pair_interior_values(domain, v, &z.values));
        let margin = rhs0.min(rhs) - l;
        if margin < worst {
            worst = margin;
            witness = Some(z.label.clone());
        }
        lhs.push(l);
    }
    InteriorStabilityReport { lhs, rhs, rhs_mean_removed: rhs0, worst_margin: worst, witness }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalStabilitySample {
    /// `‖u−v‖_{L²}(‖∇u‖+‖∇v‖)`.
    pub t: f64,
    /// Dictionary lower bound of `‖J(u)−J(v)‖`.
    pub lhs: f64,
    /// Smallest `C ≥ 0` with `lhs ≤ t + C√t`.
    pub c_fit: f64,
}

pub fn stability_check_global(
    domain: &Domain,
    u: &[V2],
    v: &[V2],
    dict: &TestDictionary,
) -> Result<GlobalStabilitySample> {
    if let Some(i) = v.iter().position(|x| norm(*x) > 1.0 + 1e-12) {
        return Err(invalid(format!("|v| = {} > 1 at node {i}", norm(v[i]))));
    }
    let w: Vec<V2> = u.iter().zip(v).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    let t = l2_norm_p1(domain, &w) * (grad_norm_straight(domain, u) + grad_norm_straight(domain, v));
    let (lhs, _) = dual_norm_global_diff(u, v, domain, dict)?;
    let c_fit = if t > 0.0 { ((lhs - t) / sqrt(t)).max(0.0) } else { 0.0 };
    Ok(GlobalStabilitySample { t, lhs, c_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use alloc::sync::Arc;
    use alloc::vec;
    use core::f64::consts::PI;

    fn identity(n_r: usize, n_t: usize) -> VectorField2D {
        let d = Arc::new(make_disk(1.0, n_r, n_t).unwrap());
        VectorField2D::from_fn(d, 0.1, 0.1, |p| p).unwrap()
    }

    #[test]
    fn jacobian_of_linear_maps() {
        let u = identity(6, 24);
        assert!(interior_jacobian(&u).iter().all(|j| (j - 1.0).abs() < 1e-12));
        let r = u.with_values(u.domain.mesh.nodes.iter().map(|p| [p[0], -p[1]]).collect()).unwrap();
        assert!(interior_jacobian(&r).iter().all(|j| (j + 1.0).abs() < 1e-12));
        let c = u.with_values(vec![[0.3, -2.0]; u.values.len()]).unwrap();
        assert!(interior_jacobian(&c).iter().all(|&j| j == 0.0));
    }

    #[test]
    fn identity_triple_converges() {
        let mut errs = Vec::new();
        for &(nr, nt) in &[(8usize, 32usize), (16, 64), (32, 128)] {
            let u = identity(nr, nt);
            let q: Vec<f64> = u.domain.mesh.nodes.iter().map(|p| 0.5 * (sq(p[0]) + sq(p[1]))).collect();
            let one = vec![1.0; q.len()];
            let g = pair_global(&u, &q);
            let i = pair_interior(&u, &q);
            let b = pair_boundary(&u, &q);
            assert_eq!(pair_global(&u, &one), 0.0);
            assert!((b - boundary_line_integral(&u, &q)).abs() < 1e-12);
            errs.push((g + PI / 2.0).abs().max((i - PI / 2.0).abs()).max((b + PI).abs()));
            assert!((pair_boundary(&u, &one) + TAU).abs() < 0.1);
        }
        assert!(errs[1] < 0.55 * errs[0] && errs[2] < 0.55 * errs[1], "{errs:?}");
    }

    #[test]
    fn interior_test_functions_see_twice_the_jacobian() {
        let u = identity(10, 40);
        let d = &u.domain;
        let dist = boundary_distance(d);
        let g = pair_global(&u, &dist);
        let i = pair_interior(&u, &dist);
        assert!((g - i).abs() < 1e-12 * g.abs().max(1.0));
    }

    #[test]
    fn vortex_set_contract() {
        assert!(VortexSet::new(vec![Vortex { t: 0.0, d: 2 }, Vortex { t: 1.0, d: 0 }]).is_err());
        assert!(VortexSet::new(vec![Vortex { t: 0.0, d: 1 }]).is_err());
        assert!(VortexSet::new(vec![Vortex { t: 1.0, d: 1 }, Vortex { t: 1.0, d: 1 }]).is_err());
        let v = VortexSet::new(vec![Vortex { t: 4.0, d: 1 }, Vortex { t: 1.0, d: 1 }]).unwrap();
        assert_eq!(v.vortices[0].t, 1.0);
        assert!((v.min_separation() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_is_lipschitz_normalized() {
        let d = make_disk(1.0, 8, 48).unwrap();
        let dict = default_dictionary(&d, &DictionarySpec::default());
        assert!(dict.len() > 50);
        for z in &dict.entries {
            assert!(z.lip <= 1.0 + 1e-10, "{}", z.label);
            if z.vanishes_on_boundary {
                assert!(d.boundary.iter().all(|b| z.values[b.node] == 0.0));
            }
        }
        assert!(dict.interior().count() > 10);
        assert!(dual_norm(&[]).is_err());
    }
}
