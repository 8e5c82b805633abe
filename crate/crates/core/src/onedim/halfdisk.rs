use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{f_eps, Profile1D};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cg, Csr};
use crate::mesh::TriMesh;
use crate::num::{abs, atan2, cos, exp, gauss_legendre, hypot, ln, sin, sq, sqrt, Sum, V2};
use crate::renorm::gamma0;

/// Polar mesh of the half-disk `B_r⁺`, graded toward the origin and toward
/// optional extra points on the flat segment.
#[derive(Debug, Clone)]
pub struct HalfDiskMesh {
    pub r: f64,
    pub mesh: TriMesh,
    /// Nodes on the flat segment `I_r`, sorted by `x`.
    pub flat: Vec<usize>,
    /// Nodes on the half-circle.
    pub arc: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfDiskResolution {
    /// Finest spacing is `ε / h_ratio`.
    pub h_ratio: f64,
    /// Angular cells of the ungraded part.
    pub n_theta: usize,
    /// Spacing grows like `h_min + (growth − 1)·distance`.
    pub growth: f64,
}

impl Default for HalfDiskResolution {
    fn default() -> Self {
        HalfDiskResolution { h_ratio: 4.0, n_theta: 128, growth: 1.025 }
    }
}

fn march(a: f64, b: f64, spacing: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut t = a;
    while t < b {
        t += spacing(t);
        pts.push(t);
    }
    let n = pts.len() - 1;
    let scale = (b - a) / (pts[n] - a);
    pts.iter().map(|p| a + (p - a) * scale).collect()
}

impl HalfDiskMesh {
    pub fn build(r: f64, h_min: f64, centres: &[f64], res: &HalfDiskResolution) -> Result<Self> {
        if !(r > 0.0) || !(h_min > 0.0) || h_min >= r || res.n_theta < 4 || !(res.growth > 1.0) {
            return Err(invalid("bad half-disk mesh parameters"));
        }
        let slope = res.growth - 1.0;
        let h_max = r * PI / res.n_theta as f64;
        let radii: Vec<f64> = centres.iter().map(|c| abs(*c)).filter(|&c| c > 0.0 && c < r).collect();
        let levels = march(0.0, r, |rho| {
            let mut h = (h_min + slope * rho).min(h_max);
            for &c in &radii {
                h = h.min(h_min + slope * abs(rho - c));
            }
            h
        });
        let pos = centres.iter().cloned().filter(|&c| c > 0.0 && c < r).fold(f64::INFINITY, f64::min);
        let neg = centres.iter().map(|&c| -c).filter(|&c| c > 0.0 && c < r).fold(f64::INFINITY, f64::min);
        let base = PI / res.n_theta as f64;
        let angles = march(0.0, PI, |th| {
            let mut h = base;
            if pos.is_finite() {
                h = h.min(h_min / pos + slope * th);
            }
            if neg.is_finite() {
                h = h.min(h_min / neg + slope * (PI - th));
            }
            h
        });
        let nr = levels.len() - 1;
        let nt = angles.len() - 1;
        let id = |i: usize, j: usize| 1 + (i - 1) * (nt + 1) + j;
        let mut nodes = vec![[0.0, 0.0]];
        for &rho in &levels[1..] {
            for &th in &angles {
                nodes.push([rho * cos(th), rho * sin(th)]);
            }
        }
        // exact flat boundary
        for i in 1..=nr {
            nodes[id(i, 0)][1] = 0.0;
            nodes[id(i, nt)][1] = 0.0;
        }
        let mut tris = Vec::new();
        for j in 0..nt {
            tris.push([0, id(1, j), id(1, j + 1)]);
        }
        for i in 1..nr {
            for j in 0..nt {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mesh = TriMesh::new(nodes, tris, None)?;
        let mut flat: Vec<usize> = (1..=nr).rev().map(|i| id(i, nt)).collect();
        flat.push(0);
        flat.extend((1..=nr).map(|i| id(i, 0)));
        let arc = (0..=nt).map(|j| id(nr, j)).collect();
        Ok(HalfDiskMesh { r, mesh, flat, arc })
    }
}

#[derive(Debug, Clone)]
pub struct HalfDiskField {
    pub mesh: Arc<HalfDiskMesh>,
    pub psi: Vec<f64>,
    pub eps: f64,
    /// Boundary phase on the flat nodes (same order as `mesh.flat`); zero if absent.
    pub g: Option<Vec<f64>>,
}

impl HalfDiskField {
    pub fn from_fn(mesh: Arc<HalfDiskMesh>, eps: f64, f: impl Fn(V2) -> f64) -> Self {
        let psi = mesh.mesh.nodes.iter().map(|&p| f(p)).collect();
        HalfDiskField { mesh, psi, eps, g: None }
    }

    /// `ψ(·, 0)` on `I_r`.
    pub fn trace(&self) -> Profile1D {
        let m = &self.mesh;
        Profile1D {
            x: m.flat.iter().map(|&i| m.mesh.nodes[i][0]).collect(),
            values: m.flat.iter().map(|&i| self.psi[i]).collect(),
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfDiskEnergy {
    pub dirichlet: f64,
    pub anchoring: f64,
    pub total: f64,
}

const FLAT_GAUSS: usize = 4;

/// `∫_{B_r⁺}|∇ψ|² + (1/2πε)∫_{I_r} sin²(ψ − g)`, optionally with its gradient.
fn energy_grad(f: &HalfDiskField, grad: Option<&mut [f64]>) -> HalfDiskEnergy {
    let m = &f.mesh.mesh;
    let mut dir = Sum::new();
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    for (t, tri) in m.tris.iter().enumerate() {
        let gr = m.grad_scalar(t, &f.psi);
        dir.add(m.measure[t] * (sq(gr[0]) + sq(gr[1])));
        if let Some(g) = grad.as_deref_mut() {
            for k in 0..3 {
                let gk = m.grads[t][k];
                g[tri[k]] += 2.0 * m.measure[t] * (gr[0] * gk[0] + gr[1] * gk[1]);
            }
        }
    }
    let (gx, gw) = gauss_legendre(FLAT_GAUSS);
    let flat = &f.mesh.flat;
    let mut anc = Sum::new();
    let c = 1.0 / (2.0 * PI * f.eps);
    for k in 0..flat.len() - 1 {
        let (a, b) = (flat[k], flat[k + 1]);
        let l = m.nodes[b][0] - m.nodes[a][0];
        let (ga, gb) = match &f.g {
            Some(g) => (g[k], g[k + 1]),
            None => (0.0, 0.0),
        };
        for (xi, wi) in gx.iter().zip(&gw) {
            let s = 0.5 * (xi + 1.0);
            let v = (1.0 - s) * (f.psi[a] - ga) + s * (f.psi[b] - gb);
            let w = 0.5 * wi * l * c;
            anc.add(w * sq(sin(v)));
            if let Some(g) = grad.as_deref_mut() {
                let d = w * sin(2.0 * v);
                g[a] += (1.0 - s) * d;
                g[b] += s * d;
            }
        }
    }
    let (d, a) = (dir.value(), anc.value());
    HalfDiskEnergy { dirichlet: d, anchoring: a, total: d + a }
}

pub fn halfdisk_energy(f: &HalfDiskField) -> HalfDiskEnergy {
    energy_grad(f, None)
}

/// `π log(r/ε) + γ₀`, the energy of the Peierls profile up to `O(ε/r)`.
pub fn peierls_energy_oracle(eps: f64, r: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < r) {
        return Err(invalid("need 0 < eps < r"));
    }
    Ok(PI * ln(r / eps) + gamma0())
}

/// `arg(x + i(y + 2πε))` sampled on a half-disk mesh graded down to `ε/h_ratio`.
pub fn peierls_profile(eps: f64, r: f64, res: &HalfDiskResolution) -> Result<HalfDiskField> {
    if !(eps > 0.0 && eps < r) {
        return Err(invalid("need 0 < eps < r"));
    }
    let mesh = Arc::new(HalfDiskMesh::build(r, eps / res.h_ratio, &[], res)?);
    let a = 2.0 * PI * eps;
    Ok(HalfDiskField::from_fn(mesh, eps, |p| atan2(p[1] + a, p[0])))
}

/// `Σ_{j=1..d} arg(x − f·x_j + i(y + 2πε f))` with `x_j = j/|log ε|` and the
/// cutoff `f` equal to 1 inside `B_{r(1−r)}`, decaying linearly to 0 at `r`.
pub fn higher_multiplicity_profile(d: u32, eps: f64, r: f64, res: &HalfDiskResolution) -> Result<HalfDiskField> {
    if d == 0 || !(r > 0.0 && r < 1.0) {
        return Err(invalid("need d ≥ 1 and 0 < r < 1"));
    }
    if !(eps > 0.0 && eps < exp(-1.0 / (r * r))) {
        return Err(invalid(format!("eps must be below exp(-1/r²) = {:.3e}", exp(-1.0 / (r * r)))));
    }
    let a = 1.0 / ln(1.0 / eps);
    let centres: Vec<f64> = (1..=d).map(|j| j as f64 * a).collect();
    let mut all = centres.clone();
    all.push(0.0);
    let mesh = Arc::new(HalfDiskMesh::build(r, eps / res.h_ratio, &all, res)?);
    let inner = r * (1.0 - r);
    Ok(HalfDiskField::from_fn(mesh, eps, |p| {
        let rho = hypot(p[0], p[1]);
        let f = if rho < inner {
            1.0
        } else if rho <= r {
            (r - rho) / (r * r)
        } else {
            0.0
        };
        centres.iter().map(|&xj| atan2(p[1] + 2.0 * PI * eps * f, p[0] - f * xj)).sum()
    }))
}

/// Dirichlet data on the half-circle for [`minimize_f_eps`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcData {
    /// `arg(x + i(y + 2πε))`.
    Peierls,
    /// `arg(x + iy)`.
    Sharp,
}

#[derive(Debug, Clone)]
pub struct FEpsMinimizer {
    pub field: HalfDiskField,
    pub profile: Profile1D,
    pub energy: HalfDiskEnergy,
    /// `F̂_ε − π log(r/ε)`.
    pub excess: f64,
    /// `F_ε(trace; I_r) − π log(r/ε)`.
    pub trace_excess: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Norm of the energy gradient restricted to the free (non-arc) nodes, scaled
/// by the lumped node masses so it approximates an `L²` norm.
pub fn free_gradient_norm(f: &HalfDiskField) -> f64 {
    let n = f.psi.len();
    let mut g = vec![0.0; n];
    energy_grad(f, Some(&mut g));
    let mass = f.mesh.mesh.node_mass();
    let mut fixed = vec![false; n];
    for &i in &f.mesh.arc {
        fixed[i] = true;
    }
    sqrt((0..n).filter(|&i| !fixed[i] && mass[i] > 0.0).map(|i| sq(g[i]) / mass[i]).sum::<f64>())
}

/// Minimizes `F̂_ε^{(0)}(ψ; B_r⁺)` over `ψ` with the given data on the
/// half-circle by damped Newton iterations (convexified anchoring Hessian),
/// starting from a Peierls profile with a four times wider core.
pub fn minimize_f_eps(data: ArcData, eps: f64, r: f64, res: &HalfDiskResolution, max_iters: usize) -> Result<FEpsMinimizer> {
    if !(eps > 0.0 && eps < r) {
        return Err(invalid("need 0 < eps < r"));
    }
    let mesh = Arc::new(HalfDiskMesh::build(r, eps / res.h_ratio, &[], res)?);
    let a = 2.0 * PI * eps;
    let mut field = HalfDiskField::from_fn(mesh.clone(), eps, |p| atan2(p[1] + 4.0 * a, p[0]));
    let n = field.psi.len();
    let mut fixed = vec![false; n];
    for &i in &mesh.arc {
        let p = mesh.mesh.nodes[i];
        field.psi[i] = match data {
            ArcData::Peierls => atan2(p[1] + a, p[0]),
            ArcData::Sharp => atan2(p[1], p[0]),
        };
        fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let stiff = mesh.mesh.stiffness();
    let (gx, gw) = gauss_legendre(FLAT_GAUSS);
    let c = 1.0 / (2.0 * PI * eps);
    let mut g = vec![0.0; n];
    let mut e = energy_grad(&field, Some(&mut g));
    let mut iterations = 0;
    let mut converged = false;
    let scale = free_gradient_norm(&field).max(1e-300);
    let mut gnorm = scale;
    while iterations < max_iters {
        gnorm = free_gradient_norm(&field);
        if gnorm <= 1e-9 * scale.max(1.0) {
            converged = true;
            break;
        }
        let mut trip = Vec::with_capacity(stiff.vals.len() + 4 * mesh.flat.len());
        for i in 0..n {
            if fixed[i] {
                continue;
            }
            for p in stiff.row_ptr[i]..stiff.row_ptr[i + 1] {
                let j = stiff.cols[p];
                if !fixed[j] {
                    trip.push((index[i], index[j], 2.0 * stiff.vals[p]));
                }
            }
        }
        let flat = &mesh.flat;
        for k in 0..flat.len() - 1 {
            let (ia, ib) = (flat[k], flat[k + 1]);
            let l = mesh.mesh.nodes[ib][0] - mesh.mesh.nodes[ia][0];
            for (xi, wi) in gx.iter().zip(&gw) {
                let s = 0.5 * (xi + 1.0);
                let v = (1.0 - s) * field.psi[ia] + s * field.psi[ib];
                let h = (0.5 * wi * l * c * 2.0 * cos(2.0 * v)).max(0.0);
                let w = [(ia, 1.0 - s), (ib, s)];
                for &(p, wp) in &w {
                    for &(q, wq) in &w {
                        if !fixed[p] && !fixed[q] {
                            trip.push((index[p], index[q], h * wp * wq));
                        }
                    }
                }
            }
        }
        let hess = Csr::from_triplets(free.len(), trip);
        let rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
        let mut step = vec![0.0; free.len()];
        cg(&hess, &rhs, &mut step, 1e-10, 20 * free.len())?;
        let slope: f64 = rhs.iter().zip(&step).map(|(r, s)| -r * s).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = field.clone();
            for (k, &i) in free.iter().enumerate() {
                trial.psi[i] += t * step[k];
            }
            let mut gt = vec![0.0; n];
            let et = energy_grad(&trial, Some(&mut gt));
            if et.total <= e.total + 1e-4 * t * slope {
                field = trial;
                e = et;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    if !converged && gnorm > 1e-4 * scale.max(1.0) {
        return Err(Error::Numeric(format!(
            "half-disk minimization stopped after {iterations} iterations with gradient {gnorm:.3e}"
        )));
    }
    let profile = field.trace();
    let log = PI * ln(r / eps);
    let trace_excess = f_eps(&profile) - log;
    Ok(FEpsMinimizer {
        excess: e.total - log,
        energy: e,
        profile,
        trace_excess,
        field,
        iterations,
        grad_norm: gnorm,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_and_mesh_shape() {
        let m = Arc::new(HalfDiskMesh::build(1.0, 0.01, &[], &HalfDiskResolution::default()).unwrap());
        let total = m.mesh.total_measure();
        assert!(abs(total - 0.5 * PI) < 1e-3);
        let f = HalfDiskField::from_fn(m.clone(), 0.1, |_| 0.0);
        assert_eq!(halfdisk_energy(&f).total, 0.0);
        let xs: Vec<f64> = m.flat.iter().map(|&i| m.mesh.nodes[i][0]).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert!(abs(xs[0] + 1.0) < 1e-12 && abs(xs[xs.len() - 1] - 1.0) < 1e-12);
    }

    #[test]
    fn peierls_trace_values() {
        let eps = 1e-2;
        let f = peierls_profile(eps, 1.0, &HalfDiskResolution::default()).unwrap();
        let tr = f.trace();
        assert!(abs(tr.eval(0.0) - 0.5 * PI) < 1e-12);
        assert!(tr.values[0] > PI - 0.1 && tr.values[tr.values.len() - 1] < 0.1);
        let a = 2.0 * PI * eps;
        for (&x, &v) in tr.x.iter().zip(&tr.values) {
            assert!(abs(sq(sin(v)) - a * a / (x * x + a * a)) < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let m = Arc::new(HalfDiskMesh::build(1.0, 0.05, &[], &HalfDiskResolution { n_theta: 16, ..Default::default() }).unwrap());
        let f = HalfDiskField::from_fn(m.clone(), 0.1, |p| 0.3 + p[0] * p[1] + sin(2.0 * p[0]));
        let mut g = vec![0.0; f.psi.len()];
        energy_grad(&f, Some(&mut g));
        for &i in &[0usize, 3, 17, m.flat[2], 40] {
            let h = 1e-6;
            let mut a = f.clone();
            a.psi[i] += h;
            let mut b = f.clone();
            b.psi[i] -= h;
            let fd = (halfdisk_energy(&a).total - halfdisk_energy(&b).total) / (2.0 * h);
            assert!(abs(fd - g[i]) < 1e-6 * (1.0 + abs(g[i])), "{i}: {fd} {}", g[i]);
        }
    }

    #[test]
    fn multiplicity_precondition() {
        assert!(higher_multiplicity_profile(2, 0.1, 0.5, &HalfDiskResolution::default()).is_err());
    }
}
