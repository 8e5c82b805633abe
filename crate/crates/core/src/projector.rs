//! Projection of a finite-energy field on the disk to a unit-length field:
//! a polar grid of mesh size `η^β` chosen by averaging, cell-wise GL
//! minimization with the field as boundary data, normalization, and a radial
//! rescaling back onto the whole disk.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{invalid, Error, Result};
use crate::field::{energy, l2_boundary_distance, l2_distance, EnergyBreakdown, VectorField2D};
use crate::geometry::{BoundaryCurve, Domain};
use crate::lbfgs::{lbfgs, LbfgsConfig, Objective};
use crate::mesh::TriMesh;
use crate::num::{atan2, ceil, cos, floor, hypot, pow, sin, sq, sqrt, wrap_pi, wrap_tau, Sum, V2};

/// Polar grid: circles `r = R + kδ` (`k ≥ 1`) and rays `θ = Θ + jδ`, regrouped
/// so that every cell but the central disk has sides of length about `δ = η^β`.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub beta: f64,
    pub eta: f64,
    pub delta: f64,
    pub r_shift: f64,
    pub theta_shift: f64,
    /// Circle radii (normalized to the unit disk); the first bounds the central cell.
    pub radii: Vec<f64>,
    /// Ray angles per annulus between consecutive radii.
    pub sectors: Vec<Vec<f64>>,
    /// `∫_grid e(u)` (circles in arc length, rays weighted by `r dr`).
    pub grid_energy: f64,
    /// `(2/δ)∫ e(u) dx`.
    pub bound: f64,
}

impl PolarGrid {
    pub fn n_cells(&self) -> usize {
        1 + self.sectors.iter().map(|s| s.len()).sum::<usize>()
    }

    /// Radius of the region covered by the cells.
    pub fn outer(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn satisfies_bound(&self) -> bool {
        self.grid_energy <= self.bound
    }
}

fn disk_radius(u: &VectorField2D) -> Result<f64> {
    match u.domain.curve {
        BoundaryCurve::Disk { radius } => Ok(radius),
        _ => Err(invalid("the projector is implemented on the disk only")),
    }
}

/// `|∇u|² + (1/η²)(1 − |u|²)²` at `x`.
fn density(u: &VectorField2D, dens: &[f64], x: V2) -> f64 {
    let d = &u.domain;
    let (t, l) = d.locate(x);
    let tri = d.mesh.tris[t];
    let mut v = [0.0; 2];
    for k in 0..3 {
        v[0] += l[k] * u.values[tri[k]][0];
        v[1] += l[k] * u.values[tri[k]][1];
    }
    dens[t] + sq(1.0 - sq(v[0]) - sq(v[1])) / sq(u.eta)
}

fn mesh_spacing(d: &Domain) -> f64 {
    let m = &d.mesh;
    let mut h: f64 = 0.0;
    for tri in &m.tris {
        for k in 0..3 {
            let (p, q) = (m.nodes[tri[k]], m.nodes[tri[(k + 1) % 3]]);
            h = h.max(hypot(p[0] - q[0], p[1] - q[1]));
        }
    }
    h
}

fn group_rays(r_in: f64, r_out: f64, theta: f64, delta: f64) -> Vec<f64> {
    let n_rays = ceil(TAU / delta) as usize;
    let rays: Vec<f64> = (0..n_rays).map(|j| theta + j as f64 * delta).collect();
    let r_mid = 0.5 * (r_in + r_out);
    let group = (crate::num::round(1.0 / r_mid) as usize).max(1);
    let mut out: Vec<f64> = rays.iter().step_by(group).cloned().collect();
    // the last group absorbs the remainder; keep at least three cells
    if out.len() > 3 && TAU + theta - out[out.len() - 1] < 0.5 * group as f64 * delta {
        out.pop();
    }
    while out.len() < 3 {
        let n = out.len() + 1;
        out = (0..n).map(|j| theta + TAU * j as f64 / n as f64).collect();
    }
    out
}

/// Grid of size `δ = η^β` whose line energy is the smallest among `n_shift`
/// equally spaced radial and angular shifts.
pub fn build_polar_grid(u: &VectorField2D, beta: f64, n_shift: usize) -> Result<PolarGrid> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(invalid("beta must lie in (1/2, 1)"));
    }
    let r0 = disk_radius(u)?;
    let eta = u.eta;
    let delta = pow(eta, beta);
    let h = mesh_spacing(&u.domain) / r0;
    if delta < h {
        return Err(Error::Resolution(format!("grid size {delta:.3e} below the mesh spacing {h:.3e}")));
    }
    if 3.0 * delta >= 1.0 {
        return Err(invalid("eta^beta too large for a polar grid on the disk"));
    }
    let m = &u.domain.mesh;
    let dens: Vec<f64> = (0..m.n_tris())
        .map(|t| {
            let g = m.grad_vector(t, &u.values);
            sq(g[0][0]) + sq(g[0][1]) + sq(g[1][0]) + sq(g[1][1])
        })
        .collect();
    let total = energy(u);
    let bulk = total.dirichlet + total.penalty;
    let step = 0.5 * h;
    let n_shift = n_shift.max(1);
    let circle = |rho: f64| -> f64 {
        let n = ceil(TAU * rho / step).max(16.0) as usize;
        let mut s = Sum::new();
        for k in 0..n {
            let a = TAU * (k as f64 + 0.5) / n as f64;
            s.add(density(u, &dens, [r0 * rho * cos(a), r0 * rho * sin(a)]));
        }
        s.value() * TAU * rho * r0 / n as f64
    };
    let ray = |a: f64| -> f64 {
        let n = ceil(1.0 / step) as usize;
        let mut s = Sum::new();
        for k in 0..n {
            let rho = (k as f64 + 0.5) / n as f64;
            s.add(density(u, &dens, [r0 * rho * cos(a), r0 * rho * sin(a)]) * rho * r0);
        }
        s.value() * r0 / n as f64
    };
    let mut best_r = (f64::INFINITY, 0.0);
    for i in 0..n_shift {
        let rs = (i as f64 + 0.5) * delta / n_shift as f64;
        let mut e = 0.0;
        let mut rho = rs + delta;
        while rho < 1.0 {
            e += circle(rho);
            rho += delta;
        }
        if e < best_r.0 {
            best_r = (e, rs);
        }
    }
    let mut best_t = (f64::INFINITY, 0.0);
    for i in 0..n_shift {
        let ts = (i as f64 + 0.5) * delta / n_shift as f64;
        let n_rays = ceil(TAU / delta) as usize;
        let e: f64 = (0..n_rays).map(|j| ray(ts + j as f64 * delta)).sum();
        if e < best_t.0 {
            best_t = (e, ts);
        }
    }
    let (r_shift, theta_shift) = (best_r.1, best_t.1);
    let mut radii = Vec::new();
    let mut rho = r_shift + delta;
    while rho < 1.0 {
        radii.push(rho);
        rho += delta;
    }
    let sectors = radii.windows(2).map(|w| group_rays(w[0], w[1], theta_shift, delta)).collect();
    // the bound is stated in physical units: ∫ e dH¹ ≤ (2/δ_phys) ∫ e dx
    Ok(PolarGrid {
        beta,
        eta,
        delta,
        r_shift,
        theta_shift,
        radii,
        sectors,
        grid_energy: best_r.0 + best_t.0,
        bound: 2.0 / (delta * r0) * bulk,
    })
}

/// Cell in normalized polar coordinates; `r_in = 0` marks the central disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub r_in: f64,
    pub r_out: f64,
    pub t0: f64,
    pub t1: f64,
}

/// Structured sub-mesh of one cell, with boundary loop and parameter layout.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub cell: Cell,
    pub mesh: TriMesh,
    pub boundary: Vec<usize>,
    n_r: usize,
    n_t: usize,
}

impl CellMesh {
    fn build(cell: Cell, h: f64, scale: f64) -> Result<Self> {
        let n_r = (ceil((cell.r_out - cell.r_in) / h) as usize).clamp(3, 32);
        let mut nodes = Vec::new();
        let mut tris = Vec::new();
        let boundary;
        if cell.r_in == 0.0 {
            let n_t = (ceil(TAU * cell.r_out / h) as usize).clamp(8, 96);
            nodes.push([0.0, 0.0]);
            for i in 1..=n_r {
                let rho = cell.r_out * i as f64 / n_r as f64;
                for j in 0..n_t {
                    let a = cell.t0 + TAU * j as f64 / n_t as f64;
                    nodes.push([scale * rho * cos(a), scale * rho * sin(a)]);
                }
            }
            let id = |i: usize, j: usize| 1 + (i - 1) * n_t + j % n_t;
            for j in 0..n_t {
                tris.push([0, id(1, j), id(1, j + 1)]);
            }
            for i in 1..n_r {
                for j in 0..n_t {
                    tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            boundary = (0..n_t).map(|j| id(n_r, j)).collect();
            let mesh = TriMesh::new(nodes, tris, None)?;
            return Ok(CellMesh { cell, mesh, boundary, n_r, n_t });
        }
        let arc = cell.r_out * (cell.t1 - cell.t0);
        let n_t = (ceil(arc / h) as usize).clamp(3, 64);
        for i in 0..=n_r {
            let rho = cell.r_in + (cell.r_out - cell.r_in) * i as f64 / n_r as f64;
            for j in 0..=n_t {
                let a = cell.t0 + (cell.t1 - cell.t0) * j as f64 / n_t as f64;
                nodes.push([scale * rho * cos(a), scale * rho * sin(a)]);
            }
        }
        let id = |i: usize, j: usize| i * (n_t + 1) + j;
        for i in 0..n_r {
            for j in 0..n_t {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        // counterclockwise loop: inner arc forward, outer side, outer arc back, first side
        let mut b: Vec<usize> = (0..n_t).map(|j| id(0, j)).collect();
        b.extend((0..n_r).map(|i| id(i, n_t)));
        b.extend((1..=n_t).rev().map(|j| id(n_r, j)));
        b.extend((1..=n_r).rev().map(|i| id(i, 0)));
        boundary = b;
        let mesh = TriMesh::new(nodes, tris, None)?;
        Ok(CellMesh { cell, mesh, boundary, n_r, n_t })
    }

    /// Candidate sub-triangles containing the normalized polar point.
    fn candidates(&self, rho: f64, a: f64) -> [usize; 2] {
        let c = &self.cell;
        let fr = ((rho - c.r_in) / (c.r_out - c.r_in) * self.n_r as f64).clamp(0.0, self.n_r as f64 - 1e-9);
        let i = floor(fr) as usize;
        if c.r_in == 0.0 {
            let ft = (wrap_tau(a - c.t0) / TAU * self.n_t as f64).clamp(0.0, self.n_t as f64 - 1e-9);
            let j = floor(ft) as usize;
            if i == 0 {
                return [j, j];
            }
            let base = self.n_t + 2 * ((i - 1) * self.n_t + j);
            return [base, base + 1];
        }
        let ft = (wrap_pi(a - c.t0).max(0.0) / (c.t1 - c.t0) * self.n_t as f64).clamp(0.0, self.n_t as f64 - 1e-9);
        let j = floor(ft) as usize;
        let base = 2 * (i * self.n_t + j);
        [base, base + 1]
    }
}

/// GL energy of a cell field with fixed boundary values.
struct CellObjective<'a> {
    mesh: &'a TriMesh,
    free: Vec<usize>,
    values: Vec<V2>,
    inv_eta2: f64,
}

impl CellObjective<'_> {
    fn load(&mut self, x: &[f64]) {
        for (k, &i) in self.free.iter().enumerate() {
            self.values[i] = [x[2 * k], x[2 * k + 1]];
        }
    }
}

fn cell_energy(mesh: &TriMesh, v: &[V2], inv_eta2: f64, grad: Option<&mut Vec<V2>>) -> f64 {
    let mut e = Sum::new();
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|x| *x = [0.0, 0.0]);
    }
    for (t, tri) in mesh.tris.iter().enumerate() {
        let gv = mesh.grad_vector(t, v);
        let a = mesh.area[t];
        e.add(a * (sq(gv[0][0]) + sq(gv[0][1]) + sq(gv[1][0]) + sq(gv[1][1])));
        for &i in tri {
            let m = 1.0 - sq(v[i][0]) - sq(v[i][1]);
            e.add(a / 3.0 * inv_eta2 * m * m);
        }
        if let Some(g) = grad.as_deref_mut() {
            for (k, &i) in tri.iter().enumerate() {
                let gk = mesh.grads[t][k];
                for c in 0..2 {
                    g[i][c] += 2.0 * a * (gv[0][c] * gk[0] + gv[1][c] * gk[1]);
                }
                let m = 1.0 - sq(v[i][0]) - sq(v[i][1]);
                for c in 0..2 {
                    g[i][c] -= a / 3.0 * inv_eta2 * 4.0 * m * v[i][c];
                }
            }
        }
    }
    e.value()
}

impl Objective for CellObjective<'_> {
    fn dim(&self) -> usize {
        2 * self.free.len()
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.load(x);
        let mut full = vec![[0.0, 0.0]; self.values.len()];
        let e = cell_energy(self.mesh, &self.values, self.inv_eta2, Some(&mut full));
        for (k, &i) in self.free.iter().enumerate() {
            g[2 * k] = full[i][0];
            g[2 * k + 1] = full[i][1];
        }
        e
    }
}

/// One cell problem: the sub-mesh and the field values sampled on it.
#[derive(Debug, Clone)]
pub struct CellProblem {
    pub index: usize,
    pub mesh: CellMesh,
    pub data: Vec<V2>,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub index: usize,
    pub w: Vec<V2>,
    pub energy: f64,
    pub data_energy: f64,
    pub min_modulus: f64,
    pub sup_defect: f64,
    pub degree: i32,
}

impl CellProblem {
    /// Minimizes `∫|∇w|² + η^{−2}(1−|w|²)²` with `w = data` on the cell boundary.
    pub fn solve(&self) -> Result<CellSolution> {
        let m = &self.mesh.mesh;
        let mut fixed = vec![false; m.n_nodes()];
        for &i in &self.mesh.boundary {
            fixed[i] = true;
        }
        let free: Vec<usize> = (0..m.n_nodes()).filter(|&i| !fixed[i]).collect();
        let inv_eta2 = 1.0 / sq(self.eta);
        let data_energy = cell_energy(m, &self.data, inv_eta2, None);
        let mut obj = CellObjective { mesh: m, free: free.clone(), values: self.data.clone(), inv_eta2 };
        let x0: Vec<f64> = free.iter().flat_map(|&i| self.data[i]).collect();
        let cfg = LbfgsConfig { max_iters: 5000, grad_tol: 1e-9 * (1.0 + data_energy), ..Default::default() };
        let x = match lbfgs(&mut obj, &x0, &cfg) {
            Ok(o) => o.x,
            Err(f) => f.last.x,
        };
        obj.load(&x);
        let w = obj.values;
        let energy = cell_energy(m, &w, inv_eta2, None);
        let mut min_modulus = f64::INFINITY;
        let mut sup_defect: f64 = 0.0;
        for v in &w {
            let r2 = sq(v[0]) + sq(v[1]);
            min_modulus = min_modulus.min(sqrt(r2));
            sup_defect = sup_defect.max((r2 - 1.0).abs());
        }
        let b = &self.mesh.boundary;
        let mut wind = 0.0;
        for k in 0..b.len() {
            let (p, q) = (w[b[k]], w[b[(k + 1) % b.len()]]);
            wind += wrap_pi(atan2(q[1], q[0]) - atan2(p[1], p[0]));
        }
        let degree = crate::num::round(wind / TAU) as i32;
        if min_modulus < 0.5 {
            return Err(Error::VortexInCell { cell: self.index, min_modulus });
        }
        Ok(CellSolution { index: self.index, w, energy, data_energy, min_modulus, sup_defect, degree })
    }
}

/// Splits the grid into cells and samples `u` on each cell mesh.
pub fn cell_problems(u: &VectorField2D, grid: &PolarGrid) -> Result<Vec<CellProblem>> {
    let r0 = disk_radius(u)?;
    let h = (grid.delta / 6.0).min(mesh_spacing(&u.domain) / r0);
    let mut cells = vec![Cell { r_in: 0.0, r_out: grid.radii[0], t0: grid.theta_shift, t1: grid.theta_shift + TAU }];
    for (k, rays) in grid.sectors.iter().enumerate() {
        for j in 0..rays.len() {
            let t1 = if j + 1 < rays.len() { rays[j + 1] } else { rays[0] + TAU };
            cells.push(Cell { r_in: grid.radii[k], r_out: grid.radii[k + 1], t0: rays[j], t1 });
        }
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(index, cell)| {
            let mesh = CellMesh::build(cell, h, r0)?;
            let data = mesh.mesh.nodes.iter().map(|&x| u.domain.interpolate(&u.values, x)).collect();
            Ok(CellProblem { index, mesh, data, eta: u.eta })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub beta: f64,
    pub eta: f64,
    pub delta: f64,
    pub r_shift: f64,
    pub theta_shift: f64,
    pub n_cells: usize,
    pub grid_energy: f64,
    pub grid_bound: f64,
    /// Radius of the covered region; `U(x) = w/|w|` evaluated at `scale·x`.
    pub scale: f64,
    pub l2_sq: f64,
    pub l2_boundary_sq: f64,
    pub energy_u: EnergyBreakdown,
    pub energy_projected: EnergyBreakdown,
    pub sup_defect: f64,
    pub min_modulus: f64,
    pub nonzero_degree_cells: usize,
}

/// Projects `u` with the default sequential cell solver.
pub fn project_to_s1(u: &VectorField2D, beta: f64) -> Result<(VectorField2D, ProjectionReport)> {
    project_to_s1_with(u, beta, |cells| cells.iter().map(CellProblem::solve).collect())
}

/// As [`project_to_s1`], with the cell problems handed to `solve` (which may
/// run them in parallel; results must keep the input order).
pub fn project_to_s1_with(
    u: &VectorField2D,
    beta: f64,
    solve: impl FnOnce(&[CellProblem]) -> Vec<Result<CellSolution>>,
) -> Result<(VectorField2D, ProjectionReport)> {
    let r0 = disk_radius(u)?;
    let grid = build_polar_grid(u, beta, 16)?;
    let problems = cell_problems(u, &grid)?;
    let sols: Vec<CellSolution> = solve(&problems).into_iter().collect::<Result<_>>()?;
    let scale = grid.outer();
    let radii = &grid.radii;
    let values: Vec<V2> = u
        .domain
        .mesh
        .nodes
        .iter()
        .map(|&x| {
            let y = [scale * x[0], scale * x[1]];
            let rho = (hypot(y[0], y[1]) / r0).min(scale * (1.0 - 1e-12));
            let a = atan2(y[1], y[0]);
            let c = if rho < radii[0] {
                0
            } else {
                let k = radii.partition_point(|&q| q <= rho).saturating_sub(1).min(grid.sectors.len() - 1);
                let rays = &grid.sectors[k];
                let rel = wrap_tau(a - rays[0]);
                let j = rays.partition_point(|&t| t - rays[0] <= rel).saturating_sub(1);
                1 + grid.sectors[..k].iter().map(|s| s.len()).sum::<usize>() + j
            };
            let cm = &problems[c].mesh;
            let w = &sols[c].w;
            let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
            for t in cm.candidates(rho, a) {
                let l = cm.mesh.barycentric(t, y);
                let mn = l[0].min(l[1]).min(l[2]);
                if mn > best.0 {
                    let tri = cm.mesh.tris[t];
                    let mut v = [0.0; 2];
                    for k in 0..3 {
                        v[0] += l[k] * w[tri[k]][0];
                        v[1] += l[k] * w[tri[k]][1];
                    }
                    best = (mn, v);
                }
            }
            let n = hypot(best.1[0], best.1[1]);
            [best.1[0] / n, best.1[1] / n]
        })
        .collect();
    let proj = u.with_values(values)?;
    let report = ProjectionReport {
        beta,
        eta: u.eta,
        delta: grid.delta,
        r_shift: grid.r_shift,
        theta_shift: grid.theta_shift,
        n_cells: grid.n_cells(),
        grid_energy: grid.grid_energy,
        grid_bound: grid.bound,
        scale,
        l2_sq: sq(l2_distance(&proj.values, &u.values, &u.domain)),
        l2_boundary_sq: sq(l2_boundary_distance(&proj.values, &u.values, &u.domain)),
        energy_u: energy(u),
        energy_projected: energy(&proj),
        sup_defect: sols.iter().map(|s| s.sup_defect).fold(0.0, f64::max),
        min_modulus: sols.iter().map(|s| s.min_modulus).fold(f64::INFINITY, f64::min),
        nonzero_degree_cells: sols.iter().filter(|s| s.degree != 0).count(),
    };
    Ok((proj, report))
}

/// Convenience for tests and the CLI: the disk domain wrapped for a field.
pub fn disk_field(domain: Arc<Domain>, eps: f64, eta: f64, f: impl Fn(V2) -> V2) -> Result<VectorField2D> {
    VectorField2D::from_fn(domain, eps, eta, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use core::f64::consts::PI;

    fn disk() -> Arc<Domain> {
        Arc::new(make_disk(1.0, 32, 128).unwrap())
    }

    #[test]
    fn constant_is_fixed() {
        let u = VectorField2D::from_fn(disk(), 0.1, 0.05, |_| [1.0, 0.0]).unwrap();
        let (p, rep) = project_to_s1(&u, 0.75).unwrap();
        assert!(p.values.iter().all(|v| (v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-9));
        assert!(rep.grid_energy < 1e-20);
        assert!(rep.l2_sq < 1e-16);
    }

    #[test]
    fn unit_output_and_grid_bound() {
        let u = VectorField2D::from_fn(disk(), 0.1, 0.05, |x| {
            let a = 1.3 * x[0] + 0.7 * x[1] * x[1];
            let r = 1.0 + 0.1 * sin(3.0 * x[0]);
            [r * cos(a), r * sin(a)]
        })
        .unwrap();
        let g = build_polar_grid(&u, 0.75, 16).unwrap();
        assert!(g.satisfies_bound(), "{} {}", g.grid_energy, g.bound);
        let count = PI / sq(g.delta);
        assert!((g.n_cells() as f64) < 2.0 * count && (g.n_cells() as f64) > 0.5 * count, "{} {count}", g.n_cells());
        let (p, rep) = project_to_s1(&u, 0.75).unwrap();
        assert!(p.values.iter().all(|v| (hypot(v[0], v[1]) - 1.0).abs() < 1e-14));
        assert_eq!(rep.nonzero_degree_cells, 0);
        assert!(rep.sup_defect < 0.5);
    }

    #[test]
    fn bad_inputs() {
        let u = VectorField2D::from_fn(disk(), 0.1, 0.05, |_| [1.0, 0.0]).unwrap();
        assert!(build_polar_grid(&u, 0.4, 4).is_err());
        let fine = u.with_params(0.1, 1e-4).unwrap();
        assert!(matches!(build_polar_grid(&fine, 0.75, 4), Err(Error::Resolution(_))));
    }
}
