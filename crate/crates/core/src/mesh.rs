//! Straight-sided P1 triangle meshes with optional curved quadrature weights.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Csr;
use crate::num::{cross, dot, sub, V2};

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub nodes: Vec<V2>,
    /// Counter-clockwise vertex triples.
    pub tris: Vec<[usize; 3]>,
    /// Area of the straight triangle.
    pub area: Vec<f64>,
    /// Quadrature weight of the cell; equals `area` unless the owner supplied
    /// curved-cell measures.
    pub measure: Vec<f64>,
    /// Gradients of the three barycentric basis functions.
    pub grads: Vec<[V2; 3]>,
}

impl TriMesh {
    pub fn new(nodes: Vec<V2>, tris: Vec<[usize; 3]>, measure: Option<Vec<f64>>) -> Result<Self> {
        let mut area = Vec::with_capacity(tris.len());
        let mut grads = Vec::with_capacity(tris.len());
        for (k, t) in tris.iter().enumerate() {
            if t.iter().any(|&i| i >= nodes.len()) {
                return Err(invalid("triangle references a missing node"));
            }
            let [a, b, c] = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            let twice = cross(sub(b, a), sub(c, a));
            if !(twice > 0.0) {
                return Err(invalid(alloc::format!("triangle {k} is degenerate or clockwise")));
            }
            area.push(0.5 * twice);
            // ∇λ_i = perp(opposite edge) / (2A), pointing into the triangle
            let g = |p: V2, q: V2| {
                let e = sub(q, p);
                [-e[1] / twice, e[0] / twice]
            };
            grads.push([g(b, c), g(c, a), g(a, b)]);
        }
        let measure = match measure {
            Some(m) => {
                if m.len() != tris.len() || m.iter().any(|&w| !(w > 0.0)) {
                    return Err(invalid("cell measures must be positive, one per triangle"));
                }
                m
            }
            None => area.clone(),
        };
        Ok(TriMesh { nodes, tris, area, measure, grads })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn grad_scalar(&self, t: usize, f: &[f64]) -> V2 {
        let [a, b, c] = self.tris[t];
        let g = &self.grads[t];
        // differences against vertex 0 so constants give exactly zero
        let (db, dc) = (f[b] - f[a], f[c] - f[a]);
        [db * g[1][0] + dc * g[2][0], db * g[1][1] + dc * g[2][1]]
    }

    /// `[∂₁u, ∂₂u]` of a vector field on cell `t`.
    pub fn grad_vector(&self, t: usize, u: &[V2]) -> [V2; 2] {
        let [a, b, c] = self.tris[t];
        let g = &self.grads[t];
        let db = [u[b][0] - u[a][0], u[b][1] - u[a][1]];
        let dc = [u[c][0] - u[a][0], u[c][1] - u[a][1]];
        [
            [db[0] * g[1][0] + dc[0] * g[2][0], db[1] * g[1][0] + dc[1] * g[2][0]],
            [db[0] * g[1][1] + dc[0] * g[2][1], db[1] * g[1][1] + dc[1] * g[2][1]],
        ]
    }

    pub fn centroid(&self, t: usize) -> V2 {
        let [a, b, c] = self.tris[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Lumped nodal weights `Σ measure/3` over incident cells.
    pub fn node_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for (t, tri) in self.tris.iter().enumerate() {
            for &i in tri {
                m[i] += self.measure[t] / 3.0;
            }
        }
        m
    }

    pub fn total_measure(&self) -> f64 {
        crate::num::sum(self.measure.iter().copied())
    }

    /// Unique undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::with_capacity(3 * self.tris.len());
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                e.push(if a < b { (a, b) } else { (b, a) });
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn dirichlet_scalar(&self, f: &[f64]) -> f64 {
        crate::num::sum((0..self.tris.len()).map(|t| {
            let g = self.grad_scalar(t, f);
            self.measure[t] * dot(g, g)
        }))
    }

    /// Stiffness matrix of `∫|∇f|²` with the cell measures as weights.
    pub fn stiffness(&self) -> Csr {
        let mut trip = Vec::with_capacity(9 * self.tris.len());
        for (t, tri) in self.tris.iter().enumerate() {
            let g = &self.grads[t];
            for a in 0..3 {
                for b in 0..3 {
                    trip.push((tri[a], tri[b], self.measure[t] * dot(g[a], g[b])));
                }
            }
        }
        Csr::from_triplets(self.nodes.len(), trip)
    }

    /// Barycentric coordinates of `x` in cell `t` (may be negative outside).
    pub fn barycentric(&self, t: usize, x: V2) -> [f64; 3] {
        let [a, b, c] = self.tris[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let twice = 2.0 * self.area[t];
        let l0 = cross(sub(pb, x), sub(pc, x)) / twice;
        let l1 = cross(sub(pc, x), sub(pa, x)) / twice;
        [l0, l1, 1.0 - l0 - l1]
    }
}

/// Solves the discrete Laplace equation with Dirichlet values on `fixed` nodes.
pub fn harmonic_solve(mesh: &TriMesh, fixed: &[(usize, f64)], guess: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut is_fixed = vec![false; n];
    let mut val = guess.to_vec();
    for &(i, v) in fixed {
        is_fixed[i] = true;
        val[i] = v;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let k = mesh.stiffness();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; free.len()];
    for i in 0..n {
        if is_fixed[i] {
            continue;
        }
        let r = index[i];
        for p in k.row_ptr[i]..k.row_ptr[i + 1] {
            let j = k.cols[p];
            if is_fixed[j] {
                rhs[r] -= k.vals[p] * val[j];
            } else {
                trip.push((r, index[j], k.vals[p]));
            }
        }
    }
    let a = Csr::from_triplets(free.len(), trip);
    let mut x: Vec<f64> = free.iter().map(|&i| val[i]).collect();
    crate::linalg::cg(&a, &rhs, &mut x, tol, 20 * free.len() + 1000)?;
    for (k, &i) in free.iter().enumerate() {
        val[i] = x[k];
    }
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> TriMesh {
        let mut nodes = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut tris = Vec::new();
        for j in 0..n {
            for i in 0..n {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriMesh::new(nodes, tris, None).unwrap()
    }

    #[test]
    fn linear_gradients_are_exact() {
        let m = square(4);
        let f: Vec<f64> = m.nodes.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        for t in 0..m.n_tris() {
            let g = m.grad_scalar(t, &f);
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
        assert!((m.dirichlet_scalar(&f) - 13.0).abs() < 1e-11);
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let r = TriMesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]], None);
        assert!(r.is_err());
    }

    #[test]
    fn harmonic_solve_reproduces_linear_data() {
        let m = square(6);
        let exact: Vec<f64> = m.nodes.iter().map(|p| p[0] + 0.5 * p[1]).collect();
        let fixed: Vec<(usize, f64)> = m
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, p)| p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0)
            .map(|(i, _)| (i, exact[i]))
            .collect();
        let u = harmonic_solve(&m, &fixed, &vec![0.0; m.n_nodes()], 1e-13).unwrap();
        for i in 0..u.len() {
            assert!((u[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn barycentric_of_vertices() {
        let m = square(1);
        let l = m.barycentric(0, m.nodes[m.tris[0][1]]);
        assert!((l[1] - 1.0).abs() < 1e-14 && l[0].abs() < 1e-14);
    }
}
