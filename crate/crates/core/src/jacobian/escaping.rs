//! An interior vortex escaping through the boundary: `J_bd` keeps mass 2π
//! while `J(u_ε) → J(1)`.
//!
//! The domain is the disk of radius ¼ centred at the origin and the contact
//! point sits at `(0, ¼)` (curve parameter π/2). In the blown-up variable
//! `y = (x − contact)/ε` the profile `U` equals 1 outside the unit disk, winds
//! with degree −1 around `p₋ = (0, −½)` (inside the domain) and +1 around
//! `p₊ = (0, ½)` (outside it), and is S¹-valued off the two quarter disks.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::field::VectorField2D;
use crate::geometry::{boundary_graded_levels, graded_params, BoundaryCurve, Domain};
use crate::linalg::{cg, Csr};
use crate::num::{atan2, cos, hypot, sin, sq, V2};

const P_PLUS: V2 = [0.0, 0.5];
const P_MINUS: V2 = [0.0, -0.5];
const CORE: f64 = 0.25;

fn arg(v: V2) -> f64 {
    atan2(v[1], v[0])
}

/// `Arg((y − p₊)/(y − p₋))`.
fn phase_a(y: V2) -> f64 {
    let a = [y[0] - P_PLUS[0], y[1] - P_PLUS[1]];
    let b = [y[0] - P_MINUS[0], y[1] - P_MINUS[1]];
    atan2(a[1] * b[0] - a[0] * b[1], a[0] * b[0] + a[1] * b[1])
}

fn outside_g(y: V2) -> bool {
    hypot(y[0], y[1]) >= 1.0
        || hypot(y[0] - P_PLUS[0], y[1] - P_PLUS[1]) <= CORE
        || hypot(y[0] - P_MINUS[0], y[1] - P_MINUS[1]) <= CORE
}

/// Dirichlet data for the correction `h`, evaluated at the nearest point of ∂G.
fn correction_data(y: V2) -> f64 {
    let rp = hypot(y[0] - P_PLUS[0], y[1] - P_PLUS[1]);
    let rm = hypot(y[0] - P_MINUS[0], y[1] - P_MINUS[1]);
    let r = hypot(y[0], y[1]);
    if rp <= CORE || (rp < rm && rp - CORE < 1.0 - r) {
        let q = if rp > 0.0 {
            [P_PLUS[0] + CORE * (y[0] - P_PLUS[0]) / rp, P_PLUS[1] + CORE * (y[1] - P_PLUS[1]) / rp]
        } else {
            [P_PLUS[0], P_PLUS[1] + CORE]
        };
        arg([q[0] - P_MINUS[0], q[1] - P_MINUS[1]])
    } else if rm <= CORE || rm - CORE < 1.0 - r {
        let q = if rm > 0.0 {
            [P_MINUS[0] + CORE * (y[0] - P_MINUS[0]) / rm, P_MINUS[1] + CORE * (y[1] - P_MINUS[1]) / rm]
        } else {
            [P_MINUS[0], P_MINUS[1] - CORE]
        };
        -arg([q[0] - P_PLUS[0], q[1] - P_PLUS[1]])
    } else {
        let q = [y[0] / r, y[1] / r];
        -phase_a(q)
    }
}

/// Blow-up profile `U` with its harmonic phase correction on a Cartesian grid.
#[derive(Debug, Clone)]
pub struct EscapeProfile {
    n: usize,
    h: Vec<f64>,
}

impl EscapeProfile {
    pub fn new(n: usize) -> Result<Self> {
        let n = n.max(33);
        let dx = 2.0 / (n - 1) as f64;
        let pos = |i: usize| -1.0 + dx * i as f64;
        let mut val = vec![0.0; n * n];
        let mut free = vec![usize::MAX; n * n];
        let mut n_free = 0;
        for j in 0..n {
            for i in 0..n {
                let y = [pos(i), pos(j)];
                let onrim = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                if outside_g(y) || onrim {
                    val[j * n + i] = correction_data(y);
                } else {
                    free[j * n + i] = n_free;
                    n_free += 1;
                }
            }
        }
        let mut trip = Vec::with_capacity(5 * n_free);
        let mut rhs = vec![0.0; n_free];
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let r = free[k];
                if r == usize::MAX {
                    continue;
                }
                trip.push((r, r, 4.0));
                for (ii, jj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    let q = jj * n + ii;
                    if free[q] == usize::MAX {
                        rhs[r] += val[q];
                    } else {
                        trip.push((r, free[q], -1.0));
                    }
                }
            }
        }
        let a = Csr::from_triplets(n_free, trip);
        let mut x = vec![0.0; n_free];
        cg(&a, &rhs, &mut x, 1e-12, 100 * n + 10_000)?;
        for k in 0..n * n {
            if free[k] != usize::MAX {
                val[k] = x[free[k]];
            }
        }
        Ok(EscapeProfile { n, h: val })
    }

    /// Grid correction with the boundary mismatch blended out over two cells,
    /// so `U` matches the core profiles and 1 exactly on ∂G.
    fn correction(&self, y: V2) -> f64 {
        let dx = 2.0 / (self.n - 1) as f64;
        let band = 2.0 * dx;
        let mut h = self.grid_value(y);
        let r = hypot(y[0], y[1]);
        let mut fix = |dist: f64, q: V2| {
            if dist < band {
                let w = 1.0 - dist / band;
                h += w * (correction_data(q) - self.grid_value(q));
            }
        };
        for c in [P_PLUS, P_MINUS] {
            let rc = hypot(y[0] - c[0], y[1] - c[1]);
            if rc > 0.0 {
                let q = [c[0] + CORE * (y[0] - c[0]) / rc, c[1] + CORE * (y[1] - c[1]) / rc];
                fix(rc - CORE, q);
            }
        }
        if r > 0.0 {
            fix(1.0 - r, [y[0] / r, y[1] / r]);
        }
        h
    }

    fn grid_value(&self, y: V2) -> f64 {
        let n = self.n;
        let dx = 2.0 / (n - 1) as f64;
        let fx = ((y[0] + 1.0) / dx).clamp(0.0, (n - 1) as f64 - 1e-12);
        let fy = ((y[1] + 1.0) / dx).clamp(0.0, (n - 1) as f64 - 1e-12);
        let (i, j) = (fx as usize, fy as usize);
        let (a, b) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| self.h[j * n + i];
        (1.0 - a) * (1.0 - b) * v(i, j) + a * (1.0 - b) * v(i + 1, j) + (1.0 - a) * b * v(i, j + 1) + a * b * v(i + 1, j + 1)
    }

    pub fn eval(&self, y: V2) -> V2 {
        if hypot(y[0], y[1]) >= 1.0 {
            return [1.0, 0.0];
        }
        let rp = hypot(y[0] - P_PLUS[0], y[1] - P_PLUS[1]);
        if rp < CORE {
            let t = arg([y[0] - P_PLUS[0], y[1] - P_PLUS[1]]);
            return [4.0 * rp * cos(t), 4.0 * rp * sin(t)];
        }
        let rm = hypot(y[0] - P_MINUS[0], y[1] - P_MINUS[1]);
        if rm < CORE {
            let t = -arg([y[0] - P_MINUS[0], y[1] - P_MINUS[1]]);
            return [4.0 * rm * cos(t), 4.0 * rm * sin(t)];
        }
        let p = phase_a(y) + self.correction(y);
        [cos(p), sin(p)]
    }

    /// `∫_{B²}|∇U|²` by central differences on the grid (2π from each core).
    pub fn plane_dirichlet(&self) -> f64 {
        let n = self.n;
        let dx = 2.0 / (n - 1) as f64;
        let mut s = 0.0;
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let c = [-1.0 + dx * (i as f64 + 0.5), -1.0 + dx * (j as f64 + 0.5)];
                if outside_g(c) {
                    continue;
                }
                let e = 1e-4 * dx;
                let u = |y: V2| self.eval(y);
                let d1 = {
                    let (p, m) = (u([c[0] + e, c[1]]), u([c[0] - e, c[1]]));
                    [(p[0] - m[0]) / (2.0 * e), (p[1] - m[1]) / (2.0 * e)]
                };
                let d2 = {
                    let (p, m) = (u([c[0], c[1] + e]), u([c[0], c[1] - e]));
                    [(p[0] - m[0]) / (2.0 * e), (p[1] - m[1]) / (2.0 * e)]
                };
                s += sq(dx) * (sq(d1[0]) + sq(d1[1]) + sq(d2[0]) + sq(d2[1]));
            }
        }
        s + 4.0 * PI
    }
}

#[derive(Debug, Clone)]
pub struct EscapingVortex {
    pub field: VectorField2D,
    pub profile: EscapeProfile,
    pub eps: f64,
    /// Contact point on the boundary.
    pub contact: V2,
}

/// Mesh of the radius-¼ disk refined around the contact point at scale `eps`.
pub fn escaping_domain(eps: f64) -> Result<Domain> {
    let h_rel = eps / 8.0;
    let levels = boundary_graded_levels(h_rel, 1.0 / 24.0, 1.08);
    let params = graded_params(&[PI / 2.0], h_rel, core::f64::consts::TAU / 128.0, 1.08);
    Domain::build(BoundaryCurve::Disk { radius: 0.25 }, levels, params)
}

pub fn build_escaping_vortex(eps: f64) -> Result<EscapingVortex> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(invalid("escaping vortex needs 0 < eps < 1/4"));
    }
    let domain = Arc::new(escaping_domain(eps)?);
    let profile = EscapeProfile::new(129)?;
    let contact = [0.0, 0.25];
    let values = domain
        .mesh
        .nodes
        .iter()
        .map(|p| profile.eval([(p[0] - contact[0]) / eps, (p[1] - contact[1]) / eps]))
        .collect();
    let field = VectorField2D::new(domain, values, eps, eps)?;
    Ok(EscapingVortex { field, profile, eps, contact })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_continuous_across_the_cores() {
        let p = EscapeProfile::new(65).unwrap();
        for k in 0..16 {
            let t = core::f64::consts::TAU * k as f64 / 16.0;
            for c in [P_PLUS, P_MINUS] {
                let inner = p.eval([c[0] + 0.2499 * cos(t), c[1] + 0.2499 * sin(t)]);
                let outer = p.eval([c[0] + 0.2501 * cos(t), c[1] + 0.2501 * sin(t)]);
                assert!(hypot(inner[0] - outer[0], inner[1] - outer[1]) < 0.1, "{t} {c:?}");
            }
            let a = p.eval([0.999 * cos(t), 0.999 * sin(t)]);
            assert!(hypot(a[0] - 1.0, a[1]) < 0.1);
        }
    }

    #[test]
    fn rejects_large_eps() {
        assert!(build_escaping_vortex(0.3).is_err());
    }
}
