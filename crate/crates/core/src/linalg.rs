//! Compressed sparse rows and a Jacobi-preconditioned conjugate gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num::sqrt;

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Assemble from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (i, di) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    *di = self.vals[k];
                }
            }
        }
        d
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
/// Stops when `‖r‖ ≤ tol·‖b‖`.
pub fn cg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = a.n;
    let d = a.diag();
    if d.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numeric("non-positive diagonal in CG".into()));
    }
    let bn = sqrt(dotv(b, b));
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&d).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dotv(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if sqrt(dotv(&r, &r)) <= tol * bn {
            return Ok(it);
        }
        a.mul(&p, &mut ap);
        let pap = dotv(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Numeric("matrix not positive definite in CG".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / d[i];
        }
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if sqrt(dotv(&r, &r)) <= tol * bn {
        Ok(max_iter)
    } else {
        Err(Error::Numeric("CG did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = Csr::from_triplets(n, t);
        let xe: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul(&xe, &mut b);
        let mut x = vec![0.0; n];
        cg(&a, &b, &mut x, 1e-13, 500).unwrap();
        for i in 0..n {
            assert!((x[i] - xe[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.diag(), vec![4.0, 2.0]);
    }
}
