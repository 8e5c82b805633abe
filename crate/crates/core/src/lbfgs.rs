//! Limited-memory BFGS with Armijo backtracking and an optional variable
//! preconditioner for the initial inverse Hessian.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::num::sqrt;

pub trait Objective {
    fn dim(&self) -> usize;

    /// Value at `x`, writing the gradient into `g`.
    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64;

    fn value(&mut self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }

    /// Refresh the preconditioner at `x`; called once per accepted iterate.
    fn update_preconditioner(&mut self, _x: &[f64]) {}

    /// Apply an approximation of the inverse Hessian to `r` in place.
    fn precondition(&self, _r: &mut [f64]) {}

    /// Norm used for the convergence test.
    fn grad_norm(&self, g: &[f64]) -> f64 {
        sqrt(dot(g, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Step contraction factor in `(0, 1)`.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { max_iters: 20_000, grad_tol: 1e-6, memory: 12, armijo: 1e-4, backtrack: 0.5, max_backtracks: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Value after every accepted step (first entry is the start value).
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LbfgsFailure {
    pub error: Error,
    pub last: LbfgsOutcome,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lbfgs<O: Objective>(obj: &mut O, x0: &[f64], cfg: &LbfgsConfig) -> Result<LbfgsOutcome, LbfgsFailure> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&x, &mut g);
    let mut trace = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let outcome = |x: Vec<f64>, f: f64, gn: f64, it: usize, conv: bool, trace: Vec<f64>| LbfgsOutcome {
        x,
        value: f,
        grad_norm: gn,
        iterations: it,
        converged: conv,
        trace,
    };
    let mut gn = obj.grad_norm(&g);
    if !f.is_finite() {
        return Err(LbfgsFailure {
            error: Error::Numeric("non-finite objective at the starting point".into()),
            last: outcome(x, f, gn, 0, false, trace),
        });
    }
    obj.update_preconditioner(&x);
    for it in 0..cfg.max_iters {
        if gn <= cfg.grad_tol {
            return Ok(outcome(x, f, gn, it, true, trace));
        }
        let mut fresh = mem.is_empty();
        direction(obj, &g, &mem, &mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            fresh = true;
            direction(obj, &g, &mem, &mut d);
            slope = dot(&g, &d);
        }
        let mut accepted = false;
        for attempt in 0..2 {
            let mut alpha = 1.0;
            if fresh {
                // scale the first step so it moves at most a unit in sup norm
                let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if dmax > 1.0 {
                    alpha = 1.0 / dmax;
                }
            }
            for _ in 0..cfg.max_backtracks {
                for i in 0..n {
                    x_new[i] = x[i] + alpha * d[i];
                }
                let f_new = obj.value_grad(&x_new, &mut g_new);
                if f_new.is_finite() && f_new <= f + cfg.armijo * alpha * slope {
                    let mut s = vec![0.0; n];
                    let mut y = vec![0.0; n];
                    for i in 0..n {
                        s[i] = x_new[i] - x[i];
                        y[i] = g_new[i] - g[i];
                    }
                    let sy = dot(&s, &y);
                    if sy > 1e-12 * sqrt(dot(&s, &s) * dot(&y, &y)) {
                        if mem.len() == cfg.memory {
                            mem.pop_front();
                        }
                        mem.push_back((s, y, 1.0 / sy));
                    }
                    core::mem::swap(&mut x, &mut x_new);
                    core::mem::swap(&mut g, &mut g_new);
                    f = f_new;
                    accepted = true;
                    break;
                }
                alpha *= cfg.backtrack;
            }
            if accepted || attempt == 1 || fresh {
                break;
            }
            // retry once along the preconditioned gradient
            mem.clear();
            fresh = true;
            direction(obj, &g, &mem, &mut d);
            slope = dot(&g, &d);
        }
        if !accepted {
            return Err(LbfgsFailure {
                error: Error::LineSearch { iteration: it, energy: f, grad_norm: gn },
                last: outcome(x, f, gn, it, false, trace),
            });
        }
        trace.push(f);
        gn = obj.grad_norm(&g);
        obj.update_preconditioner(&x);
    }
    let conv = gn <= cfg.grad_tol;
    Ok(outcome(x, f, gn, cfg.max_iters, conv, trace))
}

fn direction<O: Objective>(obj: &O, g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, d: &mut [f64]) {
    let n = g.len();
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for i in 0..n {
            q[i] -= a * y[i];
        }
        alphas.push(a);
    }
    obj.precondition(&mut q);
    if let Some((s, y, _)) = mem.back() {
        let mut py = y.clone();
        obj.precondition(&mut py);
        let ypy = dot(y, &py);
        if ypy > 0.0 {
            let gamma = dot(s, y) / ypy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for i in 0..n {
            q[i] += (a - b) * s[i];
        }
    }
    for i in 0..n {
        d[i] = -q[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosen;

    impl Objective for Rosen {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
        }
    }

    struct Quad(Vec<f64>);

    impl Objective for Quad {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let mut f = 0.0;
            for i in 0..x.len() {
                g[i] = self.0[i] * x[i];
                f += 0.5 * self.0[i] * x[i] * x[i];
            }
            f
        }
        fn precondition(&self, r: &mut [f64]) {
            for i in 0..r.len() {
                r[i] /= self.0[i];
            }
        }
    }

    #[test]
    fn solves_rosenbrock_monotonically() {
        let out = lbfgs(&mut Rosen, &[-1.2, 1.0], &LbfgsConfig { grad_tol: 1e-10, ..Default::default() }).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-7 && (out.x[1] - 1.0).abs() < 1e-7);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let mut q = Quad(vec![1.0, 1e4, 1e8]);
        let out = lbfgs(&mut q, &[0.3, 0.2, 0.1], &LbfgsConfig { grad_tol: 1e-9, ..Default::default() }).unwrap();
        assert!(out.iterations <= 2, "{}", out.iterations);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let mut q = Quad(vec![1.0, 2.0]);
        let out = lbfgs(&mut q, &[0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0, 0.0]);
    }
}
