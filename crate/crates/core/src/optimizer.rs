//! Descent on the discrete energy and warm-started continuation in ε.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::field::{energy, energy_gradient, hessian_blocks, EnergyBreakdown, VectorField2D};
use crate::geometry::Domain;
use crate::jacobian::VortexSet;
use crate::lbfgs::{lbfgs, LbfgsConfig, Objective};
use crate::lifting::tangent_angle;
use crate::num::{atan2, cos, pow, sin, sqrt, wrap_pi, V2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Threshold on the Euclidean norm of the nodal gradient.
    pub grad_tol: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub memory: usize,
    pub max_backtracks: usize,
    pub seed: u64,
    /// Return the last iterate instead of an error when the line search stalls.
    pub accept_stalled: bool,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            max_iters: 20_000,
            grad_tol: 1e-6,
            backtrack: 0.5,
            armijo: 1e-4,
            memory: 12,
            max_backtracks: 60,
            seed: 0,
            accept_stalled: false,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(invalid("backtracking factor must lie in (0, 1)"));
        }
        if self.memory == 0 || self.max_backtracks == 0 {
            return Err(invalid("memory and backtracks must be positive"));
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            memory: self.memory,
            armijo: self.armijo,
            backtrack: self.backtrack,
            max_backtracks: self.max_backtracks,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaRule {
    /// `η = ε^k`.
    Power(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub eps_list: Vec<f64>,
    pub eta_rule: EtaRule,
}

impl Schedule {
    pub fn new(eps_list: Vec<f64>, eta_rule: EtaRule) -> Result<Self> {
        let s = Schedule { eps_list, eta_rule };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() || self.eps_list.iter().any(|&e| !(e > 0.0)) {
            return Err(invalid("eps list must be nonempty and positive"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps list must be strictly decreasing"));
        }
        match &self.eta_rule {
            EtaRule::Power(k) if *k < 2.0 => return Err(invalid("eta exponent must be at least 2")),
            EtaRule::List(l) if l.len() != self.eps_list.len() => {
                return Err(invalid("eta list length must match eps list"))
            }
            _ => {}
        }
        for (i, &e) in self.eps_list.iter().enumerate() {
            let eta = self.eta(i);
            if !(eta > 0.0 && eta < e) {
                return Err(invalid(format!("eta = {eta} must lie in (0, eps = {e})")));
            }
        }
        Ok(())
    }

    pub fn eta(&self, stage: usize) -> f64 {
        match &self.eta_rule {
            EtaRule::Power(k) => pow(self.eps_list[stage], *k),
            EtaRule::List(l) => l[stage],
        }
    }
}

struct FieldObjective {
    template: VectorField2D,
    blocks: Vec<[[f64; 2]; 2]>,
}

impl FieldObjective {
    fn field(&self, x: &[f64]) -> VectorField2D {
        let mut u = self.template.clone();
        for (i, v) in u.values.iter_mut().enumerate() {
            *v = [x[2 * i], x[2 * i + 1]];
        }
        u
    }
}

impl Objective for FieldObjective {
    fn dim(&self) -> usize {
        2 * self.template.values.len()
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        let u = self.field(x);
        let gr = energy_gradient(&u);
        for (i, v) in gr.iter().enumerate() {
            g[2 * i] = v[0];
            g[2 * i + 1] = v[1];
        }
        energy(&u).total
    }

    fn update_preconditioner(&mut self, x: &[f64]) {
        self.blocks = hessian_blocks(&self.field(x));
    }

    fn precondition(&self, r: &mut [f64]) {
        for (i, b) in self.blocks.iter().enumerate() {
            let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
            if det <= 0.0 {
                continue;
            }
            let (p, q) = (r[2 * i], r[2 * i + 1]);
            r[2 * i] = (b[1][1] * p - b[0][1] * q) / det;
            r[2 * i + 1] = (-b[1][0] * p + b[0][0] * q) / det;
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub field: VectorField2D,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Gradient tolerance reached (otherwise the iteration cap or a stall).
    pub converged: bool,
    pub stalled: bool,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MinimizeFailure {
    pub error: Error,
    pub last: VectorField2D,
}

pub fn minimize(u0: &VectorField2D, cfg: &MinimizeConfig) -> core::result::Result<MinimizeOutcome, MinimizeFailure> {
    if let Err(e) = cfg.validate() {
        return Err(MinimizeFailure { error: e, last: u0.clone() });
    }
    let mut obj = FieldObjective { template: u0.clone(), blocks: Vec::new() };
    let x0: Vec<f64> = u0.values.iter().flat_map(|v| [v[0], v[1]]).collect();
    match lbfgs(&mut obj, &x0, &cfg.lbfgs()) {
        Ok(out) => {
            let field = if out.iterations == 0 { u0.clone() } else { obj.field(&out.x) };
            Ok(MinimizeOutcome {
                energy: energy(&field),
                field,
                iterations: out.iterations,
                grad_norm: out.grad_norm,
                converged: out.converged,
                stalled: false,
                trace: out.trace,
            })
        }
        Err(fail) => {
            let last = obj.field(&fail.last.x);
            if cfg.accept_stalled && matches!(fail.error, Error::LineSearch { .. }) {
                Ok(MinimizeOutcome {
                    energy: energy(&last),
                    field: last,
                    iterations: fail.last.iterations,
                    grad_norm: fail.last.grad_norm,
                    converged: false,
                    stalled: true,
                    trace: fail.last.trace,
                })
            } else {
                Err(MinimizeFailure { error: fail.error, last })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub eps: f64,
    pub eta: f64,
    pub field: VectorField2D,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub stalled: bool,
}

/// Minimizes along the schedule, warm-starting each stage from the previous one.
pub fn continuation(u0: &VectorField2D, schedule: &Schedule, cfg: &MinimizeConfig) -> Result<Vec<StageRecord>> {
    continuation_with(u0, schedule, cfg, |_| {})
}

/// As [`continuation`], calling `on_stage` after every finished stage.
pub fn continuation_with(
    u0: &VectorField2D,
    schedule: &Schedule,
    cfg: &MinimizeConfig,
    mut on_stage: impl FnMut(&StageRecord),
) -> Result<Vec<StageRecord>> {
    schedule.validate()?;
    let mut out: Vec<StageRecord> = Vec::with_capacity(schedule.eps_list.len());
    let mut current = u0.clone();
    for (stage, &eps) in schedule.eps_list.iter().enumerate() {
        let eta = schedule.eta(stage);
        let start = current.with_params(eps, eta)?;
        let res = minimize(&start, cfg).map_err(|f| Error::Stage { stage, source: alloc::boxed::Box::new(f.error) })?;
        let rec = StageRecord {
            eps,
            eta,
            field: res.field.clone(),
            energy: res.energy,
            iterations: res.iterations,
            grad_norm: res.grad_norm,
            converged: res.converged,
            stalled: res.stalled,
        };
        on_stage(&rec);
        out.push(rec);
        current = res.field;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    Constant,
    /// `|x|`-weighted tangent field, radially extended from the boundary.
    TangentLike,
    Random,
    /// Unit field whose phase winds by `d_j` half-turns around points just
    /// outside the boundary at the vortex positions.
    VortexAnsatz(VortexSet),
}

pub fn init_field(domain: Arc<Domain>, kind: &InitKind, seed: u64, eps: f64, eta: f64) -> Result<VectorField2D> {
    let n = domain.mesh.n_nodes();
    let values: Vec<V2> = match kind {
        InitKind::Constant => alloc::vec![[1.0, 0.0]; n],
        InitKind::TangentLike => domain
            .mesh
            .nodes
            .iter()
            .map(|&p| {
                let (r, t) = domain.curve.polar_coords(p);
                let (_, tau) = domain.curve.frame(t);
                [r * tau[0], r * tau[1]]
            })
            .collect(),
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    let a: f64 = rng.random_range(0.0..2.0 * PI);
                    [cos(a), sin(a)]
                })
                .collect()
        }
        InitKind::VortexAnsatz(vs) => {
            let phase = vortex_phase(&domain, vs, 0.02 * sqrt(domain.area));
            domain.mesh.nodes.iter().map(|&p| {
                let a = phase(p);
                [cos(a), sin(a)]
            }).collect()
        }
    };
    VectorField2D::new(domain, values, eps, eta)
}

/// `Σ d_j arg(x − p_j) + c` with `p_j` pushed outward by `offset` from the
/// boundary point of vortex `j`, and `c` matching the tangent far from the vortices.
pub fn vortex_phase(domain: &Domain, vs: &VortexSet, offset: f64) -> impl Fn(V2) -> f64 {
    let poles: Vec<(V2, f64)> = vs
        .vortices
        .iter()
        .map(|v| {
            let p = domain.curve.point(v.t);
            let (nu, _) = domain.curve.frame(v.t);
            ([p[0] + offset * nu[0], p[1] + offset * nu[1]], v.d as f64)
        })
        .collect();
    let raw = move |x: V2| -> f64 { poles.iter().map(|(p, d)| d * atan2(x[1] - p[1], x[0] - p[0])).sum() };
    // reference point: boundary parameter farthest from all vortices
    let mut best = (0.0, -1.0);
    for k in 0..256 {
        let t = 2.0 * PI * k as f64 / 256.0;
        let dist = vs.vortices.iter().map(|v| wrap_pi(t - v.t).abs()).fold(f64::INFINITY, f64::min);
        if dist > best.1 {
            best = (t, dist);
        }
    }
    let t_ref = best.0;
    let c = tangent_angle(domain, t_ref) - raw(domain.curve.point(t_ref));
    move |x: V2| raw(x) + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;
    use crate::jacobian::Vortex;
    use crate::num::dot;
    use alloc::vec;

    fn disk(n_r: usize, n_t: usize) -> Arc<Domain> {
        Arc::new(make_disk(1.0, n_r, n_t).unwrap())
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![0.1, 0.05], EtaRule::Power(3.0)).is_ok());
        assert!(Schedule::new(vec![0.05, 0.1], EtaRule::Power(3.0)).is_err());
        assert!(Schedule::new(vec![0.1], EtaRule::Power(1.5)).is_err());
        assert!(Schedule::new(vec![0.1], EtaRule::List(vec![0.2])).is_err());
        assert!(Schedule::new(vec![0.1, 0.05], EtaRule::List(vec![0.01])).is_err());
    }

    #[test]
    fn init_kinds() {
        let d = disk(6, 32);
        let c = init_field(d.clone(), &InitKind::Constant, 0, 0.1, 0.01).unwrap();
        assert!(c.values.iter().all(|v| *v == [1.0, 0.0]));
        let r1 = init_field(d.clone(), &InitKind::Random, 5, 0.1, 0.01).unwrap();
        let r2 = init_field(d.clone(), &InitKind::Random, 5, 0.1, 0.01).unwrap();
        assert_eq!(r1.values, r2.values);
        let vs = VortexSet::new(vec![Vortex { t: 0.0, d: 1 }, Vortex { t: PI, d: 1 }]).unwrap();
        let a = init_field(d.clone(), &InitKind::VortexAnsatz(vs), 0, 0.1, 0.01).unwrap();
        for b in &d.boundary {
            let away = wrap_pi(b.t).abs().min(wrap_pi(b.t - PI).abs());
            if away > 0.3 {
                assert!(dot(a.values[b.node], b.normal).abs() < 0.1, "t = {}", b.t);
            }
        }
    }

    #[test]
    fn minimize_decreases_energy_and_stops_at_minimizers() {
        let d = disk(6, 32);
        let u0 = init_field(d.clone(), &InitKind::Random, 3, 0.5, 0.2).unwrap();
        let cfg = MinimizeConfig { max_iters: 300, accept_stalled: true, ..Default::default() };
        let out = minimize(&u0, &cfg).unwrap();
        assert!(out.energy.total <= energy(&u0).total);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        let z = init_field(d, &InitKind::Constant, 0, 0.5, 0.2).unwrap();
        let mut zero = z.clone();
        zero.values.iter_mut().for_each(|v| *v = [0.0, 0.0]);
        // the zero field is a critical point
        let again = minimize(&zero, &MinimizeConfig::default()).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(again.field.values, zero.values);
    }

    #[test]
    fn single_stage_continuation_matches_minimize() {
        let d = disk(5, 24);
        let u0 = init_field(d, &InitKind::Constant, 0, 0.3, 0.05).unwrap();
        let cfg = MinimizeConfig { max_iters: 200, accept_stalled: true, ..Default::default() };
        let s = Schedule::new(vec![0.3], EtaRule::List(vec![0.05])).unwrap();
        let c = continuation(&u0, &s, &cfg).unwrap();
        let m = minimize(&u0, &cfg).unwrap();
        assert_eq!(c[0].field.values, m.field.values);
    }
}
