use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::recovery::patch_radius;
use super::{gamma0, recovery_domain, recovery_field, singular_domain, w_disk, w_numeric, RecoveryOptions};
use crate::error::{invalid, Error, Result};
use crate::field::{energy, local_energy, EnergyBreakdown, VectorField2D};
use crate::geometry::{BoundaryCurve, Domain};
use crate::jacobian::{detect_boundary_vortices, VortexSet};
use crate::num::{hypot, linear_fit, ln};
use crate::optimizer::{continuation_with, init_field, EtaRule, InitKind, MinimizeConfig, Schedule};

#[derive(Debug, Clone)]
pub struct GammaRecord {
    pub eps: f64,
    pub eta: f64,
    pub energy: EnergyBreakdown,
    pub vortices: VortexSet,
    /// `E − πΣ|d_j|·|log ε|`.
    pub excess: f64,
    /// Energy in `B_r(a_j)` minus `π log(r/ε)`, per vortex.
    pub local_excess: Vec<f64>,
    /// Energy of the recovery field on the same mesh (minimize mode only).
    pub recovery_energy: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub n_nodes: usize,
}

/// `E ≈ a·|log ε| + b`.
#[derive(Debug, Clone, Copy)]
pub struct SweepFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct GammaReport {
    pub records: Vec<GammaRecord>,
    pub fit: SweepFit,
    pub a_pred: f64,
    pub w: f64,
    pub b_pred: f64,
    pub slope_rel_err: f64,
    pub intercept_rel_err: f64,
    /// Largest `(penalty + anchoring)` over the stages divided by its value at the coarsest ε.
    pub penalty_ratio: f64,
    /// Field at the smallest ε.
    pub final_field: Option<VectorField2D>,
}

fn local_excess(u: &VectorField2D, vortices: &VortexSet, r: f64) -> Vec<f64> {
    let d = &u.domain;
    vortices
        .vortices
        .iter()
        .map(|v| {
            let a = d.curve.point(v.t);
            let cells: Vec<bool> = (0..d.mesh.n_tris())
                .map(|t| {
                    let c = d.mesh.centroid(t);
                    hypot(c[0] - a[0], c[1] - a[1]) < r
                })
                .collect();
            local_energy(u, &cells).total - PI * v.d.abs() as f64 * ln(r / u.eps)
        })
        .collect()
}

fn renormalised(curve: &BoundaryCurve, vortices: &VortexSet) -> Result<f64> {
    match *curve {
        BoundaryCurve::Disk { radius } => w_disk(vortices, radius),
        _ => {
            let dom = singular_domain(curve.clone(), vortices, 0.001)?;
            Ok(w_numeric(&dom, vortices, &[0.08, 0.04, 0.02, 0.01])?.w)
        }
    }
}

fn finish(records: Vec<GammaRecord>, a_pred: f64, w: f64, n: f64, final_field: Option<VectorField2D>) -> Result<GammaReport> {
    if records.len() < 3 {
        return Err(invalid("the expansion fit needs at least three values of eps"));
    }
    let x: Vec<f64> = records.iter().map(|r| ln(1.0 / r.eps)).collect();
    let y: Vec<f64> = records.iter().map(|r| r.energy.total).collect();
    let (a, b, residual) = linear_fit(&x, &y);
    let b_pred = w + n * gamma0();
    let lower = |e: &EnergyBreakdown| e.penalty + e.anchoring;
    let base = lower(&records[0].energy);
    let penalty_ratio = records.iter().map(|r| lower(&r.energy) / base).fold(0.0, f64::max);
    Ok(GammaReport {
        fit: SweepFit { a, b, residual },
        a_pred,
        w,
        b_pred,
        slope_rel_err: (a - a_pred).abs() / a_pred,
        intercept_rel_err: (b - b_pred).abs() / b_pred.abs(),
        penalty_ratio,
        records,
        final_field,
    })
}

fn ball_radius(domain: &Domain, vortices: &VortexSet) -> f64 {
    let pts: Vec<_> = vortices.vortices.iter().map(|v| domain.curve.point(v.t)).collect();
    let mut m = 0.5 * crate::jacobian::diameter(domain);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(0.25 * hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
        }
    }
    m.min(0.25 * crate::jacobian::diameter(domain))
}

/// Evaluates the recovery field for each ε on its own graded mesh.
pub fn gamma_sweep_recovery(
    curve: BoundaryCurve,
    vortices: &VortexSet,
    eps_list: &[f64],
    opts: &RecoveryOptions,
) -> Result<GammaReport> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps list must be strictly decreasing"));
    }
    let mut records = Vec::new();
    let mut last = None;
    for (stage, &eps) in eps_list.iter().enumerate() {
        let wrap = |e: Error| Error::Stage { stage, source: alloc::boxed::Box::new(e) };
        let dom = Arc::new(recovery_domain(curve.clone(), vortices, eps, opts).map_err(wrap)?);
        let r_patch = patch_radius(&curve, vortices, eps, opts);
        let eta = eps * eps * eps;
        let u = recovery_field(dom.clone(), vortices, eps, eta, r_patch).map_err(wrap)?;
        let en = energy(&u);
        let found = detect_boundary_vortices(&u, 0.3, 0.25).map_err(wrap)?;
        let r = ball_radius(&dom, vortices);
        records.push(GammaRecord {
            eps,
            eta,
            energy: en,
            excess: en.total - PI * vortices.abs_degree() as f64 * ln(1.0 / eps),
            local_excess: local_excess(&u, vortices, r),
            vortices: found,
            recovery_energy: None,
            iterations: 0,
            converged: true,
            n_nodes: dom.mesh.n_nodes(),
        });
        last = Some(u);
    }
    let w = if vortices.vortices.iter().all(|v| v.d.abs() == 1) { renormalised(&curve, vortices)? } else { f64::NAN };
    finish(records, PI * vortices.abs_degree() as f64, w, vortices.len() as f64, last)
}

#[derive(Debug, Clone)]
pub struct MinimizeSweepOptions {
    pub cfg: MinimizeConfig,
    pub eta_rule: EtaRule,
    pub init: InitKind,
    /// Detector clustering window and plateau threshold.
    pub window: f64,
    pub threshold: f64,
    /// Also evaluate the recovery field on each stage's mesh as an upper bound.
    pub upper_bound: bool,
}

impl Default for MinimizeSweepOptions {
    fn default() -> Self {
        MinimizeSweepOptions {
            cfg: MinimizeConfig::default(),
            eta_rule: EtaRule::Power(3.0),
            init: InitKind::Constant,
            window: 0.3,
            threshold: 0.25,
            upper_bound: true,
        }
    }
}

/// Continuation over the ε-schedule on a fixed mesh, with vortex detection at
/// every stage; `W` is evaluated at the vortices found at the smallest ε.
pub fn gamma_sweep_minimize(domain: Arc<Domain>, eps_list: &[f64], opts: &MinimizeSweepOptions) -> Result<GammaReport> {
    let schedule = Schedule::new(eps_list.to_vec(), opts.eta_rule.clone())?;
    let u0 = init_field(domain.clone(), &opts.init, opts.cfg.seed, eps_list[0], schedule.eta(0))?;
    let stages = continuation_with(&u0, &schedule, &opts.cfg, |_| {})?;
    let mut records = Vec::new();
    for (stage, rec) in stages.iter().enumerate() {
        let wrap = |e: Error| Error::Stage { stage, source: alloc::boxed::Box::new(e) };
        let found = detect_boundary_vortices(&rec.field, opts.window, opts.threshold).map_err(wrap)?;
        let r = ball_radius(&domain, &found);
        let recovery_energy = if opts.upper_bound && found.vortices.iter().all(|v| v.d.abs() == 1) {
            let r_patch = patch_radius(&domain.curve, &found, rec.eps, &RecoveryOptions::default());
            recovery_field(domain.clone(), &found, rec.eps, rec.eta, r_patch).ok().map(|u| energy(&u).total)
        } else {
            None
        };
        records.push(GammaRecord {
            eps: rec.eps,
            eta: rec.eta,
            energy: rec.energy,
            excess: rec.energy.total - PI * found.abs_degree() as f64 * ln(1.0 / rec.eps),
            local_excess: local_excess(&rec.field, &found, r),
            vortices: found,
            recovery_energy,
            iterations: rec.iterations,
            converged: rec.converged,
            n_nodes: domain.mesh.n_nodes(),
        });
    }
    let last = records.last().ok_or_else(|| invalid("empty schedule"))?.vortices.clone();
    let w = if last.vortices.iter().all(|v| v.d.abs() == 1) {
        renormalised(&domain.curve, &last).map_err(|e| Error::Numeric(format!("renormalised energy: {e}")))?
    } else {
        f64::NAN
    };
    let field = stages.last().map(|s| s.field.clone());
    finish(records, PI * last.abs_degree() as f64, w, last.len() as f64, field)
}
