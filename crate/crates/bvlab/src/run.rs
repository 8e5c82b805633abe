//! Run orchestration: one task per config, files written into the output
//! directory, and a report whose `passed` flag drives the exit status.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use bvlab_core::field::{energy, EnergyBreakdown};
use bvlab_core::geometry::{boundary_graded_levels, uniform_levels, uniform_params};
use bvlab_core::jacobian::{
    build_escaping_vortex, default_dictionary, detect_boundary_vortices, dual_norm_global_diff, pair_all, pair_boundary,
    pair_global, pair_interior, TestDictionary,
};
use bvlab_core::onedim::{
    halfdisk_energy, minimize_f_eps, peierls_energy_oracle, peierls_profile, rearrangement_bound, ArcData,
    HalfDiskResolution,
};
use bvlab_core::optimizer::{continuation, init_field, InitKind, Schedule};
use bvlab_core::projector::{project_to_s1_with, CellProblem, ProjectionReport};
use bvlab_core::renorm::{
    gamma0, gamma_sweep_minimize, gamma_sweep_recovery, singular_domain, w_disk, w_numeric, GammaReport,
    MinimizeSweepOptions, RecoveryOptions,
};
use bvlab_core::{BoundaryCurve, Domain, VectorField2D, VortexSet};

use crate::config::{InitSpec, JacobianFixture, OnedKind, RunConfig, Shape, SweepMode, Task};
use crate::report::{
    write_csv, Check, EnergyRow, ErrorRecord, PairingRow, Report, VortexRow, ENERGY_HEADER, PAIRING_HEADER,
};
use crate::sample;
use crate::snapshot;
use crate::vortices::parse_vortices;

#[derive(Default)]
pub struct TaskOutput {
    pub results: Value,
    pub checks: Vec<Check>,
    pub series: Vec<EnergyRow>,
    pub vortex_trace: Vec<VortexRow>,
    pub pairings: Vec<PairingRow>,
    pub snapshots: Vec<(String, VectorField2D)>,
    /// Field whose boundary values go to `boundary_trace.csv`.
    pub trace: Option<VectorField2D>,
}

pub fn curve_of(c: &RunConfig) -> BoundaryCurve {
    let d = &c.domain;
    match d.shape {
        Shape::Disk => BoundaryCurve::Disk { radius: d.radius },
        Shape::Ellipse => BoundaryCurve::Ellipse { a: d.semi_axes[0], b: d.semi_axes[1] },
        Shape::Fourier => BoundaryCurve::Fourier { radius: d.radius, coeffs: d.coeffs.clone() },
    }
}

pub fn build_domain(c: &RunConfig) -> Result<Domain> {
    let d = &c.domain;
    let radial = match d.boundary_h {
        Some(h) => boundary_graded_levels(h, 1.0 / d.n_r as f64, 1.15),
        None => uniform_levels(d.n_r),
    };
    Ok(Domain::build(curve_of(c), radial, uniform_params(d.n_theta))?)
}

fn dictionary(c: &RunConfig, d: &Domain) -> Result<TestDictionary> {
    Ok(default_dictionary(d, &c.dictionary.spec()?))
}

fn energy_row(label: impl Into<String>, eps: f64, eta: f64, e: &EnergyBreakdown, excess: f64) -> EnergyRow {
    EnergyRow {
        label: label.into(),
        eps,
        eta,
        log_inv_eps: (1.0 / eps).ln(),
        dirichlet: e.dirichlet,
        penalty: e.penalty,
        anchoring: e.anchoring,
        total: e.total,
        excess,
    }
}

fn vortex_rows(label: &str, eps: f64, vs: &VortexSet) -> Vec<VortexRow> {
    vs.vortices.iter().map(|v| VortexRow { label: label.into(), eps, t: v.t, d: v.d }).collect()
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> Check {
    Check { name: name.into(), passed: (value - target).abs() <= tol, value, limit: tol, note: format!("target {target}") }
}

/// Runs the configured task, writes `report.json`, `energies.csv`,
/// `boundary_trace.csv`, `vortices.csv`, `pairings.csv` and field snapshots into
/// `out`, and returns the report. Task failures are recorded in the report.
pub fn run(config: &RunConfig, out: &Path) -> Result<Report> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = Report::new(config);
    match run_task(config) {
        Ok(o) => {
            report.results = o.results;
            report.series = o.series;
            report.vortex_trace = o.vortex_trace;
            report.pairings = o.pairings;
            if config.assertions.enabled {
                report.checks = o.checks;
            }
            for (name, f) in &o.snapshots {
                snapshot::save(f, &out.join(format!("{name}.bin")))?;
            }
            write_trace(o.trace.as_ref(), &out.join("boundary_trace.csv"))?;
        }
        Err(e) => {
            let kind = match e.downcast_ref::<bvlab_core::Error>() {
                Some(ce) => core_error_kind(ce),
                None => "error",
            };
            report.error = Some(ErrorRecord { kind: kind.into(), message: format!("{e:#}") });
            write_trace(None, &out.join("boundary_trace.csv"))?;
        }
    }
    report.finish();
    write_csv(&out.join("energies.csv"), ENERGY_HEADER, &report.series)?;
    write_csv(&out.join("vortices.csv"), crate::report::VORTEX_HEADER, &report.vortex_trace)?;
    write_csv(&out.join("pairings.csv"), PAIRING_HEADER, &report.pairings)?;
    report.write(&out.join("report.json"))?;
    Ok(report)
}

fn core_error_kind(e: &bvlab_core::Error) -> &'static str {
    use bvlab_core::Error::*;
    match e {
        InvalidArgument(_) => "invalid_argument",
        Geometry(_) => "geometry",
        Resolution(_) => "resolution",
        UnresolvedCore { .. } => "unresolved_core",
        Topology(_) => "topology",
        UnresolvedPhase(..) => "unresolved_phase",
        InteriorVortex(_) => "interior_vortex",
        VortexInCell { .. } => "vortex_in_cell",
        LineSearch { .. } => "line_search",
        Singular(_) => "singular",
        Numeric(_) => "numeric",
        Stage { source, .. } => core_error_kind(source),
    }
}

fn write_trace(u: Option<&VectorField2D>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["s", "t", "u_nu", "u_tau", "phase"])?;
    if let Some(u) = u {
        for b in &u.domain.boundary {
            let v = u.values[b.node];
            let un = v[0] * b.normal[0] + v[1] * b.normal[1];
            let ut = v[0] * b.tangent[0] + v[1] * b.tangent[1];
            w.serialize((b.s, b.t, un, ut, v[1].atan2(v[0])))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run_task(c: &RunConfig) -> Result<TaskOutput> {
    match c.task {
        Task::Minimize => task_minimize(c),
        Task::Sweep => task_sweep(c),
        Task::Jacobian => task_jacobian(c),
        Task::Renorm => task_renorm(c),
        Task::Project => task_project(c),
        Task::Oned => task_oned(c),
    }
}

fn init_kind(c: &RunConfig) -> InitKind {
    match c.optimizer.init {
        InitSpec::Constant => InitKind::Constant,
        InitSpec::Tangent => InitKind::TangentLike,
        InitSpec::Random => InitKind::Random,
    }
}

fn task_minimize(c: &RunConfig) -> Result<TaskOutput> {
    let dom = Arc::new(build_domain(c)?);
    let sched = Schedule::new(c.schedule.eps.clone(), c.schedule.eta_rule())?;
    let u0 = init_field(dom.clone(), &init_kind(c), c.seed, sched.eps_list[0], sched.eta(0))?;
    let stages = continuation(&u0, &sched, &c.optimizer.minimize_config(c.seed))?;
    let mut out = TaskOutput::default();
    let mut stage_json = Vec::new();
    for (k, s) in stages.iter().enumerate() {
        let found = detect_boundary_vortices(&s.field, c.sweep.window, c.sweep.threshold);
        let n = found.as_ref().map(|v| v.abs_degree()).unwrap_or(2) as f64;
        let label = format!("stage{k}");
        out.series.push(energy_row(&label, s.eps, s.eta, &s.energy, s.energy.total - PI * n * (1.0 / s.eps).ln()));
        if let Ok(v) = &found {
            out.vortex_trace.extend(vortex_rows(&label, s.eps, v));
        }
        let (lo, hi) = s.field.modulus_range();
        stage_json.push(json!({
            "eps": s.eps, "eta": s.eta, "iterations": s.iterations, "grad_norm": s.grad_norm,
            "converged": s.converged, "stalled": s.stalled, "modulus": [lo, hi],
            "detection_error": found.err().map(|e| e.to_string()),
        }));
        out.snapshots.push((format!("field_{label}"), s.field.clone()));
    }
    let lower = |e: &EnergyBreakdown| e.penalty + e.anchoring;
    let base = lower(&stages[0].energy);
    let ratio = stages.iter().map(|s| lower(&s.energy) / base).fold(0.0, f64::max);
    out.checks.push(Check::at_most("penalty_ratio", ratio, c.assertions.penalty_ratio));
    out.results = json!({ "n_nodes": dom.mesh.n_nodes(), "stages": stage_json, "penalty_ratio": ratio });
    out.trace = stages.last().map(|s| s.field.clone());
    Ok(out)
}

fn gamma_json(g: &GammaReport) -> Value {
    let recs: Vec<Value> = g
        .records
        .iter()
        .map(|r| {
            json!({
                "eps": r.eps, "eta": r.eta, "energy": r.energy.total, "excess": r.excess,
                "local_excess": r.local_excess, "recovery_energy": r.recovery_energy,
                "iterations": r.iterations, "converged": r.converged, "n_nodes": r.n_nodes,
                "vortices": r.vortices.vortices.iter().map(|v| json!({"t": v.t, "d": v.d})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "fit": { "a": g.fit.a, "b": g.fit.b, "residual": g.fit.residual },
        "a_pred": g.a_pred, "b_pred": g.b_pred, "w": g.w, "gamma0": gamma0(),
        "slope_rel_err": g.slope_rel_err, "intercept_rel_err": g.intercept_rel_err,
        "penalty_ratio": g.penalty_ratio, "records": recs,
    })
}

fn task_sweep(c: &RunConfig) -> Result<TaskOutput> {
    let a = &c.assertions;
    let mut out = TaskOutput::default();
    let g = match c.sweep.mode {
        SweepMode::Recovery => {
            let vs = parse_vortices(&c.sweep.vortices)?;
            let g = gamma_sweep_recovery(curve_of(c), &vs, &c.sweep.eps, &RecoveryOptions::default())?;
            out.checks.push(Check::at_most("slope_rel_err", g.slope_rel_err, a.recovery_slope_rel));
            out.checks.push(Check::at_most("intercept_rel_err", g.intercept_rel_err, a.recovery_intercept_rel));
            g
        }
        SweepMode::Minimize => {
            let dom = Arc::new(build_domain(c)?);
            let opts = MinimizeSweepOptions {
                cfg: c.optimizer.minimize_config(c.seed),
                eta_rule: c.schedule.eta_rule(),
                init: init_kind(c),
                window: c.sweep.window,
                threshold: c.sweep.threshold,
                upper_bound: true,
            };
            let g = gamma_sweep_minimize(dom, &c.schedule.eps, &opts)?;
            let last = &g.records.last().expect("nonempty schedule").vortices;
            out.checks.push(within("vortex_count", last.len() as f64, 2.0, 0.0));
            let all_plus = last.vortices.iter().all(|v| v.d == 1);
            out.checks.push(within("unit_degrees", all_plus as u8 as f64, 1.0, 0.0));
            if last.len() == 2 {
                out.checks.push(within("separation", last.min_separation(), PI, a.separation_tol));
            }
            out.checks.push(Check::at_most("slope_rel_err", g.slope_rel_err, a.minimize_slope_rel));
            out.checks.push(Check::at_most("penalty_ratio", g.penalty_ratio, a.penalty_ratio));
            let n = last.len() as f64;
            for r in &g.records {
                let lb = g.w + n * gamma0();
                out.checks.push(Check::at_least(format!("lower_bound@{}", r.eps), r.excess, lb));
                if let Some(ub) = r.recovery_energy {
                    out.checks.push(Check::at_most(format!("upper_bound@{}", r.eps), r.energy.total, ub));
                }
            }
            g
        }
    };
    for r in &g.records {
        let label = format!("eps={}", r.eps);
        out.series.push(energy_row(&label, r.eps, r.eta, &r.energy, r.excess));
        out.vortex_trace.extend(vortex_rows(&label, r.eps, &r.vortices));
    }
    out.results = gamma_json(&g);
    out.results["mode"] = json!(match c.sweep.mode {
        SweepMode::Recovery => "recovery",
        SweepMode::Minimize => "minimize",
    });
    if let Some(f) = g.final_field {
        out.snapshots.push(("field_final".into(), f.clone()));
        out.trace = Some(f);
    }
    Ok(out)
}

fn pairing_rows(u: &VectorField2D, dict: &TestDictionary) -> Vec<PairingRow> {
    let p = pair_all(u, dict);
    (0..p.labels.len())
        .map(|k| PairingRow { label: p.labels[k].clone(), global: p.global[k], interior: p.interior[k], boundary: p.boundary[k] })
        .collect()
}

fn task_jacobian(c: &RunConfig) -> Result<TaskOutput> {
    let a = &c.assertions;
    let mut out = TaskOutput::default();
    match c.jacobian.fixture {
        JacobianFixture::Identity | JacobianFixture::Snapshot => {
            let u = if c.jacobian.fixture == JacobianFixture::Snapshot {
                let path = c.jacobian.field.as_ref().context("jacobian.field is required for the snapshot fixture")?;
                snapshot::load(path)?
            } else {
                let dom = Arc::new(build_domain(c)?);
                VectorField2D::from_fn(dom, 0.1, 0.1, |p| p)?
            };
            let dict = dictionary(c, &u.domain)?;
            let one = vec![1.0; u.values.len()];
            let q: Vec<f64> = u.domain.mesh.nodes.iter().map(|p| 0.5 * (p[0] * p[0] + p[1] * p[1])).collect();
            let total = pair_global(&u, &one);
            let scale = bvlab_core::field::grad_norm(&u.values, &u.domain).powi(2).max(1.0);
            out.checks.push(Check::at_most("zero_average", total.abs(), a.zero_average_abs * scale));
            out.results = json!({
                "global_one": total,
                "boundary_one": pair_boundary(&u, &one),
                "interior_one": pair_interior(&u, &one),
                "global_quadratic": pair_global(&u, &q),
                "interior_quadratic": pair_interior(&u, &q),
                "boundary_quadratic": pair_boundary(&u, &q),
                "n_nodes": u.values.len(),
                "dictionary_size": dict.len(),
            });
            out.pairings = pairing_rows(&u, &dict);
            out.trace = Some(u);
        }
        JacobianFixture::Escaping => {
            let mut rows = Vec::new();
            let mut last = None;
            let mut prev: Option<f64> = None;
            for &eps in &c.jacobian.eps {
                let ev = build_escaping_vortex(eps)?;
                let u = ev.field;
                let one = vec![1.0; u.values.len()];
                let jbd = pair_boundary(&u, &one);
                let dict = dictionary(c, &u.domain)?;
                let constant = vec![[1.0, 0.0]; u.values.len()];
                let (dn, k) = dual_norm_global_diff(&u.values, &constant, &u.domain, &dict)?;
                out.checks.push(Check::at_most(
                    format!("boundary_mass@{eps}"),
                    (jbd - a.boundary_mass).abs() / a.boundary_mass.abs(),
                    a.boundary_mass_rel,
                ));
                if let Some(p) = prev {
                    out.checks.push(Check::at_least(format!("dual_decay@{eps}"), p / dn, a.dual_decay));
                }
                prev = Some(dn);
                out.series.push(energy_row(format!("eps={eps}"), eps, u.eta, &energy(&u), f64::NAN));
                rows.push(json!({ "eps": eps, "boundary_one": jbd, "dual_norm": dn, "witness": dict.entries[k].label, "n_nodes": u.values.len() }));
                last = Some((u, dict));
            }
            if let Some((u, dict)) = last {
                out.pairings = pairing_rows(&u, &dict);
                out.trace = Some(u);
            }
            out.results = json!({ "fixture": "escaping", "runs": rows });
        }
    }
    Ok(out)
}

fn task_renorm(c: &RunConfig) -> Result<TaskOutput> {
    let vs = parse_vortices(&c.renorm.vortices)?;
    let curve = curve_of(c);
    let dom = singular_domain(curve.clone(), &vs, c.renorm.h_min)?;
    let num = w_numeric(&dom, &vs, &c.renorm.rho)?;
    let mut out = TaskOutput::default();
    let exact = match curve {
        BoundaryCurve::Disk { radius } => Some(w_disk(&vs, radius)?),
        _ => None,
    };
    if let Some(w) = exact {
        out.checks.push(Check::at_most("w_rel_err", (num.w - w).abs() / w.abs(), c.assertions.renorm_rel));
    }
    out.vortex_trace = vortex_rows("input", f64::NAN, &vs);
    out.results = json!({
        "w_numeric": num.w,
        "w_exact": exact,
        "intermediates": num.intermediates,
        "fit_residual": num.fit_residual,
        "n_nodes": dom.mesh.n_nodes(),
    });
    Ok(out)
}

/// Smooth unit field used when no snapshot is given.
pub fn smooth_unit_field(dom: Arc<Domain>, eps: f64, eta: f64) -> Result<VectorField2D> {
    Ok(VectorField2D::from_fn(dom, eps, eta, |x| {
        let a = 1.3 * x[0] + 0.7 * x[1] * x[1] + 0.5 * (3.0 * x[1]).sin();
        [a.cos(), a.sin()]
    })?)
}

/// Projection with the cell problems solved on the rayon pool.
pub fn project_parallel(u: &VectorField2D, beta: f64) -> bvlab_core::Result<(VectorField2D, ProjectionReport)> {
    project_to_s1_with(u, beta, |cells: &[CellProblem]| cells.par_iter().map(CellProblem::solve).collect())
}

fn projection_json(r: &ProjectionReport, dual: f64, unit_defect: f64) -> Value {
    json!({
        "eta": r.eta, "beta": r.beta, "delta": r.delta, "r_shift": r.r_shift, "theta_shift": r.theta_shift,
        "n_cells": r.n_cells, "grid_energy": r.grid_energy, "grid_bound": r.grid_bound, "scale": r.scale,
        "l2_sq": r.l2_sq, "l2_boundary_sq": r.l2_boundary_sq,
        "energy_u": r.energy_u.total, "energy_projected": r.energy_projected.total,
        "sup_defect": r.sup_defect, "min_modulus": r.min_modulus,
        "nonzero_degree_cells": r.nonzero_degree_cells, "dual_norm": dual, "unit_defect": unit_defect,
    })
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn task_project(c: &RunConfig) -> Result<TaskOutput> {
    let p = &c.project;
    let fields: Vec<VectorField2D> = match &p.field {
        Some(path) => vec![snapshot::load(path)?],
        None => {
            if c.domain.shape != Shape::Disk {
                bail!("the projector runs on disk domains only");
            }
            let dom = Arc::new(build_domain(c)?);
            p.eta.iter().map(|&eta| smooth_unit_field(dom.clone(), p.eps, eta)).collect::<Result<_>>()?
        }
    };
    let mut out = TaskOutput::default();
    let mut runs = Vec::new();
    let (mut c_l2, mut c_dual) = (Vec::new(), Vec::new());
    let (mut l2s, mut duals) = (Vec::new(), Vec::new());
    for u in &fields {
        let (proj, r) = project_parallel(u, p.beta)?;
        let dict = dictionary(c, &u.domain)?;
        let (dual, _) = dual_norm_global_diff(&proj.values, &u.values, &u.domain, &dict)?;
        let unit = proj.values.iter().map(|v| (v[0].hypot(v[1]) - 1.0).abs()).fold(0.0, f64::max);
        let e = r.energy_u.total;
        let l2 = r.l2_sq.sqrt();
        c_l2.push(l2 / (r.delta * e.sqrt()));
        c_dual.push(dual / (r.delta * e).sqrt());
        l2s.push(l2);
        duals.push(dual);
        out.checks.push(Check::at_most(format!("unit_length@{}", r.eta), unit, 1e-12));
        out.checks.push(Check::at_most(format!("grid_bound@{}", r.eta), r.grid_energy, r.grid_bound));
        out.series.push(energy_row(format!("u eta={}", r.eta), u.eps, u.eta, &r.energy_u, f64::NAN));
        out.series.push(energy_row(format!("U eta={}", r.eta), u.eps, u.eta, &r.energy_projected, f64::NAN));
        runs.push(projection_json(&r, dual, unit));
        out.snapshots.push((format!("projected_eta{}", r.eta), proj.clone()));
        out.trace = Some(proj);
    }
    if fields.len() > 1 {
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        out.checks.push(within("l2_decreasing", decreasing(&l2s) as u8 as f64, 1.0, 0.0));
        out.checks.push(within("dual_decreasing", decreasing(&duals) as u8 as f64, 1.0, 0.0));
        out.checks.push(Check::at_most("l2_constant_spread", spread(&c_l2), c.assertions.projection_spread));
        out.checks.push(Check::at_most("dual_constant_spread", spread(&c_dual), c.assertions.projection_spread));
    }
    out.results = json!({ "runs": runs, "l2_constants": c_l2, "dual_constants": c_dual });
    Ok(out)
}

fn task_oned(c: &RunConfig) -> Result<TaskOutput> {
    let o = &c.oned;
    let a = &c.assertions;
    let res = HalfDiskResolution::default();
    let mut out = TaskOutput::default();
    match o.kind {
        OnedKind::Peierls => {
            let runs: Vec<(f64, f64, f64, f64, f64)> = o
                .eps
                .par_iter()
                .map(|&eps| -> Result<_> {
                    let f = peierls_profile(eps, o.r, &res)?;
                    let e = halfdisk_energy(&f);
                    let oracle = peierls_energy_oracle(eps, o.r)?;
                    Ok((eps, e.dirichlet, e.anchoring, e.total, oracle))
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for &(eps, dir, anc, total, oracle) in &runs {
                let rel = (total - oracle).abs() / oracle;
                out.checks.push(Check::at_most(format!("peierls_rel@{}", eps / o.r), rel, a.peierls_rel));
                let e = EnergyBreakdown { dirichlet: dir, penalty: 0.0, anchoring: anc, total };
                out.series.push(energy_row(format!("eps={eps}"), eps, 0.0, &e, total - PI * (o.r / eps).ln()));
                rows.push(json!({ "eps": eps, "energy": total, "oracle": oracle, "rel_err": rel }));
            }
            out.results = json!({ "kind": "peierls", "r": o.r, "runs": rows });
        }
        OnedKind::Minimize => {
            let runs = o
                .eps
                .par_iter()
                .map(|&eps| minimize_f_eps(ArcData::Peierls, eps, o.r, &res, o.max_iters))
                .collect::<bvlab_core::Result<Vec<_>>>()?;
            let g0 = gamma0();
            let mut rows = Vec::new();
            let mut gaps = Vec::new();
            for (m, &eps) in runs.iter().zip(&o.eps) {
                out.checks.push(Check::at_least(format!("excess@{}", eps / o.r), m.excess, g0 - a.excess_slack));
                let e = EnergyBreakdown { dirichlet: m.energy.dirichlet, penalty: 0.0, anchoring: m.energy.anchoring, total: m.energy.total };
                out.series.push(energy_row(format!("eps={eps}"), eps, 0.0, &e, m.excess));
                gaps.push((m.excess - g0).abs());
                rows.push(json!({
                    "eps": eps, "excess": m.excess, "trace_excess": m.trace_excess,
                    "iterations": m.iterations, "grad_norm": m.grad_norm, "converged": m.converged,
                }));
            }
            if gaps.len() > 1 {
                let approaching = gaps.windows(2).all(|w| w[1] <= w[0]);
                out.checks.push(within("approaching_gamma0", approaching as u8 as f64, 1.0, 0.0));
            }
            out.results = json!({ "kind": "minimize", "r": o.r, "gamma0": g0, "runs": rows });
        }
        OnedKind::Rearr => {
            let (lhs, rhs) = rearrangement_bound(&[(0.0, 0.25)], &[(0.75, 1.0)], (0.0, 1.0))?;
            let target = (9.0f64 / 8.0).ln();
            out.checks.push(Check::at_most("extremal_lhs", (lhs - target).abs(), a.rearrangement_abs));
            out.checks.push(Check::at_most("extremal_rhs", (rhs - target).abs(), a.rearrangement_abs));
            let mut rng = sample::rng(c.seed);
            let mut worst = f64::INFINITY;
            for _ in 0..o.samples {
                let (sa, sb) = sample::interval_pair(&mut rng);
                let (l, r) = rearrangement_bound(&sa, &sb, (0.0, 1.0))?;
                worst = worst.min(l - r);
            }
            if o.samples > 0 {
                out.checks.push(Check::at_least("random_margin", worst, -a.rearrangement_abs));
            }
            out.results = json!({ "kind": "rearr", "extremal": [lhs, rhs], "target": target, "samples": o.samples, "worst_margin": worst });
        }
    }
    Ok(out)
}
