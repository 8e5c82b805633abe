//! Acceptance suite: ten criteria at their pinned tolerances, one PASS/FAIL
//! line each. Criteria listed in `KNOWN_DEVIATIONS` fail at desk-scale
//! parameters for documented reasons; the run fails on any other failure and
//! on any change in that list.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use bvlab::config::{JacobianFixture, OnedKind, RunConfig, SweepMode, Task};
use bvlab::report::Check;
use bvlab::run::run_task;
use bvlab::sample;
use bvlab_core::geometry::make_disk;
use bvlab_core::jacobian::{
    default_dictionary, pair_boundary, pair_global, pair_interior, stability_check_interior, DictionarySpec,
};
use bvlab_core::onedim::{minimize_f_eps, theta_coarea, truncations, ArcData, HalfDiskResolution, Profile1D};
use bvlab_core::renorm::{gamma0, singular_domain, w_disk, w_numeric};
use bvlab_core::{BoundaryCurve, VectorField2D, Vortex, VortexSet};

const KNOWN_DEVIATIONS: &[usize] = &[1, 5, 8];

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}={:.4e} (limit {:.4e})", c.name, c.value, c.limit)).collect();
    let detail = if failed.is_empty() {
        checks.iter().map(|c| format!("{}={:.4e}", c.name, c.value)).collect::<Vec<_>>().join(", ")
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Outcome { passed: failed.is_empty() && !checks.is_empty(), detail }
}

fn task(c: RunConfig) -> Outcome {
    match run_task(&c) {
        Ok(o) => from_checks(&o.checks),
        Err(e) => Outcome { passed: false, detail: format!("error: {e:#}") },
    }
}

fn peierls_oracle() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Oned;
    c.oned.kind = OnedKind::Peierls;
    c.oned.eps = vec![1e-2, 1e-3];
    task(c)
}

fn rearrangement() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Oned;
    c.oned.kind = OnedKind::Rearr;
    c.oned.samples = 500;
    c.seed = 2;
    task(c)
}

fn jacobian_identities() -> Outcome {
    let d = Arc::new(make_disk(1.0, 12, 48).unwrap());
    let one = vec![1.0; d.mesh.n_nodes()];
    let mut rng = sample::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = sample::smooth_field(&mut rng, &d.mesh.nodes);
        let u = VectorField2D::new(d.clone(), v, 0.1, 0.1).unwrap();
        let scale = 1.0 + bvlab_core::field::grad_norm(&u.values, &d).powi(2);
        worst = worst.max(pair_global(&u, &one).abs() / scale);
    }
    let mut errs = Vec::new();
    for (nr, nt) in [(8usize, 32usize), (16, 64), (32, 128)] {
        let dom = Arc::new(make_disk(1.0, nr, nt).unwrap());
        let u = VectorField2D::from_fn(dom, 0.1, 0.1, |p| p).unwrap();
        let q: Vec<f64> = u.domain.mesh.nodes.iter().map(|p| 0.5 * (p[0] * p[0] + p[1] * p[1])).collect();
        let e = (pair_global(&u, &q) + PI / 2.0)
            .abs()
            .max((pair_interior(&u, &q) - PI / 2.0).abs())
            .max((pair_boundary(&u, &q) + PI).abs());
        errs.push(e);
    }
    let halving = errs.windows(2).all(|w| w[1] <= 0.55 * w[0]);
    Outcome {
        passed: worst <= 1e-10 && halving,
        detail: format!("max |<J,1>|/scale = {worst:.2e}; identity triple errors {errs:.3?}"),
    }
}

fn interior_stability() -> Outcome {
    let d = Arc::new(make_disk(1.0, 12, 48).unwrap());
    let dict = default_dictionary(&d, &DictionarySpec::default());
    let mut rng = sample::rng(4);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for _ in 0..200 {
        let u = sample::smooth_field(&mut rng, &d.mesh.nodes);
        let v = sample::smooth_field(&mut rng, &d.mesh.nodes);
        let r = stability_check_interior(&d, &u, &v, &dict);
        let scale = r.rhs.max(1.0);
        ok &= r.holds(1e-6 * scale);
        worst = worst.min(r.worst_margin / scale);
    }
    Outcome { passed: ok, detail: format!("smallest relative margin {worst:.4}") }
}

fn escaping_vortex() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Jacobian;
    c.jacobian.fixture = JacobianFixture::Escaping;
    c.jacobian.eps = vec![0.02, 0.01, 0.005];
    task(c)
}

fn renormalised_energy() -> Outcome {
    let mut rng = sample::rng(6);
    let mut configs = vec![(0.0, PI)];
    for _ in 0..10 {
        let t = rng.random_range(0.0..TAU);
        configs.push((t, t + rng.random_range(0.5 * PI..1.5 * PI)));
    }
    let mut worst: f64 = 0.0;
    let mut antipodal = f64::NAN;
    for (k, &(t1, t2)) in configs.iter().enumerate() {
        let vs = VortexSet::new(vec![Vortex { t: t1, d: 1 }, Vortex { t: t2, d: 1 }]).unwrap();
        let exact = w_disk(&vs, 1.0).unwrap();
        let dom = match singular_domain(BoundaryCurve::Disk { radius: 1.0 }, &vs, 0.001) {
            Ok(d) => d,
            Err(e) => return Outcome { passed: false, detail: format!("error: {e}") },
        };
        let num = match w_numeric(&dom, &vs, &[0.08, 0.04, 0.02, 0.01]) {
            Ok(r) => r.w,
            Err(e) => return Outcome { passed: false, detail: format!("error: {e}") },
        };
        if k == 0 {
            antipodal = num;
        }
        worst = worst.max((num - exact).abs() / exact.abs());
    }
    let target = -TAU * 2f64.ln();
    let antipodal_err = (antipodal - target).abs() / target.abs();
    Outcome {
        passed: worst <= 0.02 && antipodal_err <= 0.02,
        detail: format!("antipodal {antipodal:.5} (target {target:.5}); max relative error {worst:.2e}"),
    }
}

fn recovery_expansion() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Sweep;
    c.sweep.mode = SweepMode::Recovery;
    c.sweep.vortices = "0:+1,pi:+1".into();
    c.sweep.eps = vec![1e-2, 1e-3, 1e-4];
    task(c)
}

fn minimize_expansion() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Sweep;
    c.sweep.mode = SweepMode::Minimize;
    c.schedule.eps = vec![0.1, 0.05, 0.02];
    c.schedule.eta_power = 3.0;
    c.domain.n_r = 24;
    c.domain.n_theta = 256;
    c.domain.boundary_h = Some(0.004);
    task(c)
}

fn projector() -> Outcome {
    let mut c = RunConfig::default();
    c.task = Task::Project;
    c.domain.n_r = 64;
    c.domain.n_theta = 256;
    c.project.eta = vec![0.04, 0.02, 0.01];
    task(c)
}

fn one_dimensional() -> Outcome {
    let mut rng = sample::rng(10);
    let mut sup_margin = f64::INFINITY;
    let mut coarea_margin = f64::INFINITY;
    let mut monotone = true;
    let gammas: Vec<f64> = (0..64).map(|k| 0.5 * PI * k as f64 / 64.0).collect();
    for _ in 0..100 {
        let x: Vec<f64> = (0..=160).map(|i| -1.0 + i as f64 / 80.0).collect();
        let v = sample::profile_values(&mut rng, &x, 3.0 * PI);
        let p = Profile1D::new(x.clone(), v.iter().map(|t| t - PI).collect(), 0.05).unwrap();
        sup_margin = sup_margin.min(truncations(&p).superadditivity_margin());
        let w = sample::profile_values(&mut rng, &x, PI);
        let r = theta_coarea(&Profile1D::new(x, w, 0.05).unwrap(), &gammas).unwrap();
        monotone &= r.monotone;
        coarea_margin = coarea_margin.min(r.margin());
    }
    let res = HalfDiskResolution::default();
    let mut gaps = Vec::new();
    let mut excess_1e3 = f64::NAN;
    for eps in [1e-2, 1e-3, 1e-4] {
        match minimize_f_eps(ArcData::Peierls, eps, 1.0, &res, 200) {
            Ok(m) => {
                if eps == 1e-3 {
                    excess_1e3 = m.excess;
                }
                gaps.push((m.excess - gamma0()).abs());
            }
            Err(e) => return Outcome { passed: false, detail: format!("error: {e}") },
        }
    }
    let approaching = gaps.windows(2).all(|w| w[1] <= w[0]);
    let passed = sup_margin >= -1e-8 && monotone && coarea_margin >= -1e-8 && excess_1e3 >= gamma0() - 0.3 && approaching;
    Outcome {
        passed,
        detail: format!(
            "superadditivity margin {sup_margin:.2e}, co-area margin {coarea_margin:.2e}, monotone {monotone}, excess@1e-3 {excess_1e3:.4} (gamma0 {:.5}), |excess - gamma0| {gaps:.4?}",
            gamma0()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Peierls oracle", peierls_oracle),
        ("rearrangement extremal equality", rearrangement),
        ("Jacobian identities", jacobian_identities),
        ("interior Jacobian stability", interior_stability),
        ("escaping-vortex fixture", escaping_vortex),
        ("renormalised-energy oracle", renormalised_energy),
        ("expansion, recovery mode", recovery_expansion),
        ("expansion, minimize mode", minimize_expansion),
        ("projector properties", projector),
        ("one-dimensional suite", one_dimensional),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut ran = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if filter.is_some_and(|n| n != id) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let o = f();
        let known = KNOWN_DEVIATIONS.contains(&id);
        let tag = match (o.passed, known) {
            (true, false) => "",
            (false, true) => " [known deviation]",
            (true, true) => " [unexpected pass]",
            (false, false) => " [unexpected failure]",
        };
        if o.passed {
            passed += 1;
        }
        if o.passed == known {
            unexpected.push(id);
        }
        println!(
            "criterion {id:>2} {}: {name} ({:.1} s){tag}\n    {}",
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {passed}/{ran} criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: outcome differs from the recorded deviations for {unexpected:?}");
        ExitCode::FAILURE
    }
}
