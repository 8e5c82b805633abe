use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use proptest::prelude::*;

use bvlab::config::{JacobianFixture, OnedKind, SweepMode};
use bvlab::report::Report;
use bvlab::{export_plotdata, parse_config, run, snapshot, RunConfig, Task};
use bvlab_core::geometry::{make_disk, make_ellipse, make_perturbed_disk};
use bvlab_core::{Domain, VectorField2D};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bvlab"))
}

fn strip_timestamp(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn config_file_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "seed = 1\n[schedule]\neps = [0.1]\nepslion = 2\n").unwrap();
    let msg = parse_config(&p).unwrap_err().to_string();
    assert!(msg.contains("epslion") && msg.contains("line 4"), "{msg}");
    assert!(parse_config(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn recovery_sweep_report_has_fit_block() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = RunConfig::default();
    c.task = Task::Sweep;
    c.sweep.mode = SweepMode::Recovery;
    c.sweep.eps = vec![0.02, 0.01, 0.005];
    let r = run(&c, dir.path()).unwrap();
    assert!(r.error.is_none());
    let fit = &r.results["fit"];
    for k in ["a", "b", "residual"] {
        assert!(fit[k].is_f64(), "{k}");
    }
    assert_eq!(r.series.len(), 3);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back.config_hash, r.config_hash);
    let u = snapshot::load(&dir.path().join("field_final.bin")).unwrap();
    assert_eq!(u.eps, 0.005);

    let plots = dir.path().join("plots");
    export_plotdata(&dir.path().join("report.json"), &plots).unwrap();
    let csv = std::fs::read_to_string(plots.join("energy_vs_logeps.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let phase = std::fs::read_to_string(plots.join("boundary_phase.csv")).unwrap();
    assert_eq!(phase.lines().count(), u.domain.boundary.len() + 1);
}

#[test]
fn identical_runs_give_identical_reports() {
    let base = tempfile::tempdir().unwrap();
    for task in [Task::Oned, Task::Jacobian, Task::Minimize] {
        let mut c = RunConfig::default();
        c.task = task;
        c.seed = 17;
        c.oned.kind = OnedKind::Rearr;
        c.domain.n_r = 6;
        c.domain.n_theta = 32;
        c.schedule.eps = vec![0.3, 0.2];
        c.optimizer.init = bvlab::config::InitSpec::Random;
        c.optimizer.max_iters = 200;
        let (a, b) = (base.path().join(format!("{task:?}a")), base.path().join(format!("{task:?}b")));
        run(&c, &a).unwrap();
        run(&c, &b).unwrap();
        assert_eq!(strip_timestamp(&a.join("report.json")), strip_timestamp(&b.join("report.json")));
        for f in ["energies.csv", "boundary_trace.csv", "vortices.csv", "pairings.csv"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn inverted_boundary_check_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("inverted.toml");
    std::fs::write(
        &cfg,
        "task = \"jacobian\"\n[jacobian]\nfixture = \"escaping\"\neps = [0.02]\n[assertions]\nboundary_mass = -6.283185307179586\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let status = bin().args(["jacobian", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let r = Report::read(&out.join("report.json")).unwrap();
    assert!(!r.passed);
    assert!(r.checks.iter().any(|c| c.name.starts_with("boundary_mass") && !c.passed));

    let ok = bin().args(["jacobian", "--fixture", "escaping", "--out"]).arg(dir.path().join("plain")).status().unwrap();
    // the dual-norm decay check fails at these ε; the boundary mass passes
    let r = Report::read(&dir.path().join("plain/report.json")).unwrap();
    assert!(r.checks.iter().filter(|c| c.name.starts_with("boundary_mass")).all(|c| c.passed));
    assert_eq!(ok.code(), Some(1));
}

#[test]
fn module_errors_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("err");
    let status = bin().args(["renorm", "--vortices", "0:+1,1:+2", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let r = Report::read(&out.join("report.json")).unwrap();
    let e = r.error.unwrap();
    assert!(e.message.contains("multiplicities"), "{}", e.message);
    assert!(!r.passed);
    let bad = bin().args(["renorm", "--vortices", "zero:+1"]).arg("--out").arg(dir.path().join("x")).status().unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn cli_renorm_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rn");
    let s = bin().args(["renorm", "--domain", "disk", "--vortices", "0:+1,pi:+1", "--out"]).arg(&out).output().unwrap();
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    assert!(String::from_utf8_lossy(&s.stdout).contains("PASS w_rel_err"));
    let r = Report::read(&out.join("report.json")).unwrap();
    assert!((r.results["w_exact"].as_f64().unwrap() + 4.355172).abs() < 1e-5);
    let e = bin().arg("export").arg("--report").arg(out.join("report.json")).status().unwrap();
    assert!(e.success());
    assert!(out.join("vortex_positions.csv").exists());
}

#[test]
fn jacobian_report_exports_pairing_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = RunConfig::default();
    c.task = Task::Jacobian;
    c.jacobian.fixture = JacobianFixture::Identity;
    c.domain.n_r = 8;
    c.domain.n_theta = 32;
    let r = run(&c, dir.path()).unwrap();
    assert!(r.passed);
    let files = export_plotdata(&dir.path().join("report.json"), dir.path()).unwrap();
    let table = std::fs::read_to_string(&files[1]).unwrap();
    assert_eq!(table.lines().count(), r.pairings.len() + 1);
    assert!(table.starts_with("label,global,interior,boundary"));
    assert!((r.results["global_quadratic"].as_f64().unwrap() + std::f64::consts::FRAC_PI_2).abs() < 0.05);
}

#[test]
fn empty_report_exports_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    std::fs::write(&p, "{}").unwrap();
    let files = export_plotdata(&p, &dir.path().join("plots")).unwrap();
    for f in files {
        let s = std::fs::read_to_string(&f).unwrap();
        assert_eq!(s.lines().count(), 1, "{}", f.display());
    }
    assert!(export_plotdata(&dir.path().join("none.json"), dir.path()).is_err());
    let status = bin().args(["export", "--report"]).arg(dir.path().join("none.json")).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn project_from_snapshot_to_json_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = Arc::new(make_disk(1.0, 40, 160).unwrap());
    let u = bvlab::run::smooth_unit_field(d, 0.1, 0.04).unwrap();
    let f = dir.path().join("f.bin");
    snapshot::save(&u, &f).unwrap();
    let target = dir.path().join("proj.json");
    let s = bin().args(["project", "--beta", "0.75", "--threads", "2", "--field"]).arg(&f).arg("--out").arg(&target).output().unwrap();
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let r = Report::read(&target).unwrap();
    assert_eq!(r.task, "project");
    let run0 = &r.results["runs"][0];
    assert!(run0["unit_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(run0["nonzero_degree_cells"].as_u64(), Some(0));
    let p = snapshot::load(&dir.path().join("projected_eta0.04.bin")).unwrap();
    assert!(p.values.iter().all(|v| (v[0].hypot(v[1]) - 1.0).abs() < 1e-12));
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = bin().args(["oned", "rearr", "--samples", "20"]).env(bvlab::OUTPUT_ENV, dir.path()).status().unwrap();
    assert!(s.success());
    assert!(dir.path().join("oned/report.json").exists());
}

fn domains() -> Vec<Domain> {
    vec![
        make_disk(1.3, 4, 16).unwrap(),
        make_ellipse(1.0, 0.5, 4, 20).unwrap(),
        make_perturbed_disk(&[(0.1, 3)], 4, 24).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snapshot_round_trip(which in 0usize..3, seed in any::<u64>(), eps in 0.01f64..1.0) {
        let d = Arc::new(domains().swap_remove(which));
        let n = d.mesh.n_nodes();
        let vals: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let x = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % 10_007) as f64 / 10_007.0;
                [x - 0.5, (1.0 - x) * 2.0]
            })
            .collect();
        let u = VectorField2D::new(d, vals, eps, eps * 0.1).unwrap();
        let mut buf = Vec::new();
        snapshot::write_field(&u, &mut buf).unwrap();
        let back = snapshot::read_field(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(&back.values, &u.values);
        prop_assert_eq!(back.eps, u.eps);
        prop_assert_eq!(&back.domain.mesh.nodes, &u.domain.mesh.nodes);
        buf[0] = b'X';
        prop_assert!(snapshot::read_field(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn config_round_trip(seed in any::<u64>(), n_r in 2usize..64, beta in 0.51f64..0.99, eps in proptest::collection::vec(1e-4f64..0.5, 1..5)) {
        let mut c = RunConfig::default();
        c.seed = seed;
        c.domain.n_r = n_r;
        c.project.beta = beta;
        c.schedule.eps = eps;
        let back = RunConfig::parse_str(&c.to_toml(), Path::new("p.toml")).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn vortex_lists_round_trip(t1 in 0.0f64..3.0, gap in 0.1f64..3.0, d in 1i32..3) {
        let s = format!("{t1}:+{d},{}:{}", t1 + gap, 2 - d);
        let parsed = bvlab::vortices::parse_vortices(&s);
        if d == 2 {
            prop_assert!(parsed.is_err());
        } else {
            let v = parsed.unwrap();
            prop_assert_eq!(v.len(), 2);
            prop_assert_eq!(v.abs_degree(), 2);
        }
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}
