use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bvlab::config::{JacobianFixture, OnedKind, Shape, SweepMode};
use bvlab::{export_plotdata, parse_config, run, RunConfig, Task, OUTPUT_ENV};

#[derive(Parser, Debug)]
#[command(name = "bvlab", version, about = "Boundary vortex experiments for the thin-film Ginzburg-Landau energy")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (or a `.json` path for the report).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Default output root; each run writes into `<root>/<task>`.
    #[arg(long, global = true, env = OUTPUT_ENV, hide_env_values = true)]
    output_root: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Recovery,
    Minimize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Disk,
    Ellipse,
    Fourier,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureArg {
    Identity,
    Escaping,
    Snapshot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continuation minimization along the ε-schedule.
    Minimize,
    /// Energy expansion sweep in recovery or minimize mode.
    Sweep {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        vortices: Option<String>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Jacobian pairings of a fixture field.
    Jacobian {
        #[arg(long, value_enum)]
        fixture: Option<FixtureArg>,
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Renormalised energy of a vortex configuration.
    Renorm {
        #[arg(long, value_enum)]
        domain: Option<DomainArg>,
        #[arg(long)]
        vortices: Option<String>,
    },
    /// Projection onto unit-length fields.
    Project {
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// One-dimensional and half-disk checks.
    Oned {
        #[command(subcommand)]
        kind: OnedCommand,
    },
    /// Plot-ready CSV tables from a report.
    Export {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum OnedCommand {
    /// Peierls profile energy against its closed form.
    Peierls {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Minimization of the localized half-disk functional.
    Minimize {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Rearrangement inequality on random interval unions.
    Rearr {
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    match &cli.command {
        Command::Minimize => c.task = Task::Minimize,
        Command::Sweep { mode, vortices, eps } => {
            c.task = Task::Sweep;
            if let Some(m) = mode {
                c.sweep.mode = match m {
                    ModeArg::Recovery => SweepMode::Recovery,
                    ModeArg::Minimize => SweepMode::Minimize,
                };
            }
            if let Some(v) = vortices {
                c.sweep.vortices = v.clone();
            }
            if let Some(e) = eps {
                match c.sweep.mode {
                    SweepMode::Recovery => c.sweep.eps = e.clone(),
                    SweepMode::Minimize => c.schedule.eps = e.clone(),
                }
            }
        }
        Command::Jacobian { fixture, field } => {
            c.task = Task::Jacobian;
            if let Some(f) = fixture {
                c.jacobian.fixture = match f {
                    FixtureArg::Identity => JacobianFixture::Identity,
                    FixtureArg::Escaping => JacobianFixture::Escaping,
                    FixtureArg::Snapshot => JacobianFixture::Snapshot,
                };
            }
            if let Some(p) = field {
                c.jacobian.field = Some(p.clone());
                c.jacobian.fixture = JacobianFixture::Snapshot;
            }
        }
        Command::Renorm { domain, vortices } => {
            c.task = Task::Renorm;
            if let Some(d) = domain {
                c.domain.shape = match d {
                    DomainArg::Disk => Shape::Disk,
                    DomainArg::Ellipse => Shape::Ellipse,
                    DomainArg::Fourier => Shape::Fourier,
                };
            }
            if let Some(v) = vortices {
                c.renorm.vortices = v.clone();
            }
        }
        Command::Project { field, beta } => {
            c.task = Task::Project;
            if let Some(p) = field {
                c.project.field = Some(p.clone());
            }
            if let Some(b) = beta {
                c.project.beta = *b;
            }
        }
        Command::Oned { kind } => {
            c.task = Task::Oned;
            match kind {
                OnedCommand::Peierls { eps } | OnedCommand::Minimize { eps } => {
                    c.oned.kind = if matches!(kind, OnedCommand::Peierls { .. }) { OnedKind::Peierls } else { OnedKind::Minimize };
                    if let Some(e) = eps {
                        c.oned.eps = e.clone();
                    }
                }
                OnedCommand::Rearr { samples } => {
                    c.oned.kind = OnedKind::Rearr;
                    if let Some(s) = samples {
                        c.oned.samples = *s;
                    }
                }
            }
        }
        Command::Export { .. } => {}
    }
    c.validate()?;
    Ok(c)
}

fn output_dir(cli: &Cli, c: &RunConfig) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    if let Some(o) = &c.output {
        return o.clone();
    }
    cli.output_root.clone().unwrap_or_else(|| PathBuf::from("bvlab-out")).join(c.task.name())
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "json")
}

fn main_inner(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    if let Command::Export { report } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| report.parent().map(Path::to_path_buf).unwrap_or_default());
        for p in export_plotdata(report, &out)? {
            println!("wrote {}", p.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let config = resolve(&cli)?;
    let target = output_dir(&cli, &config);
    let dir = if is_json(&target) { target.parent().map(Path::to_path_buf).unwrap_or_default() } else { target.clone() };
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    let report = run(&config, &dir)?;
    if is_json(&target) {
        std::fs::rename(dir.join("report.json"), &target)?;
    }
    for c in &report.checks {
        println!("{} {}: value {:.6e}, limit {:.6e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    if let Some(e) = &report.error {
        eprintln!("error ({}): {}", e.kind, e.message);
        return Ok(ExitCode::from(2));
    }
    let path = if is_json(&target) { target } else { dir.join("report.json") };
    println!("report: {}", path.display());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bvlab: {e:#}");
            ExitCode::from(3)
        }
    }
}
