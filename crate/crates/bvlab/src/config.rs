//! Strict TOML run configuration.
//!
//! Every section is optional and filled with defaults; unknown keys are
//! rejected with the key name and line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bvlab_core::jacobian::DictionarySpec;
use bvlab_core::optimizer::{EtaRule, MinimizeConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Minimize,
    Sweep,
    Jacobian,
    Renorm,
    Project,
    Oned,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Minimize => "minimize",
            Task::Sweep => "sweep",
            Task::Jacobian => "jacobian",
            Task::Renorm => "renorm",
            Task::Project => "project",
            Task::Oned => "oned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the CLI flag and the environment override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub dictionary: DictionaryConf,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub jacobian: JacobianSpec,
    #[serde(default)]
    pub renorm: RenormSpec,
    #[serde(default)]
    pub project: ProjectSpec,
    #[serde(default)]
    pub oned: OnedSpec,
    #[serde(default)]
    pub assertions: Assertions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::default(),
            seed: 0,
            output: None,
            domain: DomainSpec::default(),
            schedule: ScheduleSpec::default(),
            optimizer: OptimizerSpec::default(),
            dictionary: DictionaryConf::default(),
            sweep: SweepSpec::default(),
            jacobian: JacobianSpec::default(),
            renorm: RenormSpec::default(),
            project: ProjectSpec::default(),
            oned: OnedSpec::default(),
            assertions: Assertions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[default]
    Disk,
    Ellipse,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSpec {
    pub shape: Shape,
    pub radius: f64,
    /// Ellipse semi-axes.
    pub semi_axes: [f64; 2],
    /// Fourier perturbation `(amplitude, mode)` pairs.
    pub coeffs: Vec<(f64, u32)>,
    pub n_r: usize,
    pub n_theta: usize,
    /// Radial spacing at the boundary of a boundary-graded mesh.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_h: Option<f64>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            shape: Shape::Disk,
            radius: 1.0,
            semi_axes: [1.0, 0.6],
            coeffs: Vec::new(),
            n_r: 32,
            n_theta: 128,
            boundary_h: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSpec {
    pub eps: Vec<f64>,
    /// `η = ε^eta_power` unless an explicit list is given.
    pub eta_power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec { eps: vec![0.1, 0.05, 0.02], eta_power: 3.0, eta: None }
    }
}

impl ScheduleSpec {
    pub fn eta_rule(&self) -> EtaRule {
        match &self.eta {
            Some(l) => EtaRule::List(l.clone()),
            None => EtaRule::Power(self.eta_power),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSpec {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub memory: usize,
    pub accept_stalled: bool,
    pub init: InitSpec,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let d = MinimizeConfig::default();
        OptimizerSpec {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            memory: d.memory,
            accept_stalled: true,
            init: InitSpec::Constant,
        }
    }
}

impl OptimizerSpec {
    pub fn minimize_config(&self, seed: u64) -> MinimizeConfig {
        MinimizeConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            memory: self.memory,
            accept_stalled: self.accept_stalled,
            seed,
            ..MinimizeConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSpec {
    #[default]
    Constant,
    Tangent,
    Random,
}

/// `"default"` or an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DictionaryConf {
    Preset(String),
    Custom(DictionaryTable),
}

impl Default for DictionaryConf {
    fn default() -> Self {
        DictionaryConf::Preset("default".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryTable {
    pub n_boundary: usize,
    pub n_interior: usize,
    pub radii: [f64; 2],
}

impl DictionaryConf {
    pub fn spec(&self) -> Result<DictionarySpec, ConfigError> {
        match self {
            DictionaryConf::Preset(p) if p == "default" => Ok(DictionarySpec::default()),
            DictionaryConf::Preset(p) => Err(ConfigError::Invalid(format!("unknown dictionary preset `{p}`"))),
            DictionaryConf::Custom(t) => Ok(DictionarySpec { n_boundary: t.n_boundary, n_interior: t.n_interior, radii: t.radii }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    #[default]
    Recovery,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub mode: SweepMode,
    /// Recovery-mode vortices as `angle:degree` pairs, e.g. `"0:+1,pi:+1"`.
    pub vortices: String,
    /// Recovery-mode ε values (the schedule is used in minimize mode).
    pub eps: Vec<f64>,
    pub window: f64,
    pub threshold: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            mode: SweepMode::Recovery,
            vortices: "0:+1,pi:+1".into(),
            eps: vec![1e-2, 1e-3, 1e-4],
            window: 0.3,
            threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianFixture {
    /// `u(x) = x` on the configured domain.
    #[default]
    Identity,
    /// Interior vortex escaping through the boundary, one run per ε.
    Escaping,
    /// Field read from `jacobian.field`.
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JacobianSpec {
    pub fixture: JacobianFixture,
    pub eps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

impl Default for JacobianSpec {
    fn default() -> Self {
        JacobianSpec { fixture: JacobianFixture::Identity, eps: vec![0.02, 0.01, 0.005], field: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenormSpec {
    pub vortices: String,
    pub rho: Vec<f64>,
    /// Mesh spacing at the vortices for the numeric evaluation.
    pub h_min: f64,
}

impl Default for RenormSpec {
    fn default() -> Self {
        RenormSpec { vortices: "0:+1,pi:+1".into(), rho: vec![0.08, 0.04, 0.02, 0.01], h_min: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectSpec {
    pub beta: f64,
    /// Input field; without it a smooth unit test field is projected for each η.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    pub eps: f64,
    pub eta: Vec<f64>,
}

impl Default for ProjectSpec {
    fn default() -> Self {
        ProjectSpec { beta: 0.75, field: None, eps: 0.1, eta: vec![0.04, 0.02, 0.01] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnedKind {
    #[default]
    Peierls,
    Minimize,
    Rearr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnedSpec {
    pub kind: OnedKind,
    pub eps: Vec<f64>,
    pub r: f64,
    /// Number of random interval pairs for the rearrangement check.
    pub samples: usize,
    pub max_iters: usize,
}

impl Default for OnedSpec {
    fn default() -> Self {
        OnedSpec { kind: OnedKind::Peierls, eps: vec![1e-2, 1e-3], r: 1.0, samples: 500, max_iters: 200 }
    }
}

/// Enabled checks and their tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    pub enabled: bool,
    pub peierls_rel: f64,
    pub rearrangement_abs: f64,
    pub zero_average_abs: f64,
    pub boundary_mass: f64,
    pub boundary_mass_rel: f64,
    pub dual_decay: f64,
    pub renorm_rel: f64,
    pub recovery_slope_rel: f64,
    pub recovery_intercept_rel: f64,
    pub minimize_slope_rel: f64,
    pub penalty_ratio: f64,
    pub separation_tol: f64,
    pub projection_spread: f64,
    pub excess_slack: f64,
}

impl Default for Assertions {
    fn default() -> Self {
        Assertions {
            enabled: true,
            peierls_rel: 0.01,
            rearrangement_abs: 1e-10,
            zero_average_abs: 1e-10,
            boundary_mass: std::f64::consts::TAU,
            boundary_mass_rel: 0.02,
            dual_decay: 2.0,
            renorm_rel: 0.02,
            recovery_slope_rel: 0.03,
            recovery_intercept_rel: 0.10,
            minimize_slope_rel: 0.10,
            penalty_ratio: 3.0,
            separation_tol: 0.05,
            projection_spread: 2.0,
            excess_slack: 0.3,
        }
    }
}

fn line_of(src: &str, span: Option<std::ops::Range<usize>>) -> Option<usize> {
    span.map(|s| src.as_bytes()[..s.start.min(src.len())].iter().filter(|&&b| b == b'\n').count() + 1)
}

impl RunConfig {
    pub fn parse_str(src: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| {
            let line = line_of(src, e.span()).map(|l| format!("line {l}: ")).unwrap_or_default();
            ConfigError::Parse { path: path.to_path_buf(), message: format!("{line}{}", e.message()) }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        let d = &self.domain;
        if !(d.radius > 0.0) || d.semi_axes.iter().any(|&a| !(a > 0.0)) {
            return bad("domain sizes must be positive");
        }
        if d.n_r < 2 || d.n_theta < 8 {
            return bad("domain resolution too small");
        }
        if self.schedule.eps.is_empty() || self.schedule.eps.iter().any(|&e| !(e > 0.0)) {
            return bad("schedule.eps must be nonempty and positive");
        }
        if !(self.project.beta > 0.5 && self.project.beta < 1.0) {
            return bad("project.beta must lie in (1/2, 1)");
        }
        self.dictionary.spec()?;
        Ok(())
    }

    /// SHA-256 of the resolved config.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::parse_str(&src, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse_str("[domain]\nshape = \"disk\"\n", Path::new("m.toml")).unwrap();
        assert_eq!(c.project.beta, 0.75);
        assert_eq!(c.schedule.eta_rule(), EtaRule::Power(3.0));
        assert_eq!(c.dictionary, DictionaryConf::Preset("default".into()));
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse_str("[schedule]\nepslion = [0.1]\n", Path::new("u.toml")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("epslion") && msg.contains("line 2"), "{msg}");
        let e = RunConfig::parse_str("sed = 3\n", Path::new("u.toml")).unwrap_err();
        assert!(e.to_string().contains("sed"));
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.domain.coeffs = vec![(0.1, 3)];
        c.dictionary = DictionaryConf::Custom(DictionaryTable { n_boundary: 8, n_interior: 3, radii: [0.1, 0.3] });
        c.project.field = Some("f.bin".into());
        let again = RunConfig::parse_str(&c.to_toml(), Path::new("r.toml")).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse_str("[project]\nbeta = 0.4\n", Path::new("b.toml")).is_err());
        assert!(RunConfig::parse_str("dictionary = \"fancy\"\n", Path::new("b.toml")).is_err());
    }
}
