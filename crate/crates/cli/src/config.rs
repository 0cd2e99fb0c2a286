//! Run configuration: a single JSON document per run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use plapwave_core::solver::{
    DEFAULT_BLOWUP_THRESHOLD, DEFAULT_NEWTON_MAX_ITER, DEFAULT_NEWTON_TOL,
};
use plapwave_core::{
    BasisSet, Mesh, ProblemSpec, RegimeReport, Scheme, SourceKind, SourceSpec, TruncationSpec,
    Violation, DEFAULT_QUAD_ORDER,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Experiment {
    Single,
    NRefinement,
    DtRefinement,
    TruncationCompare,
    HorizonCheck,
    GlobalRegime,
    PropertySuite,
}

impl Experiment {
    /// Lower-case stem used for output file names.
    pub fn slug(self) -> &'static str {
        match self {
            Experiment::Single => "single",
            Experiment::NRefinement => "n_refinement",
            Experiment::DtRefinement => "dt_refinement",
            Experiment::TruncationCompare => "truncation_compare",
            Experiment::HorizonCheck => "horizon_check",
            Experiment::GlobalRegime => "global_regime",
            Experiment::PropertySuite => "property_suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Validation {
    #[default]
    Strict,
    Permissive,
}

/// One experiment or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentList {
    One(Experiment),
    Many(Vec<Experiment>),
}

impl ExperimentList {
    pub fn to_vec(&self) -> Vec<Experiment> {
        match self {
            ExperimentList::One(e) => vec![*e],
            ExperimentList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_elements: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum BasisConfig {
    FemHat,
    RobinEigen { count: usize },
}

/// `offset + sum_k cos[k] cos((k+1) pi x) + sum_k sin[k] sin((k+1) pi x)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * PI * x).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * PI * x).sin())
            .sum();
        self.offset + c + s
    }

    fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub mesh: MeshConfig,
    #[serde(default = "default_basis")]
    pub basis: BasisConfig,
    pub source: SourceConfig,
    #[serde(default = "default_truncation")]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub u0: Profile,
    #[serde(default)]
    pub u1: Profile,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

fn default_basis() -> BasisConfig {
    BasisConfig::FemHat
}
fn default_truncation() -> TruncationSpec {
    TruncationSpec::None
}
fn default_newton_tol() -> f64 {
    DEFAULT_NEWTON_TOL
}
fn default_newton_max_iter() -> usize {
    DEFAULT_NEWTON_MAX_ITER
}
fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}

/// Power-family source `a |s|^{r-1} s + b s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub r: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

impl SourceConfig {
    pub fn to_spec(&self) -> SourceSpec {
        SourceSpec {
            kind: self.kind,
            r: self.r,
            a: self.a,
            b: self.b,
            custom: None,
        }
    }
}

/// Knobs for the sweep and audit experiments; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// Basis sizes for N_REFINEMENT (element counts for hats, mode counts for eigenbases).
    pub n_values: Vec<usize>,
    /// Number of successive dt halvings for DT_REFINEMENT.
    pub dt_halvings: usize,
    /// `K` for TRUNCATION_COMPARE; chosen from the initial energy when absent.
    pub radial_k: Option<f64>,
    /// `n` for TRUNCATION_COMPARE.
    pub cutoff_n: u32,
    /// Sampled pairs for the Lipschitz probe of HORIZON_CHECK.
    pub lipschitz_samples: usize,
    /// Random fields per check in PROPERTY_SUITE.
    pub property_samples: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_values: vec![8, 16, 32, 64],
            dt_halvings: 4,
            radial_k: None,
            cutoff_n: 4,
            lipschitz_samples: 2000,
            property_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentList,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub validation: Validation,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub study: StudyConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("plapwave-out")
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let config = load_config(path)?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file without validating it, so that
/// command-line overrides can be applied first.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    deserialize(&text, &path.display().to_string())
}

/// Parses and validates configuration text; `origin` labels diagnostics.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let config = deserialize(text, origin)?;
    config.validate()?;
    Ok(config)
}

fn deserialize(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn experiments(&self) -> Vec<Experiment> {
        self.experiment.to_vec()
    }

    pub fn regime(&self) -> RegimeReport {
        RegimeReport::classify(self.problem.p, self.problem.source.r)
    }

    /// Regime hypotheses the configuration violates, whatever the validation mode.
    pub fn regime_violations(&self) -> Vec<Violation> {
        let global = self.experiments().contains(&Experiment::GlobalRegime);
        self.regime().violations(global)
    }

    /// Checks field ranges; in strict mode also the regime hypotheses.
    pub fn validate(&self) -> Result<(), CliError> {
        let pr = &self.problem;
        let mut problems = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                problems.push(format!("{field}: {msg}"));
            }
        };
        check(
            pr.p.is_finite() && pr.p >= 2.0,
            "problem.p",
            "must be a finite number >= 2",
        );
        check(
            pr.mesh.n_elements >= 1,
            "problem.mesh.n_elements",
            "must be at least 1",
        );
        check(
            pr.mesh.quad_order >= 1,
            "problem.mesh.quad_order",
            "must be at least 1",
        );
        if pr.p.is_finite() {
            check(
                pr.mesh.quad_order >= Mesh::min_quad_order_for(pr.p),
                "problem.mesh.quad_order",
                &format!(
                    "must be at least {} for p = {}",
                    Mesh::min_quad_order_for(pr.p),
                    pr.p
                ),
            );
        }
        if let BasisConfig::RobinEigen { count } = pr.basis {
            check(
                count >= 1 && count <= pr.mesh.n_elements + 1,
                "problem.basis.count",
                "must lie between 1 and the number of mesh nodes",
            );
        }
        check(
            pr.source.kind != SourceKind::Custom,
            "problem.source.kind",
            "CUSTOM sources cannot be configured from a file",
        );
        check(
            pr.source.r.is_finite() && pr.source.r >= 1.0,
            "problem.source.r",
            "must be a finite number >= 1",
        );
        check(
            pr.source.a.is_finite() && pr.source.b.is_finite(),
            "problem.source",
            "coefficients must be finite",
        );
        check(
            pr.truncation.validate().is_ok(),
            "problem.truncation",
            "K must be positive and n at least 1",
        );
        check(
            pr.u0.is_finite() && pr.u1.is_finite(),
            "problem.u0/u1",
            "profile coefficients must be finite",
        );
        check(
            pr.dt.is_finite() && pr.dt > 0.0,
            "problem.dt",
            "must be positive",
        );
        check(
            pr.t_final.is_finite() && pr.t_final >= pr.dt,
            "problem.t_final",
            "must be at least dt",
        );
        check(
            pr.newton_tol > 0.0,
            "problem.newton_tol",
            "must be positive",
        );
        check(
            pr.newton_max_iter >= 1,
            "problem.newton_max_iter",
            "must be at least 1",
        );
        check(
            pr.blowup_threshold > 0.0,
            "problem.blowup_threshold",
            "must be positive",
        );
        let st = &self.study;
        check(
            st.n_values.len() >= 2 && st.n_values.iter().all(|&n| n >= 1),
            "study.n_values",
            "needs at least two positive sizes",
        );
        check(
            st.dt_halvings >= 2,
            "study.dt_halvings",
            "must be at least 2",
        );
        check(
            st.radial_k.is_none_or(|k| k > 0.0),
            "study.radial_k",
            "must be positive",
        );
        check(st.cutoff_n >= 1, "study.cutoff_n", "must be at least 1");
        check(
            st.lipschitz_samples >= 2,
            "study.lipschitz_samples",
            "must be at least 2",
        );
        check(
            st.property_samples >= 1,
            "study.property_samples",
            "must be at least 1",
        );
        let exps = self.experiments();
        let mut sorted = exps.clone();
        sorted.sort();
        sorted.dedup();
        check(
            sorted.len() == exps.len(),
            "experiment",
            "lists an experiment twice",
        );
        if !problems.is_empty() {
            return Err(CliError::Invalid(problems));
        }
        if self.validation == Validation::Strict {
            let violations = self.regime_violations();
            if !violations.is_empty() {
                return Err(CliError::Regime(violations));
            }
        }
        Ok(())
    }

    pub fn build_basis(&self) -> plapwave_core::Result<Arc<BasisSet>> {
        self.build_basis_with(self.problem.mesh.n_elements, None)
    }

    /// Basis on `n_elements` elements; `count` overrides the eigenbasis size.
    pub fn build_basis_with(
        &self,
        n_elements: usize,
        count: Option<usize>,
    ) -> plapwave_core::Result<Arc<BasisSet>> {
        let mesh = Mesh::uniform(n_elements, self.problem.mesh.quad_order)?;
        Ok(Arc::new(match self.problem.basis {
            BasisConfig::FemHat => BasisSet::fem(&mesh)?,
            BasisConfig::RobinEigen { count: c } => {
                BasisSet::robin_eigen(&mesh, count.unwrap_or(c))?
            }
        }))
    }

    /// The problem on `basis`: `u0` by nodal interpolation on hats (projection
    /// otherwise), `u1` by L2 projection.
    pub fn problem_on(&self, basis: Arc<BasisSet>) -> plapwave_core::Result<ProblemSpec> {
        let pr = &self.problem;
        let u0 = match self.problem.basis {
            BasisConfig::FemHat => basis.interpolate(|x| pr.u0.eval(x))?,
            BasisConfig::RobinEigen { .. } => basis.project_l2(|x| pr.u0.eval(x))?,
        };
        let u1 = basis.project_l2(|x| pr.u1.eval(x))?;
        let spec = ProblemSpec::new(basis, pr.p, u0, u1)
            .with_source(pr.source.to_spec())
            .with_truncation(pr.truncation)
            .with_horizon(pr.t_final, pr.dt)
            .with_scheme(pr.scheme)
            .with_newton(pr.newton_tol, pr.newton_max_iter)
            .with_blowup_threshold(pr.blowup_threshold);
        spec.validate()?;
        Ok(spec)
    }

    pub fn problem(&self) -> plapwave_core::Result<ProblemSpec> {
        self.problem_on(self.build_basis()?)
    }
}
