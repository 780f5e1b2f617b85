//! Problem configuration: one JSON document per run.
//!
//! ```json
//! {
//!   "system": {
//!     "dim": 2,
//!     "drift": [[[re, im], [re, im]], [[re, im], [re, im]]],
//!     "controls": [<matrix>, ...],
//!     "channel_names": ["x", "y"]
//!   },
//!   "initial_state": <matrix>,
//!   "target_state": <matrix>,
//!   "optimizer": { "eta": 0.01, "delta": 0.1, "epsilon": 0.001, "slices": 20,
//!                  "horizon": 1.0, "u_max": 1.0, ... },
//!   "output": { "directory": "out", "formats": ["csv", "json", "svg"],
//!               "emit_trajectory": true }
//! }
//! ```
//!
//! Matrices are row-major lists of rows, each entry a `[re, im]` pair.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qoc_core::fidelity::{GradientBackend, DEFAULT_FD_STEP};
use qoc_core::optimizer::OptimizerConfig;
use qoc_core::propagation::PropagatorForm;
use qoc_core::{CMatrix, ControlSystem, DensityMatrix, Execution, Hermitian};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: SystemDoc,
    pub initial_state: MatrixDoc,
    pub target_state: MatrixDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerDoc>,
    #[serde(default)]
    pub output: OutputDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub dim: usize,
    pub drift: MatrixDoc,
    pub controls: Vec<MatrixDoc>,
    pub channel_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientDoc {
    #[default]
    FiniteDifference,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorDoc {
    #[default]
    OrderedProduct,
    SummedExponent,
}

fn default_max_iterations() -> usize {
    1000
}

fn default_fd_step() -> f64 {
    DEFAULT_FD_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerDoc {
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub slices: usize,
    pub horizon: f64,
    pub u_max: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// `channels × slices`; omitted means all zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_controls: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub gradient: GradientDoc,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub propagator: PropagatorDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn default_directory() -> PathBuf {
    PathBuf::from("qoc-out")
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "yes")]
    pub emit_trajectory: bool,
}

impl Default for OutputDoc {
    fn default() -> Self {
        OutputDoc {
            directory: default_directory(),
            formats: all_formats(),
            emit_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub directory: PathBuf,
    /// Sorted, without duplicates.
    pub formats: Vec<Format>,
    pub emit_trajectory: bool,
}

impl OutputSettings {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// A fully validated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub system: ControlSystem,
    pub initial_state: DensityMatrix,
    pub target_state: DensityMatrix,
    pub optimizer: Option<OptimizerConfig>,
    pub output: OutputSettings,
}

impl ProblemConfig {
    pub fn require_optimizer(&self) -> CliResult<&OptimizerConfig> {
        self.optimizer
            .as_ref()
            .ok_or_else(|| CliError::validation("optimizer", "section is required for this command"))
    }

    pub fn to_document(&self) -> ConfigDocument {
        let sys = &self.system;
        ConfigDocument {
            system: SystemDoc {
                dim: sys.dim(),
                drift: matrix_doc(sys.drift().as_matrix()),
                controls: sys.controls().iter().map(|h| matrix_doc(h.as_matrix())).collect(),
                channel_names: sys.channel_names().to_vec(),
            },
            initial_state: matrix_doc(self.initial_state.as_matrix()),
            target_state: matrix_doc(self.target_state.as_matrix()),
            optimizer: self.optimizer.as_ref().map(|o| OptimizerDoc {
                eta: o.eta,
                delta: o.delta,
                epsilon: o.epsilon,
                slices: o.slices,
                horizon: o.horizon,
                u_max: o.u_max,
                max_iterations: o.max_iterations,
                init_controls: o.init_controls.clone(),
                gradient: match o.gradient {
                    GradientBackend::FiniteDifference => GradientDoc::FiniteDifference,
                    GradientBackend::ClosedForm => GradientDoc::ClosedForm,
                },
                fd_step: o.fd_step,
                propagator: match o.propagator {
                    PropagatorForm::OrderedProduct => PropagatorDoc::OrderedProduct,
                    PropagatorForm::SummedExponent => PropagatorDoc::SummedExponent,
                },
            }),
            output: OutputDoc {
                directory: self.output.directory.clone(),
                formats: self.output.formats.clone(),
                emit_trajectory: self.output.emit_trajectory,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("config documents always serialize")
    }
}

pub fn matrix_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_doc(field: &str, doc: &MatrixDoc, dim: usize) -> CliResult<CMatrix> {
    if doc.len() != dim || doc.iter().any(|row| row.len() != dim) {
        let cols = doc.first().map_or(0, Vec::len);
        return Err(CliError::validation(
            field,
            format!("expected a {dim}x{dim} matrix, found {}x{cols}", doc.len()),
        ));
    }
    if doc.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::validation(field, "entries must be finite"));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(doc[i][j][0], doc[i][j][1])
    }))
}

fn hermitian_at(field: &str, doc: &MatrixDoc, dim: usize) -> CliResult<Hermitian> {
    Hermitian::new(matrix_from_doc(field, doc, dim)?).map_err(|e| CliError::at(field, e))
}

fn density_at(field: &str, doc: &MatrixDoc, dim: usize) -> CliResult<DensityMatrix> {
    DensityMatrix::new(matrix_from_doc(field, doc, dim)?).map_err(|e| CliError::at(field, e))
}

impl ConfigDocument {
    pub fn validate(&self) -> CliResult<ProblemConfig> {
        let s = &self.system;
        if s.dim == 0 {
            return Err(CliError::validation("system.dim", "must be at least 1"));
        }
        let drift = hermitian_at("system.drift", &s.drift, s.dim)?;
        if s.controls.is_empty() {
            return Err(CliError::validation(
                "system.controls",
                "at least one control channel is required",
            ));
        }
        let controls = s
            .controls
            .iter()
            .enumerate()
            .map(|(i, m)| hermitian_at(&format!("system.controls[{i}]"), m, s.dim))
            .collect::<CliResult<Vec<_>>>()?;
        if s.channel_names.len() != controls.len() {
            return Err(CliError::validation(
                "system.channel_names",
                format!(
                    "{} names for {} control channels",
                    s.channel_names.len(),
                    controls.len()
                ),
            ));
        }
        for (i, name) in s.channel_names.iter().enumerate() {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(CliError::validation(
                    format!("system.channel_names[{i}]"),
                    format!("{name:?} must be non-empty ASCII letters, digits or '_'"),
                ));
            }
            if s.channel_names[..i].contains(name) {
                return Err(CliError::validation(
                    format!("system.channel_names[{i}]"),
                    format!("duplicate name {name:?}"),
                ));
            }
        }
        let system =
            ControlSystem::new(drift, controls, s.channel_names.clone()).map_err(|e| CliError::at("system", e))?;

        let initial_state = density_at("initial_state", &self.initial_state, s.dim)?;
        let target_state = density_at("target_state", &self.target_state, s.dim)?;
        let optimizer = self
            .optimizer
            .as_ref()
            .map(|o| validate_optimizer(o, system.num_controls()))
            .transpose()?;

        let mut formats = self.output.formats.clone();
        formats.sort();
        formats.dedup();
        Ok(ProblemConfig {
            system,
            initial_state,
            target_state,
            optimizer,
            output: OutputSettings {
                directory: self.output.directory.clone(),
                formats,
                emit_trajectory: self.output.emit_trajectory,
            },
        })
    }
}

pub fn validate_optimizer(o: &OptimizerDoc, channels: usize) -> CliResult<OptimizerConfig> {
    let cfg = OptimizerConfig {
        eta: o.eta,
        delta: o.delta,
        epsilon: o.epsilon,
        slices: o.slices,
        horizon: o.horizon,
        u_max: o.u_max,
        max_iterations: o.max_iterations,
        init_controls: o.init_controls.clone(),
        gradient: match o.gradient {
            GradientDoc::FiniteDifference => GradientBackend::FiniteDifference,
            GradientDoc::ClosedForm => GradientBackend::ClosedForm,
        },
        fd_step: o.fd_step,
        propagator: match o.propagator {
            PropagatorDoc::OrderedProduct => PropagatorForm::OrderedProduct,
            PropagatorDoc::SummedExponent => PropagatorForm::SummedExponent,
        },
        execution: Execution::default(),
    };
    cfg.validate().map_err(|e| CliError::at("optimizer", e))?;
    cfg.initial_schedule(channels)
        .map_err(|e| CliError::at("optimizer.init_controls", e))?;
    Ok(cfg)
}

/// Parses and validates a config document. `origin` names the source in
/// syntax errors.
pub fn parse_config_str(text: &str, origin: &str) -> CliResult<ProblemConfig> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.validate()
}

pub fn parse_config(path: &Path) -> CliResult<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}
