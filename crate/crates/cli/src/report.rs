//! Output directory, CSV tables and JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use qoc_core::propagation::StateTrajectory;
use qoc_core::{ControlSchedule, DensityMatrix};
use serde::Serialize;

use crate::config::{matrix_doc, MatrixDoc};
use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip any f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects every file written so the summary can list them.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let into_io = |e: csv::Error| CliError::io(&self.root.join(name), e.into());
        w.write_record(header).map_err(into_io)?;
        for row in rows {
            w.write_record(row).map_err(into_io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::io(&self.root.join(name), e.into_error()))?;
        let text = String::from_utf8(bytes).expect("csv output is built from UTF-8 strings");
        self.write_text(name, &text)
    }

    /// Writes `value` as pretty JSON, listing itself in the manifest first.
    pub fn write_summary<T: Serialize>(&mut self, name: &str, build: impl FnOnce(Vec<String>) -> T) -> CliResult<()> {
        let mut manifest = self.written.clone();
        manifest.push(name.to_string());
        let json = serde_json::to_string_pretty(&build(manifest)).expect("summaries always serialize");
        self.write_text(name, &(json + "\n"))
    }

    pub fn manifest(&self) -> Vec<PathBuf> {
        self.written.iter().map(|n| self.root.join(n)).collect()
    }
}

fn element_label(n: usize, i: usize, j: usize) -> String {
    if n < 10 {
        format!("rho_{}{}", i + 1, j + 1)
    } else {
        format!("rho_{}_{}", i + 1, j + 1)
    }
}

/// Diagonal real parts, then each upper off-diagonal element as `_re`, `_im`.
pub fn trajectory_table(traj: &StateTrajectory, horizon: f64) -> (Vec<String>, Vec<Vec<String>>) {
    let n = traj.initial_state().dim();
    let slices = traj.states().len() - 1;
    let mut header = vec!["slice".to_string(), "t".to_string()];
    header.extend((0..n).map(|i| format!("{}_re", element_label(n, i, i))));
    for i in 0..n {
        for j in i + 1..n {
            header.push(format!("{}_re", element_label(n, i, j)));
            header.push(format!("{}_im", element_label(n, i, j)));
        }
    }
    let rows = traj
        .states()
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let mut row = vec![k.to_string(), float(k as f64 * horizon / slices as f64)];
            row.extend((0..n).map(|i| float(rho.entry(i, i).re)));
            for i in 0..n {
                for j in i + 1..n {
                    let z = rho.entry(i, j);
                    row.push(float(z.re));
                    row.push(float(z.im));
                }
            }
            row
        })
        .collect();
    (header, rows)
}

/// One row per slice: index, slice start time, one column per channel.
pub fn controls_table(controls: &ControlSchedule, names: &[String]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["slice".to_string(), "t".to_string()];
    header.extend(names.iter().map(|n| format!("u_{n}")));
    let dt = controls.slice_duration();
    let rows = (0..controls.slices())
        .map(|k| {
            let mut row = vec![k.to_string(), float(k as f64 * dt)];
            row.extend(controls.control_at(k).into_iter().map(float));
            row
        })
        .collect();
    (header, rows)
}

pub fn state_doc(rho: &DensityMatrix) -> MatrixDoc {
    matrix_doc(rho.as_matrix())
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary {
    pub samples: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub conforming: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub command: &'static str,
    pub converged: bool,
    pub iterations: usize,
    pub final_fidelity: f64,
    pub final_cost: f64,
    pub peak_fidelity: f64,
    pub peak_iteration: usize,
    pub gradient_backend: &'static str,
    pub closed_form_validation: Option<ValidationSummary>,
    pub final_state: MatrixDoc,
    pub manifest: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub command: &'static str,
    pub slices: usize,
    pub final_fidelity: f64,
    pub final_cost: f64,
    pub final_state: MatrixDoc,
    pub manifest: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ControllabilitySummary {
    pub dimension: usize,
    pub target_dimension: usize,
    pub controllable: bool,
    pub basis_size: usize,
    pub depth: usize,
    pub trace_removed: bool,
}
