use std::path::{Path, PathBuf};

use log::{debug, info};
use qoc_core::controllability::system_closure;
use qoc_core::fidelity::{uhlmann_fidelity, GradientBackend};
use qoc_core::optimizer::{cost_functional, solve};
use qoc_core::propagation::PropagatorSet;
use qoc_core::ControlSchedule;

use crate::config::{parse_config, Format, ProblemConfig};
use crate::error::{CliError, CliResult};
use crate::report::{
    controls_table, float, state_doc, trajectory_table, ControllabilitySummary, OutputDir, SimulateSummary,
    SolveSummary, ValidationSummary,
};
use crate::svg::{Chart, Series};

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub max_iterations: Option<usize>,
    /// Reserved: every algorithm here is deterministic.
    pub seed: Option<u64>,
}

pub fn load(path: &Path, overrides: &Overrides) -> CliResult<ProblemConfig> {
    let mut cfg = parse_config(path)?;
    if let Some(out) = &overrides.out {
        cfg.output.directory = out.clone();
    }
    if let Some(formats) = &overrides.formats {
        let mut f = formats.clone();
        f.sort();
        f.dedup();
        cfg.output.formats = f;
    }
    if let Some(n) = overrides.max_iterations {
        if n == 0 {
            return Err(CliError::validation("--max-iter", "must be at least 1"));
        }
        if let Some(o) = cfg.optimizer.as_mut() {
            o.max_iterations = n;
        }
    }
    if let Some(seed) = overrides.seed {
        debug!("seed {seed} accepted but unused");
    }
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// `None` for commands that do not iterate.
    pub converged: Option<bool>,
    pub iterations: usize,
    pub final_fidelity: f64,
    pub final_cost: f64,
    pub manifest: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.converged {
            Some(false) => 2,
            _ => 0,
        }
    }
}

fn populations_chart(cfg: &ProblemConfig, traj: &qoc_core::propagation::StateTrajectory, horizon: f64) -> Chart {
    let n = cfg.system.dim();
    let slices = traj.states().len() - 1;
    Chart {
        title: "Populations".into(),
        x_label: "t".into(),
        y_label: "population".into(),
        log_y: false,
        series: (0..n)
            .map(|i| Series {
                label: format!("rho_{}{}", i + 1, i + 1),
                points: traj
                    .states()
                    .iter()
                    .enumerate()
                    .map(|(k, rho)| (k as f64 * horizon / slices as f64, rho.entry(i, i).re))
                    .collect(),
            })
            .collect(),
    }
}

pub fn run_solve(cfg: &ProblemConfig) -> CliResult<RunReport> {
    let opt = cfg.require_optimizer()?;
    let sol = solve(&cfg.initial_state, &cfg.target_state, &cfg.system, opt)?;
    info!(
        "{} after {} iterations, fidelity {:.6}",
        if sol.converged { "converged" } else { "not converged" },
        sol.iterations_used,
        sol.final_fidelity
    );

    let names = cfg.system.channel_names();
    let records = sol.log.records();
    let mut out = OutputDir::create(&cfg.output.directory)?;
    if cfg.output.wants(Format::Csv) {
        let mut header = vec!["iteration".to_string()];
        header.extend(names.iter().map(|n| format!("residual_{n}")));
        let rows: Vec<Vec<String>> = records
            .iter()
            .map(|r| {
                let mut row = vec![r.iteration.to_string()];
                row.extend(r.residuals.iter().copied().map(float));
                row
            })
            .collect();
        out.write_csv("residuals.csv", &header, &rows)?;

        let header = ["iteration", "fidelity", "cost_J"].map(String::from);
        let rows: Vec<Vec<String>> = records
            .iter()
            .map(|r| vec![r.iteration.to_string(), float(r.fidelity), float(r.cost)])
            .collect();
        out.write_csv("fidelity.csv", &header, &rows)?;

        let (header, rows) = controls_table(&sol.controls, names);
        out.write_csv("controls.csv", &header, &rows)?;

        if cfg.output.emit_trajectory {
            let (header, rows) = trajectory_table(&sol.trajectory, opt.horizon);
            out.write_csv("trajectory.csv", &header, &rows)?;
        }
    }
    if cfg.output.wants(Format::Svg) {
        let residuals = Chart {
            title: "Control residuals".into(),
            x_label: "iteration".into(),
            y_label: "max |u_new - u|".into(),
            log_y: true,
            series: names
                .iter()
                .enumerate()
                .map(|(c, n)| Series {
                    label: format!("u_{n}"),
                    points: records.iter().map(|r| (r.iteration as f64, r.residuals[c])).collect(),
                })
                .collect(),
        };
        out.write_text("fig_residuals.svg", &residuals.render())?;
        out.write_text(
            "fig_populations.svg",
            &populations_chart(cfg, &sol.trajectory, opt.horizon).render(),
        )?;
        let fidelity = Chart {
            title: "Fidelity".into(),
            x_label: "iteration".into(),
            y_label: "fidelity".into(),
            log_y: false,
            series: vec![Series {
                label: "F".into(),
                points: records.iter().map(|r| (r.iteration as f64, r.fidelity)).collect(),
            }],
        };
        out.write_text("fig_fidelity.svg", &fidelity.render())?;
    }
    if cfg.output.wants(Format::Json) {
        let (peak_iteration, peak_fidelity) =
            records
                .iter()
                .map(|r| (r.iteration, r.fidelity))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        out.write_summary("summary.json", |manifest| SolveSummary {
            command: "solve",
            converged: sol.converged,
            iterations: sol.iterations_used,
            final_fidelity: sol.final_fidelity,
            final_cost: sol.final_cost,
            peak_fidelity,
            peak_iteration,
            gradient_backend: match sol.gradient_backend {
                GradientBackend::FiniteDifference => "finite_difference",
                GradientBackend::ClosedForm => "closed_form",
            },
            closed_form_validation: sol.closed_form_validation.as_ref().map(|v| ValidationSummary {
                samples: v.samples,
                max_relative_error: v.max_relative_error,
                tolerance: v.tolerance,
                conforming: v.conforming,
            }),
            final_state: state_doc(sol.trajectory.final_state()),
            manifest,
        })?;
    }
    Ok(RunReport {
        converged: Some(sol.converged),
        iterations: sol.iterations_used,
        final_fidelity: sol.final_fidelity,
        final_cost: sol.final_cost,
        manifest: out.manifest(),
    })
}

pub fn run_check(cfg: &ProblemConfig) -> CliResult<ControllabilitySummary> {
    let r = system_closure(&cfg.system)?;
    let summary = ControllabilitySummary {
        dimension: r.dimension,
        target_dimension: r.target_dimension,
        controllable: r.controllable,
        basis_size: r.basis.len(),
        depth: r.depth,
        trace_removed: r.trace_removed,
    };
    let mut out = OutputDir::create(&cfg.output.directory)?;
    let json = serde_json::to_string_pretty(&summary).expect("summaries always serialize");
    out.write_text("controllability.json", &(json + "\n"))?;
    Ok(summary)
}

pub fn run_fidelity(cfg: &ProblemConfig) -> CliResult<f64> {
    Ok(uhlmann_fidelity(&cfg.initial_state, &cfg.target_state)?.value)
}

/// Reads a schedule in the layout written by `solve` (`slice, t, u_<name>...`).
pub fn read_controls(path: &Path, cfg: &ProblemConfig, horizon: f64) -> CliResult<ControlSchedule> {
    let field = path.display().to_string();
    let bad = |msg: String| CliError::validation(field.clone(), msg);
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => bad(format!("{other:?}")),
    })?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let columns = cfg
        .system
        .channel_names()
        .iter()
        .map(|n| {
            let want = format!("u_{n}");
            header
                .iter()
                .position(|h| h == want)
                .ok_or_else(|| bad(format!("missing column {want}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut values = vec![Vec::new(); columns.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        for (c, &col) in columns.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: {cell:?} is not a number", line + 1)))?;
            values[c].push(v);
        }
    }
    ControlSchedule::new(horizon, values).map_err(|e| CliError::at(field.clone(), e))
}

pub fn run_simulate(cfg: &ProblemConfig, controls_path: &Path) -> CliResult<RunReport> {
    let opt = cfg.require_optimizer()?;
    let controls = read_controls(controls_path, cfg, opt.horizon)?;
    if controls.slices() != opt.slices {
        return Err(CliError::validation(
            controls_path.display().to_string(),
            format!("{} rows, optimizer.slices = {}", controls.slices(), opt.slices),
        ));
    }
    let set = PropagatorSet::build(&cfg.system, &controls, opt.propagator, opt.execution)?;
    let traj = set.evolve(&cfg.initial_state)?;
    let final_fidelity = uhlmann_fidelity(traj.final_state(), &cfg.target_state)?.value;
    let final_cost = cost_functional(&traj, &controls, &cfg.target_state, opt.eta)?;

    let mut out = OutputDir::create(&cfg.output.directory)?;
    if cfg.output.wants(Format::Csv) {
        let (header, rows) = trajectory_table(&traj, opt.horizon);
        out.write_csv("trajectory.csv", &header, &rows)?;
    }
    if cfg.output.wants(Format::Svg) {
        out.write_text(
            "fig_populations.svg",
            &populations_chart(cfg, &traj, opt.horizon).render(),
        )?;
    }
    if cfg.output.wants(Format::Json) {
        out.write_summary("summary.json", |manifest| SimulateSummary {
            command: "simulate",
            slices: controls.slices(),
            final_fidelity,
            final_cost,
            final_state: state_doc(traj.final_state()),
            manifest,
        })?;
    }
    Ok(RunReport {
        converged: None,
        iterations: 0,
        final_fidelity,
        final_cost,
        manifest: out.manifest(),
    })
}
