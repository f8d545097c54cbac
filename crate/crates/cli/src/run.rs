//! Experiment orchestration: prep, sweep expansion, dynamics and artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use quench_core::{init_random, optimize_infidelity, RbmParameters64, RunStatus, Snapshot64, SpinBasis, Trajectory64};
use serde_json::json;

use crate::config::{ExperimentConfig, Format, SolverName};
use crate::error::{CliError, CliResult, EXIT_DIVERGED, EXIT_NUMERIC, EXIT_OK};
use crate::output::{emit_trajectory_csv, json_f64, write_prep_history, EventLog};

pub const CONFIG_ECHO: &str = "config.toml";
pub const EVENTS: &str = "events.jsonl";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const PREP_HISTORY: &str = "prep_history.csv";
pub const PREP_SNAPSHOT: &str = "prep.snapshot";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// One sweep point: a self-contained config with the sweep removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub label: String,
    pub config: ExperimentConfig,
}

/// Expands `cfg.sweep` into the product quench_strength × dt × solver.
/// Without a sweep this is the single configured point.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let s = &cfg.sweep;
    let strengths = if s.quench_strength.is_empty() {
        vec![None]
    } else {
        s.quench_strength.iter().copied().map(Some).collect()
    };
    let dts = if s.dt.is_empty() {
        vec![None]
    } else {
        s.dt.iter().copied().map(Some).collect()
    };
    let mut solvers: Vec<Option<(SolverName, f64)>> = s
        .epsilon
        .iter()
        .map(|&e| Some((SolverName::Regularization, e)))
        .chain(s.zeta.iter().map(|&z| Some((SolverName::Diagonalization, z))))
        .collect();
    if solvers.is_empty() {
        solvers.push(None);
    }

    let mut points = Vec::new();
    for q in &strengths {
        for dt in &dts {
            for solver in &solvers {
                let mut c = cfg.clone();
                c.sweep = Default::default();
                let mut label = Vec::new();
                if let Some(q) = q {
                    c.model.quench_scale = *q;
                    label.push(format!("q={q}"));
                }
                if let Some(dt) = dt {
                    c.dynamics.dt = *dt;
                    label.push(format!("dt={dt}"));
                }
                match solver {
                    Some((SolverName::Regularization, e)) => {
                        c.dynamics.solver.kind = SolverName::Regularization;
                        c.dynamics.solver.epsilon = *e;
                        label.push(format!("epsilon={e:e}"));
                    }
                    Some((_, z)) => {
                        c.dynamics.solver.kind = SolverName::Diagonalization;
                        c.dynamics.solver.zeta = *z;
                        label.push(format!("zeta={z:e}"));
                    }
                    None => {}
                }
                points.push(SweepPoint {
                    index: points.len(),
                    label: if label.is_empty() { "base".into() } else { label.join(",") },
                    config: c,
                });
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub index: usize,
    pub label: String,
    pub directory: PathBuf,
    pub status: RunStatus,
    pub terminal_step: usize,
    pub terminal_time: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub prep_infidelity: Option<f64>,
    pub points: Vec<PointOutcome>,
}

impl RunSummary {
    /// 0 when every point ended ok, 2 if any hit a numeric error, else 3 if
    /// any diverged.
    pub fn exit_code(&self) -> i32 {
        if self.points.iter().any(|p| p.status == RunStatus::NumericError) {
            EXIT_NUMERIC
        } else if self.points.iter().any(|p| p.status == RunStatus::Diverged) {
            EXIT_DIVERGED
        } else {
            EXIT_OK
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepOutcome {
    pub parameters: RbmParameters64,
    /// `None` when the state did not come from an optimization.
    pub final_infidelity: Option<f64>,
    pub iterations_used: usize,
    pub source: &'static str,
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Produces the initial RBM state: a stored snapshot, an infidelity-optimized
/// approximation of the pre-quench ground state, or a random start. Writes the
/// prep history and snapshot into `dir` when preparation runs.
pub fn prepare_state(cfg: &ExperimentConfig, dir: &Path) -> CliResult<PrepOutcome> {
    let n = cfg.model.n_sites;
    let m = cfg.n_hidden();
    let vb = cfg.rbm.visible_biases;
    if let Some(path) = &cfg.rbm.snapshot {
        let snap = Snapshot64::read(path)?;
        if snap.n_visible != n || snap.n_hidden != m {
            return Err(CliError::Config(format!(
                "rbm.snapshot {} has shape N={} M={}, config needs N={n} M={m}",
                path.display(),
                snap.n_visible,
                snap.n_hidden
            )));
        }
        return Ok(PrepOutcome {
            parameters: snap.to_parameters(vb)?,
            final_infidelity: None,
            iterations_used: 0,
            source: "snapshot",
        });
    }
    if !cfg.prep.enabled {
        let p = init_random(n, m, cfg.rbm.init_scale, cfg.rbm.seed)?;
        return Ok(PrepOutcome {
            parameters: if vb { p } else { p.without_visible_bias() },
            final_infidelity: None,
            iterations_used: 0,
            source: "random",
        });
    }
    let pc = cfg.prep_config();
    let basis = SpinBasis::new(n)?;
    let (_, ground) = cfg.pre_hamiltonian()?.ground_state(&basis)?;
    let result = optimize_infidelity(n, m, vb, &ground, &basis, &pc)?;
    write_prep_history(&result.history, &dir.join(PREP_HISTORY))?;
    Snapshot64::from_parameters(&result.parameters, pc.seed, 0, 0.0).write(&dir.join(PREP_SNAPSHOT))?;
    Ok(PrepOutcome {
        parameters: result.parameters,
        final_infidelity: Some(result.final_infidelity),
        iterations_used: result.iterations_used,
        source: "prep",
    })
}

/// Runs one sweep point from `p0`, writing its artifacts into `dir`.
pub fn run_point(cfg: &ExperimentConfig, p0: &RbmParameters64, dir: &Path) -> CliResult<Trajectory64> {
    create_dir(dir)?;
    write_text(&dir.join(CONFIG_ECHO), &cfg.to_toml())?;
    let quench = cfg.quench()?;
    let dcfg = cfg.dynamics_config()?;
    let names: Vec<String> = dcfg.observables.iter().map(|(n, _)| n.clone()).collect();

    let stride = cfg.dynamics.snapshot_stride;
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if stride.is_some() {
        create_dir(&snap_dir)?;
    }
    let mut snap_error = None;
    let dt = cfg.dynamics.dt;
    let seed = cfg.rbm.seed;
    let traj = quench_core::run_dynamics_observed(p0, &quench, &dcfg, |step, p| {
        let Some(k) = stride else { return };
        if step % k != 0 || snap_error.is_some() {
            return;
        }
        let path = snap_dir.join(format!("step-{step:07}.snapshot"));
        if let Err(e) = Snapshot64::from_parameters(p, seed, step, step as f64 * dt).write(&path) {
            snap_error = Some(e);
        }
    })?;
    if let Some(e) = snap_error {
        return Err(e.into());
    }
    if cfg.output.formats.contains(&Format::Csv) {
        emit_trajectory_csv(&traj.records, &names, &dir.join(TRAJECTORY))?;
    }
    Ok(traj)
}

/// Prep once, then dynamics for every sweep point. Numeric failures inside a
/// run are recorded in its trajectory; `Err` is reserved for configuration,
/// I/O and state-preparation failures.
pub fn run_experiment(cfg: &ExperimentConfig, output: &Path) -> CliResult<RunSummary> {
    create_dir(output)?;
    write_text(&output.join(CONFIG_ECHO), &cfg.to_toml())?;
    let mut log = if cfg.output.formats.contains(&Format::Jsonl) {
        EventLog::create(&output.join(EVENTS))?
    } else {
        EventLog::disabled()
    };
    log.emit("config", json!({ "config": serde_json::to_value(cfg).unwrap_or_default() }))?;

    let prep = match prepare_state(cfg, output) {
        Ok(p) => p,
        Err(e) => {
            log.emit("error", json!({ "stage": "prep", "message": e.to_string() }))?;
            return Err(e);
        }
    };
    log.emit(
        "prep",
        json!({
            "source": prep.source,
            "final_infidelity": prep.final_infidelity.map(json_f64),
            "iterations_used": prep.iterations_used,
            "n_params": prep.parameters.n_params(),
        }),
    )?;

    let points = sweep_points(cfg);
    let single = points.len() == 1;
    let mut outcomes = Vec::with_capacity(points.len());
    for point in &points {
        let dir = if single {
            output.to_path_buf()
        } else {
            output.join(format!("point-{:03}", point.index))
        };
        log.emit(
            "run_start",
            json!({ "point": point.index, "label": point.label, "directory": dir.display().to_string() }),
        )?;
        let traj = run_point(&point.config, &prep.parameters, &dir)?;
        let terminal = traj.records.last();
        let outcome = PointOutcome {
            index: point.index,
            label: point.label.clone(),
            directory: dir,
            status: traj.status(),
            terminal_step: traj.terminal_step(),
            terminal_time: terminal.map(|r| r.time).unwrap_or(0.0),
            message: traj.message.clone(),
        };
        log.emit(
            "run_end",
            json!({
                "point": outcome.index,
                "label": outcome.label,
                "status": outcome.status.as_str(),
                "terminal_step": outcome.terminal_step,
                "terminal_time": json_f64(outcome.terminal_time),
                "records": traj.records.len(),
                "message": outcome.message,
            }),
        )?;
        outcomes.push(outcome);
    }
    let summary = RunSummary {
        output: output.to_path_buf(),
        prep_infidelity: prep.final_infidelity,
        points: outcomes,
    };
    log.emit("exit", json!({ "code": summary.exit_code() }))?;
    Ok(summary)
}
