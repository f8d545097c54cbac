//! Configuration-driven quench experiments on top of `quench-core`.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ExperimentConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_DIVERGED, EXIT_NUMERIC, EXIT_OK};
pub use output::{emit_trajectory_csv, parse_trajectory_csv};
pub use run::{prepare_state, run_experiment, sweep_points, RunSummary};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "QUENCH_OUTPUT_ROOT";

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Output directory: the explicit flag, else `output.directory`, else
/// `<root>/<config file stem>`.
pub fn resolve_output(flag: Option<&Path>, cfg: &ExperimentConfig, root: &Path, config_path: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output.directory {
        return p.clone();
    }
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    root.join(stem)
}
