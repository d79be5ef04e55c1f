//! Configuration, batch commands and output files.
//!
//! A run reads a [`RunConfig`] from TOML, executes one [`Command`] and
//! renders CSV tables or a JSON grid. Every file starts with the resolved
//! configuration, program version, seed, thread count and node counts, and
//! reruns with the same configuration, seed and threads are byte-identical
//! (wall times are only written when `record_timing` is set).

mod commands;
mod config;

use std::path::{Path, PathBuf};

pub use commands::{
    execute, midpoint_grid, observables, poincare, quantum_reference, wigner, Command, ObservableRow,
    ObservablesReport, PoincareReport, QuantumReference, RunOutput,
};
pub use config::{
    AxisConfig, FdConfig, GridConfig, Method, ModelConfig, NelsonRule, PoincareConfig, QuantumConfig, RunConfig,
    SpectrumConfig, ThetaRange, WignerConfig,
};

use crate::error::Result;

/// Path of a companion file: `<dir>/<stem>_<suffix>.csv`.
pub fn companion_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Writes the primary file to `path` and companions beside it; returns
/// every path written.
pub fn write_output(output: &RunOutput, path: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, &output.primary)?;
    let mut written = vec![path.to_path_buf()];
    for (suffix, contents) in &output.companions {
        let p = companion_path(path, suffix);
        std::fs::write(&p, contents)?;
        written.push(p);
    }
    Ok(written)
}
