//! Configuration files, presets and the drivers behind the command line.

mod config;
mod design;
mod kv;
mod scenario;

pub use config::{
    preset, preset_fwhm_fraction, GridChoice, Outputs, RunConfig, SimOverrides, PRESETS,
    PRESET_COUPLING, PRESET_LENGTH, PRESET_WINDOW,
};
pub use design::{design_inputs, design_summary, run_design};
pub use kv::KvDoc;
pub use scenario::{
    echo_config, preset_chirp_products, run_scenario, run_sweep, scenario_summary, simulate, sweep,
    write_field, write_spin, Scenario, ScenarioMetrics, Spacing, SweepAxis, SweepRow, SweepSpec,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}", located(.file, *.line, .message))]
    Config {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid parameters: {0}")]
    Model(#[from] ModelError),
    #[error("design: {0}")]
    Design(String),
    #[error("solver: {0}")]
    Solver(SolverError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn located(file: &str, line: usize, message: &str) -> String {
    let file = if file.is_empty() {
        "command line"
    } else {
        file
    };
    if line == 0 {
        format!("{file}: {message}")
    } else {
        format!("{file}:{line}: {message}")
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Model(m) => CliError::Model(m),
            SolverError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    /// 1 for anything the user can fix in the invocation or config, 2 when
    /// a run aborted.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Config { .. }
            | CliError::Model(_)
            | CliError::Design(_) => 1,
            CliError::Solver(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) | CliError::Csv(_) => 2,
        }
    }
}

/// Fixed 12-significant-digit rendering used in every output file.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.11e}")
    }
}

/// Ordered flat key-value document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn num(&mut self, key: &str, v: f64) {
        self.text(key, &fmt_num(v));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.text(key, &v.to_string());
    }

    pub fn text(&mut self, key: &str, v: &str) {
        self.entries.push((key.to_string(), v.to_string()));
    }

    pub fn opt_num(&mut self, key: &str, v: Option<f64>) {
        match v {
            Some(v) => self.num(key, v),
            None => self.text(key, "none"),
        }
    }

    pub fn opt_bool(&mut self, key: &str, v: Option<bool>) {
        match v {
            Some(b) => self.text(key, if b { "true" } else { "false" }),
            None => self.text(key, "none"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
