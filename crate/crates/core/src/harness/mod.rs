//! Scenario configuration, the event loop and CSV output.

pub mod config;
mod ini;
pub mod metrics;
pub mod runner;
pub mod scenarios;

use thiserror::Error;

use crate::ccn::CcnError;
use crate::fel::FelError;
use crate::mobility::MobilityError;
use crate::sim::SimError;
use crate::topology::TopologyError;
use crate::workload::WorkloadError;

pub use config::{ArmSpec, ScenarioConfig};
pub use metrics::{read_metrics, write_csv, write_metrics, MetricsRow, MetricsTable};
pub use runner::{run_arm, run_scenario, run_scenario_seed, RunOutput, Simulation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Syntax {
            line,
            message: message.into(),
        }
    }

    pub fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Failure while a run is in progress.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ccn(#[from] CcnError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Fel(#[from] FelError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("runtime error: {0}")]
    Runtime(#[from] RunError),
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}
