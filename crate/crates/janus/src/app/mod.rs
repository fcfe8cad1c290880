//! The deployable face: configuration, the monitoring daemon, scenario
//! simulation and trace replay.

pub mod config;
pub mod monitor;
pub mod replay;
pub mod report;
pub mod scenario;

pub use config::{parse_config, render_config, AppConfig, ConfigError};
pub use monitor::{Monitor, TickSummary};
pub use replay::{replay, ReplayInput};
pub use report::{ScenarioReport, ScenarioTraces};
pub use scenario::{
    constant_series, gaussian_series, ramp_series, random_walk_series, simulate, ScenarioKind,
    ScenarioSpec,
};

use thiserror::Error;

use crate::behavior::BehaviorError;
use crate::model::ModelError;
use crate::rrvar::{RegistryError, TraceError};
use crate::trust::TrustError;
use crate::wire::WireError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{channel} trace: {source}")]
    Trace {
        channel: &'static str,
        #[source]
        source: TraceError,
    },
    #[error("{channel}: {source}")]
    UiTrace {
        channel: &'static str,
        #[source]
        source: BehaviorError,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    /// CLI exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            _ => 2,
        }
    }
}
