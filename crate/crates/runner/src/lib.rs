//! Experiment runner for the `ram-core` samplers: TOML configs, chain
//! drivers, run directories and summaries.

pub mod artifact;
pub mod config;
pub mod experiments;
pub mod modes;
pub mod record;
pub mod report;
pub mod tune;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Core(#[from] ram_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("mode file: {0}")]
    ModeFile(String),
    #[error("samples file: {0}")]
    SamplesFile(String),
}
