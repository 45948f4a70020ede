//! Experiment runner behind the `qexp` binary: config parsing, the four subcommands and
//! their CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_classify, run_fit, run_gatecount, run_price, Command};
pub use config::{
    Benchmark, ClassifyConfig, ExperimentConfig, FitConfig, FitTarget, GatecountConfig, LambdaRule, PriceConfig,
};
pub use output::{OutputDir, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

impl From<reupload::ReuploadError> for CliError {
    fn from(e: reupload::ReuploadError) -> Self {
        use reupload::ReuploadError as E;
        match e {
            E::Sim(_) | E::Optim(_) => CliError::Numerical(e.to_string()),
            E::Io(e) => CliError::Io(e),
            E::Csv(e) => CliError::Csv(e),
            E::Json(e) => CliError::Json(e),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<iqae::IqaeError> for CliError {
    fn from(e: iqae::IqaeError) -> Self {
        match e {
            iqae::IqaeError::BadAlpha(_) | iqae::IqaeError::FirstRoundPower(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<unary::UnaryError> for CliError {
    fn from(e: unary::UnaryError) -> Self {
        match e {
            unary::UnaryError::TooFewBins(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<market::MarketError> for CliError {
    fn from(e: market::MarketError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<qsim::SimError> for CliError {
    fn from(e: qsim::SimError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
