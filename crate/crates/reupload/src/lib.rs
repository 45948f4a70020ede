//! Data re-uploading on a single qubit or a small register: Fourier, UAT and classifier
//! gate families, regression and classification losses, datasets and training.

pub mod data;
pub mod labels;
pub mod loss;
pub mod model;
pub mod targets;
pub mod train;

pub use data::{make_dataset, HYPERSPHERE_R2, LabeledDataset, Part, Problem, Split, PROBLEMS};
pub use labels::LabelSet;
pub use loss::{
    accuracy, best_lambda, classify, fidelities, fidelity_cost, guesses, parameter_shift, weighted_fidelity_cost,
    xy_benchmark_loss, z_benchmark_loss, Cost, Objective, Readout,
};
pub use model::{cz_pairs, uat_recursion, Angle, Axis, Entangling, Family, Initial, Op, Program, ReuploadModel};
pub use targets::{sample_inputs, ComplexTarget, Normalized, Target, TARGETS};
pub use train::{random_start, train, Method, TrainOptions, TrainOutcome};

#[derive(Debug, thiserror::Error)]
pub enum ReuploadError {
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("expected {expected}-dimensional input, got {got}")]
    DataDim { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("labels: {0}")]
    Labels(String),
    #[error("threshold {0} outside [0, 1]")]
    Lambda(f64),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error(transparent)]
    Sim(#[from] qsim::SimError),
    #[error(transparent)]
    Optim(#[from] optim::OptimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ReuploadError>;
