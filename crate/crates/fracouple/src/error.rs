use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hurst parameter {0} outside (1/2, 1)")]
    Hurst(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("circulant embedding has eigenvalue {value:e} below tolerance (max {max:e}); refine the grid")]
    Embedding { value: f64, max: f64 },
    #[error("insufficient past coverage: need {needed} time units before {at}, have {have}")]
    Coverage { needed: f64, have: f64, at: f64 },
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("|rho| increased from {before:e} to {after:e} at step {step}")]
    RhoNotMonotone { step: usize, before: f64, after: f64 },
    #[error("log Girsanov density {0:e} exceeds the overflow guard")]
    DensityOverflow(f64),
    #[error("Girsanov energy {energy} exceeds budget {budget}")]
    GirsanovBudget { energy: f64, budget: f64 },
    #[error("h inverse failed to converge at y = {0:?}")]
    HInverse(Vec<f64>),
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Run {
        context: String,
        /// Serialized coupling state written for reproduction, if any.
        dump: Option<std::path::PathBuf>,
        #[source]
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
