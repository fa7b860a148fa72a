use thiserror::Error;

pub type Result<T, E = OmitError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OmitError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column '{column}': cannot parse '{value}'")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': missing value (only treatments may be missing)")]
    MissingValue { row: usize, column: String },

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("every treatment is missing; at least one observed treatment is required")]
    AllTreatmentsMissing,

    #[error("constant column '{0}' cannot be standardized")]
    ConstantColumn(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need at least one observed treated and one observed control unit ({treated} treated, {control} control)")]
    EmptyArm { treated: usize, control: usize },

    #[error("singular design: dependent columns {columns:?}")]
    SingularDesign { columns: Vec<usize> },

    #[error("complete separation: the linear predictor diverges for every {class} unit while the likelihood is still increasing")]
    Separation { class: &'static str },

    #[error("probability {0} outside (0, 1)")]
    ProbabilityDomain(f64),

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("correlation not positive definite: rho = {rho} with d = {d}")]
    CorrelationNotPositiveDefinite { rho: f64, d: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl OmitError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        OmitError::Io {
            path: path.into(),
            source,
        }
    }
}
