use thiserror::Error;

pub type Result<T, E = CurrentsError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurrentsError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid degree {degree}: {reason}")]
    InvalidDegree { degree: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chains or integrands belong to different complexes")]
    ComplexMismatch,

    #[error("no ({}-cells) available to fill a degree-{degree} chain", degree + 1)]
    NoFillingSpace { degree: usize },

    #[error("capacity exceeded in {stage}: {states} states > limit {limit}")]
    Capacity {
        stage: String,
        states: String,
        limit: String,
    },

    #[error("chain is not a cycle (boundary mass {boundary_mass})")]
    NotACycle { boundary_mass: f64 },

    #[error("cycle is not null-homologous in the complex")]
    NotNullHomologous,

    #[error(
        "flat norm {flat_norm} is strictly below the minimal filling mass {filling_mass}; \
         the cycle is not in the small flat-norm regime"
    )]
    FillingObstruction { flat_norm: f64, filling_mass: f64 },

    #[error("boundaries differ: the chains cannot be homologous")]
    BoundaryMismatch,

    #[error("chain is not homologous to the reference chain")]
    NotHomologous,

    #[error("level {t} coincides with a vertex value; perturb the level")]
    NonRegularLevel { t: f64 },

    #[error("no regular level in the window ({a}, {b})")]
    EmptyWindow { a: f64, b: f64 },

    #[error("complex is not cone-complete over the chain: {0}")]
    NotConeComplete(String),

    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),

    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("not a calibration: {0}")]
    NotACalibration(String),

    #[error("displacement not on the amplitude grid: {0}")]
    Quantization(String),

    #[error("nonzero displacement {value} at boundary node {node}")]
    BoundaryDisplacement { node: usize, value: f64 },

    #[error("reference chain is not critical: first variation norm {gradient_norm:e}")]
    NotCritical { gradient_norm: f64, gradient: Vec<f64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing stage `{0}` in results bundle")]
    AbsentStage(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CurrentsError {
    fn from(err: std::io::Error) -> Self {
        CurrentsError::Io(err.to_string())
    }
}
