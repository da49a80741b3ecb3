use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("support violation at node {index}: f > 0 where g <= 0")]
    SupportViolation { index: usize },

    #[error("negative value {value} at node {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("zero mass: cannot normalize a function with integral {0}")]
    ZeroMass(f64),

    #[error("kernel domain violation at x = {x}, theta = {theta}: {reason}")]
    KernelDomain { x: f64, theta: f64, reason: String },

    #[error("kernel domain violation at entry ({i}, {j}): {source}")]
    KernelMatrixEntry {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mixture vanishes on support of f at x-node {index}")]
    MixtureVanishes { index: usize },

    #[error("zero likelihood at observation {index}")]
    ZeroLikelihood { index: usize },

    #[error("mixture vanished at Monte Carlo sample {index} (x = {x})")]
    MixtureVanishedAtSample { index: usize, x: f64 },

    #[error("degenerate kernel column {index} (mass {mass})")]
    DegenerateColumn { index: usize, mass: f64 },

    #[error("shift too small: shifted target is {value} at x-node {index}")]
    ShiftTooSmall { index: usize, value: f64 },

    #[error("degenerate sample: zero spread")]
    DegenerateSample,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
