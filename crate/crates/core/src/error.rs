use thiserror::Error;

pub type Result<T> = std::result::Result<T, DiracError>;

#[derive(Debug, Error)]
pub enum DiracError {
    #[error("index {index} out of range (expected < {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("interaction singularity a^2 = 1 at site {site} (a^2 = {a_squared})")]
    Singular { site: usize, a_squared: f64 },

    #[error("non-finite value at site {site}{}", step.map(|s| format!(" after step {s}")).unwrap_or_default())]
    NonFinite { site: usize, step: Option<usize> },

    #[error("commutant holds no antisymmetric square root of -I for index {0}")]
    NoComplexStructure(usize),

    #[error("plane-wave projector annihilates every seed vector")]
    DegenerateProjector,

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DiracError {
    /// Process exit code for the CLI: 1 validation, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            DiracError::Singular { .. }
            | DiracError::NonFinite { .. }
            | DiracError::NoComplexStructure(_)
            | DiracError::DegenerateProjector => 2,
            _ => 1,
        }
    }
}
