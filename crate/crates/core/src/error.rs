use thiserror::Error;

/// Errors raised by the ring dynamics, the density reconstruction and the
/// reference solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FtlError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid weight profile: {0}")]
    InvalidWeights(String),

    #[error("invalid velocity model: {0}")]
    InvalidModel(String),

    #[error("argument outside the admissible domain: {0}")]
    Domain(String),

    #[error("invalid ring state: {0}")]
    InvalidState(String),

    #[error("collision at vehicle {index}: gap/ell = {gap_over_ell}")]
    Collision { index: usize, gap_over_ell: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("vacuum in initial profile: {0}")]
    Vacuum(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("step {step} at t = {t}: {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<FtlError>,
    },
}

impl FtlError {
    /// The innermost error, with step context stripped.
    pub fn root(&self) -> &FtlError {
        match self {
            FtlError::Step { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_collision(&self) -> bool {
        matches!(self.root(), FtlError::Collision { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            FtlError::Config(_)
                | FtlError::InvalidWeights(_)
                | FtlError::InvalidModel(_)
                | FtlError::UnknownStrategy { .. }
                | FtlError::Vacuum(_)
                | FtlError::Usage(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FtlError>;
