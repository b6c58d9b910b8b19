use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    InitialFrequency,
    Minimization,
    LinearSolve,
    Covariance,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::InitialFrequency => "initial frequency",
            Stage::Minimization => "minimization",
            Stage::LinearSolve => "linear solve",
            Stage::Covariance => "covariance",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spline spec: {0}")]
    InvalidSpline(String),

    #[error("invalid harmonic spec: {0}")]
    InvalidHarmonic(String),

    #[error("x = {x} lies outside the breakpoint span [{lower}, {upper}]")]
    OutOfDomain { x: f64, lower: f64, upper: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "basis matrix ({rows}x{cols}) is rank deficient: numerical rank {rank}, \
         smallest singular value {smallest:e} below threshold {threshold:e}"
    )]
    RankDeficient {
        rows: usize,
        cols: usize,
        rank: usize,
        smallest: f64,
        threshold: f64,
    },

    #[error("insufficient data: {n} samples for {n_df} parameters")]
    InsufficientData { n: usize, n_df: usize },

    #[error(
        "sample locations are not uniformly spaced (relative deviation {deviation:e}); \
         resample onto a uniform grid first"
    )]
    NonUniformSampling { deviation: f64 },

    #[error("no periodic component found: residual spectrum is flat")]
    NoPeriodicity,

    #[error("no interior minimum of the cost in [{lower}, {upper}]")]
    NoInteriorMinimum { lower: f64, upper: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at omega = {omega}: {source}")]
    AtOmega { omega: f64, source: Box<Error> },

    #[error("{stage} stage: {source}")]
    Stage { stage: Stage, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_omega(self, omega: f64) -> Self {
        Error::AtOmega {
            omega,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage and omega annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtOmega { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
