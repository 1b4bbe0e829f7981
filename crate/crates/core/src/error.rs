use std::io;

use thiserror::Error;

/// Errors raised across the encode, predict, synthesize and decode stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid sizing: {0}")]
    Sizing(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "insufficient padding: {fraction:.3e} of the squared-pump energy lies in the outer border \
         (limit {limit:.0e}); pad the pump grid before computing its self-convolution"
    )]
    Wraparound { fraction: f64, limit: f64 },

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("signal mask is empty")]
    EmptySignalMask,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("kernel dimension {dim} exceeds the exact-decomposition limit {max}; use the convolutional sampler")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
