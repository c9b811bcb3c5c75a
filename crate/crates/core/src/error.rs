//! Error type shared by every module, with a stable stage → exit-code map
//! for the command-line interface.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure classes of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Filesystem failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text input (edge list, features, labels, config, report).
    #[error("parse error in {path}, line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Structurally invalid graph input (out-of-range vertex, bad pair).
    #[error("invalid graph: {0}")]
    Graph(String),

    /// Structurally invalid simplicial complex or complex-building request.
    #[error("invalid complex: {0}")]
    Complex(String),

    /// A dimension index outside `0..=complex.dimension()`.
    #[error("dimension {p} out of range for a complex of dimension {dim}")]
    DimensionOutOfRange { p: usize, dim: usize },

    /// The dense symmetric eigensolver did not converge.
    #[error("eigensolver failed to converge on a {size}x{size} matrix")]
    Eigensolver { size: usize },

    /// Incompatible tensor/matrix shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A weight cache or checkpoint that does not match its consumer.
    #[error("cache mismatch: {0}")]
    Cache(String),

    /// Torsion-weight evaluation failed for one specific pair.
    #[error("torsion weight for pair ({x}, {y}) failed: {source}")]
    Weight {
        x: u32,
        y: u32,
        #[source]
        source: Box<Error>,
    },

    /// Dataset construction failure (splits, sampling, attachment).
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Training produced a non-finite loss.
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    /// Backpropagation produced a non-finite gradient.
    #[error("non-finite gradient in {layer}")]
    NonFiniteGradient { layer: String },

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Metric preconditions violated (single-class input, empty batch).
    #[error("metric error: {0}")]
    Metric(String),

    /// A pipeline stage failed inside the experiment harness.
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the experiment stage it occurred in. Nested stage
    /// wrappers are collapsed so the outermost stage wins exactly once.
    pub fn in_stage(self, stage: &'static str) -> Error {
        match self {
            Error::Stage { source, .. } => Error::Stage { stage, source },
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The pipeline stage this error is attributed to.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Graph(_) | Error::Complex(_) | Error::DimensionOutOfRange { .. } => "complex",
            Error::Eigensolver { .. } => "spectral",
            Error::Cache(_) | Error::Weight { .. } => "weights",
            Error::Dataset(_) => "datasets",
            Error::Shape(_)
            | Error::Divergence { .. }
            | Error::NonFiniteGradient { .. } => "nn",
            Error::Config(_) => "config",
            Error::Metric(_) => "metrics",
            Error::Stage { stage, .. } => stage,
        }
    }

    /// Stable nonzero process exit code, one per failure class.
    pub fn exit_code(&self) -> i32 {
        match self.stage() {
            "config" => 2,
            "io" => 3,
            "parse" => 4,
            "complex" => 5,
            "spectral" => 6,
            "weights" => 7,
            "datasets" => 8,
            "nn" => 9,
            "metrics" => 10,
            _ => 1,
        }
    }

    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Convenience constructor for [`Error::Parse`].
    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
