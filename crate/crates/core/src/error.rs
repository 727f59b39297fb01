use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty logits")]
    EmptyLogits,

    #[error("invalid temperature {0}: must be > 0")]
    InvalidTemperature(f64),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("layer {layer}: {source}")]
    InLayer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{rows}x{cols} matrix cannot be column-orthonormal")]
    NotColumnOrthonormal { rows: usize, cols: usize },

    #[error("invalid step size {0}: must be in (0, 0.5]")]
    InvalidStepSize(f64),

    #[error("non-finite {what}")]
    NonFinite { what: String },

    #[error("stale cache: parameters changed since the forward pass")]
    StaleCache,

    #[error("missing cache for {0}")]
    MissingCache(&'static str),

    #[error("no supervised frames")]
    NoSupervisedFrames,

    #[error("architecture weights off the simplex (sum {sum}, min {min})")]
    OffSimplex { sum: f64, min: f64 },

    #[error("invalid penalty scale {0}: must be >= 0")]
    InvalidPenalty(f64),

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid dataset parameters: {0}")]
    InvalidDataset(String),

    #[error("search space has {size} candidates, exceeds enumeration cap {cap}")]
    SpaceTooLarge { size: String, cap: u64 },

    #[error("diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("held-out split is empty")]
    EmptyHeldout,

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("{path}: bad magic, expected {expected}")]
    BadMagic { path: String, expected: &'static str },

    #[error("{path}: unsupported version {found}, expected {expected}")]
    BadVersion {
        path: String,
        found: u32,
        expected: u32,
    },

    #[error("{path}: {msg}")]
    Format { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn in_layer(self, layer: usize) -> Self {
        Error::InLayer {
            layer,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
