use std::path::PathBuf;

use crate::ml::svr::SvrModel;

/// Errors raised anywhere in the simulation and learning stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("permanent of a {0}x{0} matrix exceeds the supported size of {max}", max = crate::permanent::MAX_PERMANENT_SIZE)]
    SizeExceeded(usize),
    #[error("photon numbers differ: input has {input}, output has {output}")]
    PhotonMismatch { input: u32, output: u32 },
    #[error("mode count mismatch: expected {expected}, got {actual}")]
    ModeMismatch { expected: usize, actual: usize },
    #[error("matrix is not unitary (max deviation from identity {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("brute-force expansion limited to {max} photons per term, got {photons}")]
    ScaleExceeded { photons: u32, max: u32 },
    #[error("state is not normalized (squared norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("probabilities are inconsistent with any physical state: {0}")]
    Inconsistent(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("configuration {0:?} is not covered by the compiled circuit")]
    UnsupportedConfiguration(Vec<u32>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("data has zero total variance")]
    DegenerateData,
    #[error("no training data")]
    EmptyData,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("SMO did not converge (final KKT violation {violation:.3e})")]
    NonConvergence {
        violation: f64,
        model: Box<SvrModel>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
