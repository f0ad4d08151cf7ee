//! Learning stack: standardization, PCA, ε-SVR, extremely randomized trees,
//! per-target wrapping and regression metrics.
//!
//! Sample matrices are slices of rows (`&[Vec<f64>]`), one row per sample.

pub mod ert;
pub mod kernel;
pub mod metrics;
pub mod multi;
pub mod pca;
pub mod scale;
pub mod svr;

pub use ert::{ert_fit, ErtModel, ErtParams};
pub use kernel::{KernelKind, KernelSpec};
pub use metrics::{regression_metrics, summarize, RegressionMetrics, Summary};
pub use multi::{multi_output_fit, LearnerConfig, MultiOutputModel, SingleModel};
pub use pca::{pca_fit, PcaModel};
pub use scale::Standardizer;
pub use svr::{svr_fit, SvrModel, SvrParams};

use crate::error::{Error, Result};

/// Checks that `x` is a non-empty rectangular matrix and returns its width.
pub(crate) fn matrix_width(x: &[Vec<f64>]) -> Result<usize> {
    let width = x.first().ok_or(Error::EmptyData)?.len();
    for row in x {
        if row.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: row.len(),
            });
        }
    }
    Ok(width)
}

pub(crate) fn check_width(x: &[Vec<f64>], width: usize) -> Result<()> {
    for row in x {
        if row.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: row.len(),
            });
        }
    }
    Ok(())
}
