//! One independent regressor per target column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ert::{ert_fit, ErtModel, ErtParams};
use super::svr::{svr_fit, SvrModel, SvrParams};
use super::{check_width, matrix_width};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum LearnerConfig {
    Svr(SvrParams),
    Ert(ErtParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum SingleModel {
    Svr(SvrModel),
    Ert(ErtModel),
}

impl SingleModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        match self {
            SingleModel::Svr(m) => m.predict_one(x),
            SingleModel::Ert(m) => m.predict_one(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutputModel {
    pub n_features: usize,
    pub models: Vec<SingleModel>,
}

impl MultiOutputModel {
    pub fn n_targets(&self) -> usize {
        self.models.len()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(x, self.n_features)?;
        Ok(x
            .par_iter()
            .map(|row| self.models.iter().map(|m| m.predict_one(row)).collect())
            .collect())
    }
}

/// Fits column `c` of `y` with its own model. Tree ensembles for column `c`
/// are seeded with `derive_seed(seed, c)`. The first column that fails to
/// converge aborts the fit.
pub fn multi_output_fit(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    config: &LearnerConfig,
    seed: u64,
) -> Result<MultiOutputModel> {
    let d = matrix_width(x)?;
    let t = matrix_width(y)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let models = (0..t)
        .into_par_iter()
        .map(|c| {
            let col: Vec<f64> = y.iter().map(|r| r[c]).collect();
            match config {
                LearnerConfig::Svr(p) => svr_fit(x, &col, p).map(SingleModel::Svr),
                LearnerConfig::Ert(p) => {
                    let p = ErtParams {
                        seed: derive_seed(seed, c as u64),
                        ..*p
                    };
                    ert_fit(x, &col, &p).map(SingleModel::Ert)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiOutputModel { n_features: d, models })
}
