//! Training, prediction and evaluation on pattern datasets.
//!
//! Tomography targets `r_0..r_N, φ_1..φ_N` are learned as
//! `r_0..r_N, sin φ_1, cos φ_1, ..., sin φ_N, cos φ_N`; predicted phases are
//! rebuilt with `atan2`, and predicted amplitudes are clamped at zero and
//! renormalized before any fidelity is computed.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::SingleModeState;
use crate::dataset::{Dataset, DatasetMeta, ExperimentKind};
use crate::error::{Error, Result};
use crate::measures::fidelity;
use crate::ml::kernel::scale_gamma;
use crate::ml::{
    multi_output_fit, pca_fit, regression_metrics, summarize, KernelKind, LearnerConfig, MultiOutputModel,
    PcaModel, Standardizer,
};
use crate::report::{Report, Scores};

pub const MODEL_FORMAT: &str = "fockprint-model/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learner: LearnerConfig,
    /// Kernel `γ` for RBF and polynomial SVR; `None` uses
    /// `1 / (n_features · Var(X))` on the transformed training features.
    pub gamma: Option<f64>,
    pub standardize: bool,
    /// Explained-variance target for PCA, if any.
    pub pca: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    /// Standardizes whenever an SVR or PCA follows.
    pub fn new(learner: LearnerConfig, pca: Option<f64>, seed: u64) -> Self {
        let standardize = matches!(learner, LearnerConfig::Svr(_)) || pca.is_some();
        TrainConfig {
            learner,
            gamma: None,
            standardize,
            pca,
            seed,
        }
    }

    pub fn learner_label(&self) -> String {
        match &self.learner {
            LearnerConfig::Svr(p) => match p.kernel.kind {
                KernelKind::Rbf => "svr-rbf".into(),
                KernelKind::Linear => "svr-linear".into(),
                KernelKind::Polynomial => "svr-polynomial".into(),
            },
            LearnerConfig::Ert(_) => "ert".into(),
        }
    }
}

/// Everything needed to turn raw pattern features into target estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub kind: ExperimentKind,
    pub n: u32,
    pub alpha: f64,
    pub s_max: u32,
    pub feature_len: usize,
    pub targets: Vec<String>,
    pub config: TrainConfig,
    pub standardizer: Option<Standardizer>,
    pub pca: Option<PcaModel>,
    pub model: MultiOutputModel,
}

pub fn encode_targets(kind: ExperimentKind, n: u32, targets: &[f64]) -> Vec<f64> {
    match kind {
        ExperimentKind::Tomography => {
            let k = n as usize + 1;
            let mut out = targets[..k].to_vec();
            for &phi in &targets[k..] {
                out.push(phi.sin());
                out.push(phi.cos());
            }
            out
        }
        ExperimentKind::Entanglement => targets.to_vec(),
    }
}

/// Inverse of [`encode_targets`] for model outputs: amplitudes are clamped
/// and renormalized, phases wrapped into `[0, 2π)`.
pub fn decode_targets(kind: ExperimentKind, n: u32, encoded: &[f64]) -> Vec<f64> {
    match kind {
        ExperimentKind::Tomography => {
            let k = n as usize + 1;
            let mut r: Vec<f64> = encoded[..k].iter().map(|&x| x.max(0.0)).collect();
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter_mut().for_each(|x| *x /= norm);
            } else {
                r[0] = 1.0;
            }
            let phases = encoded[k..]
                .chunks(2)
                .map(|sc| sc[0].atan2(sc[1]).rem_euclid(std::f64::consts::TAU));
            r.into_iter().chain(phases).collect()
        }
        ExperimentKind::Entanglement => encoded.to_vec(),
    }
}

/// State described by tomography targets `r_0..r_N, φ_1..φ_N`.
pub fn state_from_targets(n: u32, targets: &[f64]) -> Result<SingleModeState> {
    let k = n as usize + 1;
    if targets.len() != 2 * k - 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * k - 1,
            actual: targets.len(),
        });
    }
    let phi = std::iter::once(0.0).chain(targets[k..].iter().copied()).collect();
    SingleModeState::new(targets[..k].to_vec(), phi)
}

pub fn train(ds: &Dataset, config: &TrainConfig) -> Result<ModelBundle> {
    if ds.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let meta = &ds.meta;
    let mut x = ds.features();
    let standardizer = if config.standardize {
        let s = Standardizer::fit(&x)?;
        x = s.transform(&x)?;
        Some(s)
    } else {
        None
    };
    let pca = match config.pca {
        Some(target) => {
            let p = pca_fit(&x, target)?;
            x = p.transform(&x)?;
            Some(p)
        }
        None => None,
    };
    let y: Vec<Vec<f64>> = ds
        .samples
        .iter()
        .map(|s| encode_targets(meta.kind, meta.n, &s.targets))
        .collect();
    let mut learner = config.learner.clone();
    if let LearnerConfig::Svr(p) = &mut learner {
        if p.kernel.kind != KernelKind::Linear {
            p.kernel.gamma = config.gamma.unwrap_or_else(|| scale_gamma(&x));
        }
    }
    let model = multi_output_fit(&x, &y, &learner, config.seed)?;
    Ok(ModelBundle {
        format: MODEL_FORMAT.into(),
        kind: meta.kind,
        n: meta.n,
        alpha: meta.alpha,
        s_max: meta.s_max,
        feature_len: meta.feature_len,
        targets: meta.targets.clone(),
        config: TrainConfig { learner, ..config.clone() },
        standardizer,
        pca,
        model,
    })
}

impl ModelBundle {
    pub fn check_compatible(&self, meta: &DatasetMeta) -> Result<()> {
        if meta.kind != self.kind
            || meta.n != self.n
            || meta.s_max != self.s_max
            || meta.feature_len != self.feature_len
            || meta.alpha != self.alpha
        {
            return Err(Error::LayoutMismatch(format!(
                "model expects {} N={} alpha={} s_max={} ({} features), dataset is {} N={} alpha={} s_max={} ({} features)",
                self.kind,
                self.n,
                self.alpha,
                self.s_max,
                self.feature_len,
                meta.kind,
                meta.n,
                meta.alpha,
                meta.s_max,
                meta.feature_len
            )));
        }
        Ok(())
    }

    /// Decoded target estimates for raw feature rows.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut x = features.to_vec();
        if x.iter().any(|r| r.len() != self.feature_len) {
            return Err(Error::LayoutMismatch(format!("expected {} features per row", self.feature_len)));
        }
        if let Some(s) = &self.standardizer {
            x = s.transform(&x)?;
        }
        if let Some(p) = &self.pca {
            x = p.transform(&x)?;
        }
        Ok(self
            .model
            .predict(&x)?
            .iter()
            .map(|e| decode_targets(self.kind, self.n, e))
            .collect())
    }

    pub fn evaluate(&self, ds: &Dataset) -> Result<Report> {
        self.check_compatible(&ds.meta)?;
        let predictions = self.predict(&ds.features())?;
        score(
            self.kind,
            self.n,
            &ds.targets(),
            &predictions,
            self.config.learner_label(),
            self.pca.as_ref().map(PcaModel::n_components),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(MODEL_FORMAT) => serde_json::from_value(value).map_err(|e| Error::Format(e.to_string())),
            other => Err(Error::Format(format!("expected format '{MODEL_FORMAT}', found {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Scores decoded predictions against true targets: fidelities for
/// tomography, entropy errors for entanglement.
pub fn score(
    kind: ExperimentKind,
    n: u32,
    truth: &[Vec<f64>],
    predictions: &[Vec<f64>],
    learner: String,
    pca_components: Option<usize>,
) -> Result<Report> {
    if truth.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predictions.len(),
        });
    }
    let scores = match kind {
        ExperimentKind::Tomography => {
            let f = truth
                .iter()
                .zip(predictions)
                .map(|(t, p)| fidelity(&state_from_targets(n, t)?, &state_from_targets(n, p)?))
                .collect::<Result<Vec<_>>>()?;
            Scores::Tomography { fidelity: summarize(&f)? }
        }
        ExperimentKind::Entanglement => {
            let t: Vec<f64> = truth.iter().map(|r| r[0]).collect();
            let p: Vec<f64> = predictions.iter().map(|r| r[0]).collect();
            let m = regression_metrics(&t, &p)?;
            Scores::Entanglement {
                mae: m.mae,
                r2: m.r2,
                abs_error: m.abs_error,
                entropy_mean: t.iter().sum::<f64>() / t.len() as f64,
            }
        }
    };
    Ok(Report::new(n, learner, pca_components, scores))
}
