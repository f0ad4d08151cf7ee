//! Evaluation reports as aligned text tables and versioned JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::ExperimentKind;
use crate::ml::Summary;

pub const REPORT_FORMAT: &str = "fockprint-report/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scores {
    Tomography {
        fidelity: Summary,
    },
    Entanglement {
        mae: f64,
        r2: Option<f64>,
        abs_error: Summary,
        entropy_mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub n: u32,
    pub samples: usize,
    pub learner: String,
    pub pca_components: Option<usize>,
    pub scores: Scores,
}

impl Report {
    pub fn new(n: u32, learner: impl Into<String>, pca_components: Option<usize>, scores: Scores) -> Self {
        let samples = match &scores {
            Scores::Tomography { fidelity } => fidelity.count,
            Scores::Entanglement { abs_error, .. } => abs_error.count,
        };
        Report {
            format: REPORT_FORMAT.into(),
            n,
            samples,
            learner: learner.into(),
            pca_components,
            scores,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        match self.scores {
            Scores::Tomography { .. } => ExperimentKind::Tomography,
            Scores::Entanglement { .. } => ExperimentKind::Entanglement,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pca = self
            .pca_components
            .map_or(String::new(), |k| format!(", PCA {k} components"));
        let _ = writeln!(
            out,
            "{} N={} | {} | {} samples{}",
            self.kind(),
            self.n,
            self.learner,
            self.samples,
            pca
        );
        let (title, s) = match &self.scores {
            Scores::Tomography { fidelity } => ("Fidelity", fidelity),
            Scores::Entanglement { abs_error, .. } => ("MAE", abs_error),
        };
        let rows = [
            ("mean", s.mean),
            ("std", s.std),
            ("min", s.min),
            ("25%", s.q25),
            ("50%", s.q50),
            ("75%", s.q75),
            ("max", s.max),
        ];
        let _ = writeln!(out, "{:<20}{:>12}", "", title);
        for (label, v) in rows {
            let _ = writeln!(out, "{label:<20}{v:>12.6}");
        }
        if let Scores::Entanglement { r2, entropy_mean, .. } = &self.scores {
            match r2 {
                Some(r2) => {
                    let _ = writeln!(out, "{:<20}{r2:>12.6}", "R2");
                }
                None => {
                    let _ = writeln!(out, "{:<20}{:>12}", "R2", "undefined");
                }
            }
            let _ = writeln!(out, "{:<20}{entropy_mean:>12.6}", "Entropy Mean Value");
        }
        out
    }
}
