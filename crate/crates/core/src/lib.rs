//! Simulation of multi-photon interference in linear optical networks and
//! machine-learned reconstruction of quantum states from the resulting
//! photon-counting statistics.
//!
//! The crate covers Fock-space bookkeeping, matrix permanents, output
//! distributions of linear networks, fidelity and entanglement measures,
//! dataset generation and a small regression toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod dataset;
pub mod error;
pub mod fock;
pub mod measures;
pub mod ml;
pub mod permanent;
pub mod pipeline;
pub mod report;
pub mod seed;

pub use circuit::{
    fixed_four_mode_circuit, output_distribution, BipartiteState, LinearNetwork, PatternDistribution,
    SingleModeState,
};
pub use dataset::{Dataset, DatasetConfig, DatasetMeta, ExperimentKind, PatternSample};
pub use error::{Error, Result};
pub use fock::{FockAmplitudeState, ModeConfiguration};
pub use num_complex::Complex64;
pub use permanent::ComplexMatrix;
pub use pipeline::{ModelBundle, TrainConfig};
pub use report::Report;
