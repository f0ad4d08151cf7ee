//! Random state sampling, pattern features and dataset files.
//!
//! A dataset file is JSON Lines: the first line is the [`DatasetMeta`]
//! record, every further line one [`PatternSample`].

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    entanglement_input, entanglement_support, fixed_four_mode_circuit, tomography_input, tomography_support,
    BipartiteState, CompiledCircuit, PatternDistribution, SingleModeState,
};
use crate::error::{Error, Result};
use crate::fock::configuration_count;
use crate::measures::entanglement_entropy;
use crate::seed::{derive_seed, rng_from_seed, Rng};

pub const DATASET_FORMAT: &str = "fockprint-dataset/v1";
/// Feature blocks for `s = 0..=s_max`, each in ascending lexicographic order.
pub const FEATURE_ORDER: &str = "lex-v1";
pub const CIRCUIT_MODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Tomography,
    Entanglement,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Tomography => "tomography",
            ExperimentKind::Entanglement => "entanglement",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tomo" | "tomography" => Ok(ExperimentKind::Tomography),
            "ent" | "entanglement" => Ok(ExperimentKind::Entanglement),
            _ => Err(Error::InvalidParameter(format!("unknown experiment kind '{s}'"))),
        }
    }
}

/// Target column names: `r0..rN, phi1..phiN` or `entropy`.
pub fn target_names(kind: ExperimentKind, n: u32) -> Vec<String> {
    match kind {
        ExperimentKind::Tomography => (0..=n)
            .map(|l| format!("r{l}"))
            .chain((1..=n).map(|l| format!("phi{l}")))
            .collect(),
        ExperimentKind::Entanglement => vec!["entropy".into()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub feature_order: String,
    pub kind: ExperimentKind,
    pub n: u32,
    pub alpha: f64,
    pub s_max: u32,
    pub base_seed: u64,
    pub count: usize,
    pub modes: usize,
    pub feature_len: usize,
    pub targets: Vec<String>,
}

impl DatasetMeta {
    pub fn new(config: &DatasetConfig, base_seed: u64, count: usize) -> Self {
        DatasetMeta {
            format: DATASET_FORMAT.into(),
            feature_order: FEATURE_ORDER.into(),
            kind: config.kind,
            n: config.n,
            alpha: config.alpha,
            s_max: config.s_max,
            base_seed,
            count,
            modes: CIRCUIT_MODES,
            feature_len: feature_length(CIRCUIT_MODES, config.s_max),
            targets: target_names(config.kind, config.n),
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            mode_count: self.modes,
            s_max: self.s_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSample {
    pub id: u64,
    pub seed: u64,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<PatternSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub kind: ExperimentKind,
    pub n: u32,
    pub alpha: f64,
    pub s_max: u32,
}

impl DatasetConfig {
    /// `α = 1` and `s_max = 5`.
    pub fn new(kind: ExperimentKind, n: u32) -> Self {
        DatasetConfig {
            kind,
            n,
            alpha: 1.0,
            s_max: 5,
        }
    }
}

fn gaussian_amplitudes(len: usize, rng: &mut Rng) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Uniformly random state on the unit sphere of `C^{N+1}`, gauge-fixed to
/// `φ_0 = 0`.
pub fn sample_single_mode_state(n: u32, rng: &mut Rng) -> SingleModeState {
    let amps = gaussian_amplitudes(n as usize + 1, rng);
    SingleModeState::from_amplitudes(&amps).expect("Gaussian draw has positive norm")
}

/// Uniformly random two-mode state with `(N+1)^2` coefficients.
pub fn sample_bipartite_state(n: u32, rng: &mut Rng) -> BipartiteState {
    let dim = n as usize + 1;
    let amps = gaussian_amplitudes(dim * dim, rng);
    BipartiteState::from_amplitudes(dim, &amps).expect("Gaussian draw has positive norm")
}

/// `Σ_{s=0}^{s_max} C(s+M-1, M-1)`.
pub fn feature_length(modes: usize, s_max: u32) -> usize {
    (0..=s_max).map(|s| configuration_count(modes, s)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub mode_count: usize,
    pub s_max: u32,
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        feature_length(self.mode_count, self.s_max)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Probabilities of all outputs with `s <= s_max`, block by block.
pub fn featurize(dist: &PatternDistribution, layout: &FeatureLayout) -> Result<Vec<f64>> {
    if dist.mode_count() != layout.mode_count || dist.s_max() != layout.s_max {
        return Err(Error::LayoutMismatch(format!(
            "distribution has {} modes up to s={}, layout expects {} modes up to s={}",
            dist.mode_count(),
            dist.s_max(),
            layout.mode_count,
            layout.s_max
        )));
    }
    let features: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    debug_assert_eq!(features.len(), layout.len());
    Ok(features)
}

fn tomography_targets(state: &SingleModeState) -> Vec<f64> {
    state.r().iter().chain(&state.phi()[1..]).copied().collect()
}

/// Sample `i` uses the stream `derive_seed(base_seed, i)`, so the result
/// does not depend on scheduling.
pub fn generate_dataset(config: &DatasetConfig, count: usize, base_seed: u64) -> Result<Dataset> {
    if config.n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let meta = DatasetMeta::new(config, base_seed, count);
    let layout = meta.layout();
    let net = fixed_four_mode_circuit();
    let support = match config.kind {
        ExperimentKind::Tomography => tomography_support(config.n, config.s_max),
        ExperimentKind::Entanglement => entanglement_support(config.n, config.s_max),
    };
    let compiled = CompiledCircuit::new(&net, &support, config.s_max)?;
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let seed = derive_seed(base_seed, id);
            let mut rng = rng_from_seed(seed);
            let (input, targets) = match config.kind {
                ExperimentKind::Tomography => {
                    let eta = sample_single_mode_state(config.n, &mut rng);
                    (tomography_input(&eta, config.alpha, config.s_max)?, tomography_targets(&eta))
                }
                ExperimentKind::Entanglement => {
                    let psi = sample_bipartite_state(config.n, &mut rng);
                    let entropy = entanglement_entropy(&psi)?;
                    (entanglement_input(&psi, config.alpha, config.s_max)?, vec![entropy])
                }
            };
            let features = featurize(&compiled.distribution(&input)?, &layout)?;
            Ok(PatternSample {
                id,
                seed,
                features,
                targets,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { meta, samples })
}

impl Dataset {
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.targets.clone()).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.meta)?;
        w.write_all(b"\n")?;
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Format("empty dataset file".into()))?
            .map_err(|e| Error::Format(e.to_string()))?;
        let value: serde_json::Value =
            serde_json::from_str(&head).map_err(|e| Error::Format(format!("meta record: {e}")))?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(DATASET_FORMAT) => {}
            other => {
                return Err(Error::Format(format!(
                    "expected format '{DATASET_FORMAT}', found {}",
                    other.map_or("none".to_string(), |s| format!("'{s}'"))
                )))
            }
        }
        let meta: DatasetMeta =
            serde_json::from_value(value).map_err(|e| Error::Format(format!("meta record: {e}")))?;
        if meta.feature_order != FEATURE_ORDER {
            return Err(Error::Format(format!("unknown feature order '{}'", meta.feature_order)));
        }
        let mut samples = Vec::with_capacity(meta.count);
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line.map_err(|e| Error::CorruptRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let s: PatternSample = serde_json::from_str(&line).map_err(|e| Error::CorruptRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
            if s.features.len() != meta.feature_len || s.targets.len() != meta.targets.len() {
                return Err(Error::CorruptRecord {
                    line: line_no,
                    reason: format!(
                        "{} features and {} targets, expected {} and {}",
                        s.features.len(),
                        s.targets.len(),
                        meta.feature_len,
                        meta.targets.len()
                    ),
                });
            }
            samples.push(s);
        }
        if samples.len() != meta.count {
            return Err(Error::Format(format!(
                "meta declares {} samples, file holds {}",
                meta.count,
                samples.len()
            )));
        }
        Ok(Dataset { meta, samples })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(BufReader::new(file))
    }

    /// Header `feature_0..feature_k,target_0..target_m`, one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let header = (0..self.meta.feature_len)
            .map(|i| format!("feature_{i}"))
            .chain((0..self.meta.targets.len()).map(|i| format!("target_{i}")));
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(header).map_err(csv_err)?;
        for s in &self.samples {
            out.write_record(s.features.iter().chain(&s.targets).map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::output_distribution;
    use std::f64::consts::LN_2;

    #[test]
    fn sampled_states_are_normalized_and_gauged() {
        let mut rng = rng_from_seed(1);
        for n in 1..4 {
            let s = sample_single_mode_state(n, &mut rng);
            assert!((s.r().iter().map(|r| r * r).sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(s.phi()[0], 0.0);
            assert!(s.phi().iter().all(|&p| (0.0..std::f64::consts::TAU).contains(&p)));
            let b = sample_bipartite_state(n, &mut rng);
            assert!((b.r().iter().map(|r| r * r).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let a = sample_single_mode_state(2, &mut rng_from_seed(9));
        assert_eq!(a, sample_single_mode_state(2, &mut rng_from_seed(9)));
        let a = sample_bipartite_state(1, &mut rng_from_seed(9));
        assert_eq!(a, sample_bipartite_state(1, &mut rng_from_seed(9)));
    }

    #[test]
    fn sphere_moment() {
        let mut rng = rng_from_seed(2);
        let mean = (0..10_000)
            .map(|_| sample_single_mode_state(1, &mut rng).r()[0].powi(2))
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    // Average entanglement of random 2x2 pure states: Σ_{k=3}^{4} 1/k - 1/4 = 1/3.
    #[test]
    fn random_two_qubit_mean_entropy() {
        let mut rng = rng_from_seed(3);
        let mean = (0..10_000)
            .map(|_| entanglement_entropy(&sample_bipartite_state(1, &mut rng)).unwrap())
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn derived_streams_give_distinct_states() {
        let mut r0: Vec<f64> = (0..10_000u64)
            .map(|i| sample_single_mode_state(1, &mut rng_from_seed(derive_seed(5, i))).r()[0])
            .collect();
        r0.sort_by(f64::total_cmp);
        assert!(r0.windows(2).all(|w| w[1] - w[0] > 1e-12));
    }

    #[test]
    fn feature_lengths() {
        assert_eq!(feature_length(4, 0), 1);
        assert_eq!(feature_length(4, 4), 70);
        assert_eq!(feature_length(4, 5), 126);
        let net = fixed_four_mode_circuit();
        let eta = SingleModeState::fock(0, 1);
        let dist = output_distribution(&net, &tomography_input(&eta, 1.0, 0).unwrap(), 0).unwrap();
        let f = featurize(&dist, &FeatureLayout { mode_count: 4, s_max: 0 }).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0] - (-2.0f64).exp()).abs() < 1e-15);
        assert!(matches!(
            featurize(&dist, &FeatureLayout { mode_count: 4, s_max: 5 }),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn features_match_direct_simulation() {
        let cfg = DatasetConfig::new(ExperimentKind::Tomography, 2);
        let ds = generate_dataset(&cfg, 3, 11).unwrap();
        let net = fixed_four_mode_circuit();
        for s in &ds.samples {
            let eta = sample_single_mode_state(2, &mut rng_from_seed(s.seed));
            assert_eq!(tomography_targets(&eta), s.targets);
            let dist = output_distribution(&net, &tomography_input(&eta, 1.0, 5).unwrap(), 5).unwrap();
            let f = featurize(&dist, &ds.meta.layout()).unwrap();
            for (a, b) in f.iter().zip(&s.features) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_and_deterministic() {
        let cfg = DatasetConfig::new(ExperimentKind::Tomography, 1);
        let ds = generate_dataset(&cfg, 0, 7).unwrap();
        assert!(ds.samples.is_empty());
        assert_eq!(ds.meta.feature_len, 126);
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        assert_eq!(Dataset::read_jsonl(&buf[..]).unwrap(), ds);

        let mut a = Vec::new();
        let mut b = Vec::new();
        generate_dataset(&cfg, 20, 7).unwrap().write_jsonl(&mut a).unwrap();
        generate_dataset(&cfg, 20, 7).unwrap().write_jsonl(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_invariants() {
        for (kind, n) in [(ExperimentKind::Tomography, 1), (ExperimentKind::Tomography, 2)] {
            let ds = generate_dataset(&DatasetConfig::new(kind, n), 30, 4).unwrap();
            for s in &ds.samples {
                assert!(s.features.iter().all(|&p| p >= 0.0));
                assert!(s.features.iter().sum::<f64>() <= 1.0 + 1e-12);
                let r = &s.targets[..=n as usize];
                assert!((r.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        let ds = generate_dataset(&DatasetConfig::new(ExperimentKind::Entanglement, 1), 100, 4).unwrap();
        assert_eq!(ds.meta.targets, ["entropy"]);
        assert!(ds.samples.iter().all(|s| (0.0..=LN_2 + 1e-12).contains(&s.targets[0])));
    }

    #[test]
    fn near_complete_at_normalization_cutoff() {
        for kind in [ExperimentKind::Tomography, ExperimentKind::Entanglement] {
            let cfg = DatasetConfig {
                s_max: 12,
                ..DatasetConfig::new(kind, if kind == ExperimentKind::Tomography { 2 } else { 1 })
            };
            for s in generate_dataset(&cfg, 10, 8).unwrap().samples {
                let sum: f64 = s.features.iter().sum();
                assert!((1.0 - 1e-5..=1.0 + 1e-12).contains(&sum), "{sum}");
            }
        }
    }

    #[test]
    fn file_round_trip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(&DatasetConfig::new(ExperimentKind::Entanglement, 1), 5, 1).unwrap();
        let path = dir.path().join("d.jsonl");
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);

        let csv_path = dir.path().join("d.csv");
        ds.export_csv(&csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("feature_0,feature_1,"));
        assert!(lines[0].ends_with("feature_125,target_0"));
        assert!(matches!(
            Dataset::load(&dir.path().join("missing.jsonl")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn rejects_bad_files() {
        let ds = generate_dataset(&DatasetConfig::new(ExperimentKind::Tomography, 1), 2, 1).unwrap();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let wrong = text.replacen(DATASET_FORMAT, "fockprint-dataset/v0", 1);
        assert!(matches!(Dataset::read_jsonl(wrong.as_bytes()), Err(Error::Format(_))));

        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{\"id\": 1, \"seed\": ";
        let broken = lines.join("\n");
        assert!(matches!(
            Dataset::read_jsonl(broken.as_bytes()),
            Err(Error::CorruptRecord { line: 3, .. })
        ));

        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Dataset::read_jsonl(truncated.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("tomo".parse::<ExperimentKind>().unwrap(), ExperimentKind::Tomography);
        assert_eq!("entanglement".parse::<ExperimentKind>().unwrap(), ExperimentKind::Entanglement);
        assert!("x".parse::<ExperimentKind>().is_err());
        assert_eq!(target_names(ExperimentKind::Tomography, 2), ["r0", "r1", "r2", "phi1", "phi2"]);
    }
}
