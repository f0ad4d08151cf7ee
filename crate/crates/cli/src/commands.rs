use std::fs;
use std::path::{Path, PathBuf};

use fockprint::circuit::{
    analytic_invert_n1, analytic_probabilities_n1, brute_force_output, entanglement_input, fixed_four_mode_circuit,
    output_distribution, tomography_input, N1Probabilities,
};
use fockprint::dataset::{generate_dataset, sample_bipartite_state, sample_single_mode_state};
use fockprint::measures::{entanglement_entropy, fidelity};
use fockprint::ml::{ErtParams, KernelSpec, LearnerConfig, SvrParams};
use fockprint::pipeline::train as fit;
use fockprint::report::REPORT_FORMAT;
use fockprint::seed::rng_from_seed;
use fockprint::{
    BipartiteState, Dataset, DatasetConfig, Error, ExperimentKind, FockAmplitudeState, ModelBundle, Report,
    SingleModeState, TrainConfig,
};

use crate::config::Config;
use crate::{CliError, EvalArgs, FormatArg, GenerateArgs, KernelArg, LearnerArg, ReportArgs, SimulateArgs, TomoArgs, TrainArgs};

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn generate(a: GenerateArgs, cfg: &Config) -> Result<(), CliError> {
    let kind: ExperimentKind = cfg.require(a.kind, "kind")?.into();
    let n = cfg.require(a.n, "n")?;
    let count = cfg.require(a.count, "count")?;
    let seed = cfg.require(a.seed, "seed")?;
    let config = DatasetConfig {
        kind,
        n,
        alpha: cfg.pick_or(a.alpha, "alpha", 1.0)?,
        s_max: cfg.pick_or(a.s_max, "s_max", 5)?,
    };
    let out = cfg.pick_or(a.out, "out", PathBuf::from("dataset.jsonl"))?;
    let ds = generate_dataset(&config, count, seed)?;
    ds.save(&out)?;
    if let Some(csv) = cfg.pick(a.csv, "csv")? {
        ds.export_csv(&csv)?;
    }
    say!("wrote {}", out.display());
    say!("kind            {kind}");
    say!("N               {n}");
    say!("samples         {}", ds.samples.len());
    say!("feature length  {}", ds.meta.feature_len);
    if !ds.samples.is_empty() {
        let defects: Vec<f64> = ds
            .samples
            .iter()
            .map(|s| 1.0 - s.features.iter().sum::<f64>())
            .collect();
        let s = fockprint::ml::summarize(&defects)?;
        say!("truncation defect  min {:.3e}  mean {:.3e}  max {:.3e}", s.min, s.mean, s.max);
    }
    Ok(())
}

fn learner_config(a: &TrainArgs, cfg: &Config) -> Result<LearnerConfig, CliError> {
    Ok(match cfg.pick_or(a.learner, "learner", LearnerArg::Svr)? {
        LearnerArg::Svr => {
            let kernel = match cfg.pick_or(a.kernel, "kernel", KernelArg::Rbf)? {
                KernelArg::Rbf => KernelSpec::rbf(1.0),
                KernelArg::Linear => KernelSpec::linear(),
                KernelArg::Poly => KernelSpec::polynomial(
                    1.0,
                    cfg.pick_or(a.coef0, "coef0", 1.0)?,
                    cfg.pick_or(a.degree, "degree", 3)?,
                ),
            };
            let defaults = SvrParams::new(kernel);
            LearnerConfig::Svr(
                defaults
                    .with_c(cfg.pick_or(a.c, "c", defaults.c)?)
                    .with_epsilon(cfg.pick_or(a.epsilon, "epsilon", defaults.epsilon)?)
                    .with_tol(cfg.pick_or(a.tol, "tol", defaults.tol)?)
                    .with_max_passes(cfg.pick_or(a.max_passes, "max_passes", defaults.max_passes)?),
            )
        }
        LearnerArg::Ert => {
            let d = ErtParams::default();
            LearnerConfig::Ert(ErtParams {
                n_trees: cfg.pick_or(a.trees, "trees", d.n_trees)?,
                max_features: cfg.pick(a.max_features, "max_features")?,
                min_samples_split: cfg.pick_or(a.min_split, "min_split", d.min_samples_split)?,
                max_depth: cfg.pick(a.max_depth, "max_depth")?,
                seed: 0,
            })
        }
    })
}

pub fn train(a: TrainArgs, cfg: &Config) -> Result<(), CliError> {
    let data: PathBuf = cfg.require(a.data.clone(), "data")?;
    let out = cfg.pick_or(a.out.clone(), "out", PathBuf::from("model.json"))?;
    let ds = Dataset::load(&data)?;
    if let Some(kind) = cfg.pick(a.kind, "kind")? {
        let kind: ExperimentKind = kind.into();
        if kind != ds.meta.kind {
            return Err(CliError::config(format!("dataset is {}, expected {kind}", ds.meta.kind)));
        }
    }
    let pca = cfg.pick(a.pca, "pca")?;
    let mut config = TrainConfig::new(learner_config(&a, cfg)?, pca, cfg.pick_or(a.seed, "seed", 0)?);
    config.gamma = cfg.pick(a.gamma, "gamma")?;
    if let Some(s) = cfg.pick(a.standardize, "standardize")? {
        config.standardize = s;
    }
    let retries = cfg.pick_or(a.retries, "retries", 2)?;
    let mut attempt = 0;
    let bundle = loop {
        match fit(&ds, &config) {
            Err(Error::NonConvergence { violation, .. }) if attempt < retries => {
                attempt += 1;
                if let LearnerConfig::Svr(p) = &mut config.learner {
                    p.max_passes *= 2;
                    eprintln!(
                        "warning: SVR stopped with KKT violation {violation:.3e}; retrying with max_passes {}",
                        p.max_passes
                    );
                }
            }
            other => break other?,
        }
    };
    bundle.save(&out)?;
    say!("wrote {}", out.display());
    say!("targets     {}", bundle.targets.join(", "));
    say!("sub-models  {}", bundle.model.n_targets());
    if let Some(p) = &bundle.pca {
        say!("PCA         {} of {} components retained", p.n_components(), p.n_features());
    }
    say!("training-set scores:");
    say_raw!("{}", bundle.evaluate(&ds)?.to_text());
    Ok(())
}

pub fn eval(a: EvalArgs, cfg: &Config) -> Result<(), CliError> {
    let model = ModelBundle::load(&cfg.require(a.model, "model")?)?;
    let ds = Dataset::load(&cfg.require(a.data, "data")?)?;
    let report = model.evaluate(&ds)?;
    if let Some(path) = cfg.pick(a.json, "json")? {
        write_file(&path, &report.to_json())?;
    }
    match cfg.pick_or(a.format, "format", FormatArg::Text)? {
        FormatArg::Text => say_raw!("{}", report.to_text()),
        FormatArg::Json => say!("{}", report.to_json()),
    }
    Ok(())
}

pub fn tomo_analytic(a: TomoArgs, cfg: &Config) -> Result<(), CliError> {
    let alpha = cfg.pick_or(a.alpha, "alpha", 1.0)?;
    for (name, list, len) in [("probs", &a.probs, 5), ("state", &a.state, 3), ("truth", &a.truth, 3)] {
        if list.as_ref().is_some_and(|v| v.len() != len) {
            return Err(CliError::config(format!("--{name} takes {len} comma-separated values")));
        }
    }
    let state_of = |v: &[f64]| SingleModeState::new(vec![v[0], v[1]], vec![0.0, v[2]]);
    let (probs, truth) = match (&a.probs, &a.state) {
        (Some(p), _) => (
            N1Probabilities {
                vacuum: p[0],
                p1000: p[1],
                p0100: p[2],
                p0010: p[3],
                p0001: p[4],
            },
            a.truth.as_deref().map(state_of).transpose()?,
        ),
        (None, Some(s)) => (analytic_probabilities_n1(s[0], s[1], s[2], alpha)?, Some(state_of(s)?)),
        (None, None) => return Err(CliError::config("give --probs or --state")),
    };
    let est = match analytic_invert_n1(&probs, alpha) {
        Ok(e) => e,
        Err(Error::Inconsistent(msg)) => {
            say!("warning: inconsistent input: {msg}");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    say!("r0       {:.9}", est.r0);
    say!("r1       {:.9}", est.r1);
    say!("phi1     {:.9}", est.phi1);
    if est.degenerate {
        say!("warning: degenerate input (r0*r1 ~ 0 or alpha = 0); phi1 is not determined");
    }
    if let Some(t) = truth {
        say!("fidelity {:.9}", fidelity(&t, &est.state())?);
    }
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::config(format!("bad number '{x}': {e}"))))
        .collect()
}

/// `r=..;phi=..` inline, or the same keys on separate lines of a file.
fn parse_state_spec(spec: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = match spec.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {path}: {e}")))?,
        None => spec.to_string(),
    };
    let (mut r, mut phi) = (None, None);
    for part in text.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
            Some(("r", v)) => r = Some(parse_list(v)?),
            Some(("phi", v)) => phi = Some(parse_list(v)?),
            _ => return Err(CliError::config(format!("malformed state entry '{part}'"))),
        }
    }
    let r = r.ok_or_else(|| CliError::config("state needs r=..."))?;
    let phi = phi.unwrap_or_else(|| vec![0.0; r.len()]);
    Ok((r, phi))
}

fn photons_for_dim(len: usize, squared: bool) -> Result<u32, CliError> {
    let dim = if squared { (len as f64).sqrt().round() as usize } else { len };
    if dim < 2 || (squared && dim * dim != len) {
        return Err(CliError::config(format!("state has {len} coefficients")));
    }
    Ok(dim as u32 - 1)
}

pub fn simulate(a: SimulateArgs, cfg: &Config) -> Result<(), CliError> {
    let kind: ExperimentKind = cfg.pick_or(a.kind, "kind", crate::KindArg::Tomo)?.into();
    let alpha = cfg.pick_or(a.alpha, "alpha", 1.0)?;
    let s_max = cfg.pick_or(a.s_max, "s_max", 4)?;
    let mut rng = rng_from_seed(cfg.pick_or(a.seed, "seed", 0)?);
    let input: FockAmplitudeState = match kind {
        ExperimentKind::Tomography => {
            let eta = match (&a.state, a.random) {
                (Some(spec), _) => {
                    let (r, phi) = parse_state_spec(spec)?;
                    photons_for_dim(r.len(), false)?;
                    SingleModeState::new(r, phi)?
                }
                (None, Some(n)) if n > 0 => sample_single_mode_state(n, &mut rng),
                _ => return Err(CliError::config("give --state or --random N (N >= 1)")),
            };
            say!("state    r = {:?}, phi = {:?}", eta.r(), eta.phi());
            tomography_input(&eta, alpha, s_max)?
        }
        ExperimentKind::Entanglement => {
            let psi = match (&a.state, a.random) {
                (Some(spec), _) => {
                    let (r, phi) = parse_state_spec(spec)?;
                    let n = photons_for_dim(r.len(), true)?;
                    BipartiteState::new(n as usize + 1, r, phi)?
                }
                (None, Some(n)) if n > 0 => sample_bipartite_state(n, &mut rng),
                _ => return Err(CliError::config("give --state or --random N (N >= 1)")),
            };
            say!("state    r = {:?}, phi = {:?}", psi.r(), psi.phi());
            say!("entropy  {:.12}", entanglement_entropy(&psi)?);
            entanglement_input(&psi, alpha, s_max)?
        }
    };
    let net = fixed_four_mode_circuit();
    let dist = output_distribution(&net, &input, s_max)?;
    say!("alpha    {alpha}");
    say!("s_max    {s_max}");
    for (c, p) in dist.iter() {
        if a.nonzero && *p == 0.0 {
            continue;
        }
        let counts: Vec<String> = c.counts().iter().map(u32::to_string).collect();
        say!("|{}⟩  {p:.12}", counts.join(","));
    }
    say!("total probability  {:.12}", dist.total_probability());
    say!("truncation defect  {:.6e}", dist.truncation_defect());
    if a.oracle_check {
        let oracle = brute_force_output(&net, &input, s_max)?;
        say!("oracle max deviation  {:.3e}", dist.max_deviation(&oracle)?);
    }
    Ok(())
}

pub fn report(a: ReportArgs, cfg: &Config) -> Result<(), CliError> {
    let format = cfg.pick_or(a.format, "format", FormatArg::Text)?;
    for (k, path) in a.inputs.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        let report: Report = serde_json::from_str(&text)
            .map_err(|e| CliError::io(format!("{}: not a report: {e}", path.display())))?;
        if report.format != REPORT_FORMAT {
            return Err(CliError::io(format!(
                "{}: expected format '{REPORT_FORMAT}', found '{}'",
                path.display(),
                report.format
            )));
        }
        if k > 0 {
            say!("");
        }
        match format {
            FormatArg::Text => say_raw!("{}", report.to_text()),
            FormatArg::Json => say!("{}", report.to_json()),
        }
    }
    Ok(())
}
