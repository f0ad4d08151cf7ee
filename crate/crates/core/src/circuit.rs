//! The four-mode reference circuit, input-state assembly and the
//! photon-pattern engine.
//!
//! Modes are 0-based in code. The coherent references sit in modes 0
//! (phase 0) and 3 (phase π/2); the unknown state occupies mode 2 for
//! tomography and modes 1 and 2 for the bipartite setup.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_configurations, log_factorial, FockAmplitudeState, ModeConfiguration};
use crate::permanent::{transition_amplitude, ComplexMatrix};

/// Entrywise tolerance on `U†U = I` accepted by [`LinearNetwork::new`].
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Largest photon number per input term the brute-force expansion accepts.
pub const MAX_BRUTE_FORCE_PHOTONS: u32 = 10;

const CIRCUIT_MODES: usize = 4;

/// A passive linear-optical network described by its unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetwork {
    unitary: ComplexMatrix,
}

impl LinearNetwork {
    pub fn new(unitary: ComplexMatrix) -> Result<Self> {
        if !unitary.is_square() {
            return Err(Error::NonSquare {
                rows: unitary.rows(),
                cols: unitary.cols(),
            });
        }
        let deviation = unitary.unitarity_defect();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(LinearNetwork { unitary })
    }

    pub fn identity(modes: usize) -> Self {
        LinearNetwork {
            unitary: ComplexMatrix::identity(modes),
        }
    }

    /// A beam splitter between modes `p` and `q` with mixing angle `theta`
    /// (`π/4` is balanced) and phase `phase` on the reflected path.
    pub fn beam_splitter(modes: usize, p: usize, q: usize, theta: f64, phase: f64) -> Result<Self> {
        if p >= modes || q >= modes || p == q {
            return Err(Error::InvalidParameter(format!(
                "beam splitter modes ({p}, {q}) in a {modes}-mode network"
            )));
        }
        let mut u = ComplexMatrix::identity(modes);
        let (s, c) = theta.sin_cos();
        u[(p, p)] = Complex64::new(c, 0.0);
        u[(q, q)] = Complex64::new(c, 0.0);
        u[(p, q)] = -Complex64::from_polar(s, -phase);
        u[(q, p)] = Complex64::from_polar(s, phase);
        Ok(LinearNetwork { unitary: u })
    }

    /// The network that applies `self` and then `next`.
    pub fn then(&self, next: &LinearNetwork) -> Result<Self> {
        if next.mode_count() != self.mode_count() {
            return Err(Error::ModeMismatch {
                expected: self.mode_count(),
                actual: next.mode_count(),
            });
        }
        LinearNetwork::new(&next.unitary * &self.unitary)
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn mode_count(&self) -> usize {
        self.unitary.rows()
    }
}

/// The fixed circuit of three balanced beam splitters used by both
/// experiments.
pub fn fixed_four_mode_circuit() -> LinearNetwork {
    let a = FRAC_1_SQRT_2;
    let a2 = a * a;
    let u = ComplexMatrix::from_real_rows(&[
        vec![a, -a2, a2, 0.0],
        vec![a, a2, -a2, 0.0],
        vec![0.0, a2, a2, -a],
        vec![0.0, a2, a2, a],
    ])
    .expect("4x4 literal");
    LinearNetwork { unitary: u }
}

fn check_normalized(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > 1e-12 {
        Err(Error::NotNormalized { norm })
    } else {
        Ok(())
    }
}

fn gauge_phase(amps: &[Complex64]) -> f64 {
    amps.iter().find(|z| z.norm() > 0.0).map_or(0.0, |z| z.arg())
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU { 0.0 } else { w }
}

/// `|η⟩ = Σ_ℓ r_ℓ e^{iφ_ℓ} |ℓ⟩` for `ℓ = 0..=N`, with `φ_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl SingleModeState {
    /// Validates normalization and rotates all phases so that `φ_0 = 0`.
    pub fn new(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if r.is_empty() || r.len() != phi.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                actual: phi.len(),
            });
        }
        if r.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
        }
        check_normalized(r.iter().map(|x| x * x).sum())?;
        let shift = phi[0];
        let phi = phi.iter().map(|p| wrap_phase(p - shift)).collect();
        Ok(SingleModeState { r, phi })
    }

    /// Normalizes `amps` and removes the global phase of the vacuum term.
    pub fn from_amplitudes(amps: &[Complex64]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amps.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm: norm * norm });
        }
        let shift = if amps[0].norm() > 0.0 { amps[0].arg() } else { 0.0 };
        let r = amps.iter().map(|z| z.norm() / norm).collect();
        let mut phi: Vec<f64> = amps.iter().map(|z| wrap_phase(z.arg() - shift)).collect();
        phi[0] = 0.0;
        Ok(SingleModeState { r, phi })
    }

    /// The Fock state `|n⟩` truncated at `max_photons`.
    pub fn fock(n: usize, max_photons: usize) -> Self {
        let mut r = vec![0.0; max_photons + 1];
        r[n] = 1.0;
        SingleModeState {
            r,
            phi: vec![0.0; max_photons + 1],
        }
    }

    /// Highest photon number `N`.
    pub fn max_photons(&self) -> usize {
        self.r.len() - 1
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.r.iter().zip(&self.phi).map(|(&r, &p)| Complex64::from_polar(r, p)).collect()
    }
}

/// Two-mode state `Σ_{j,v} r_jv e^{iφ_jv} |j⟩|v⟩` with `j, v = 0..=N`,
/// stored row-major in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim: usize,
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl BipartiteState {
    pub fn new(dim: usize, r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if dim == 0 || r.len() != dim * dim || phi.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: r.len().max(phi.len()),
            });
        }
        if r.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
        }
        check_normalized(r.iter().map(|x| x * x).sum())?;
        let shift = r.iter().position(|&x| x > 0.0).map_or(0.0, |i| phi[i]);
        let phi = phi.iter().map(|p| wrap_phase(p - shift)).collect();
        Ok(BipartiteState { dim, r, phi })
    }

    /// Normalizes and gauge-fixes a row-major coefficient array.
    pub fn from_amplitudes(dim: usize, amps: &[Complex64]) -> Result<Self> {
        if dim == 0 || amps.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm: norm * norm });
        }
        let shift = gauge_phase(amps);
        let r = amps.iter().map(|z| z.norm() / norm).collect();
        let phi = amps
            .iter()
            .map(|z| if z.norm() > 0.0 { wrap_phase(z.arg() - shift) } else { 0.0 })
            .collect();
        let mut s = BipartiteState { dim, r, phi };
        if let Some(first) = s.r.iter().position(|&x| x > 0.0) {
            s.phi[first] = 0.0;
        }
        Ok(s)
    }

    /// Per-subsystem dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn coefficient(&self, j: usize, v: usize) -> Complex64 {
        let i = j * self.dim + v;
        Complex64::from_polar(self.r[i], self.phi[i])
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.r.iter().zip(&self.phi).map(|(&r, &p)| Complex64::from_polar(r, p)).collect()
    }
}

fn i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `i^n e^{-|α|²} |α|^{m+n} / sqrt(m! n!)`: the joint amplitude of `m`
/// photons in the phase-0 reference and `n` in the phase-π/2 reference.
fn reference_amplitude(alpha: f64, m: u32, n: u32) -> Complex64 {
    let modulus = if alpha == 0.0 {
        if m + n == 0 { 1.0 } else { 0.0 }
    } else {
        (-alpha * alpha + (m + n) as f64 * alpha.ln() - 0.5 * (log_factorial(m) + log_factorial(n))).exp()
    };
    i_pow(n) * modulus
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("reference amplitude |α| = {alpha}")))
    }
}

/// Input `|α⟩|0⟩|η⟩|iα⟩`, restricted to at most `s_max` photons. Exactly
/// zero amplitudes are omitted.
pub fn tomography_input(eta: &SingleModeState, alpha: f64, s_max: u32) -> Result<FockAmplitudeState> {
    check_alpha(alpha)?;
    let mut state = FockAmplitudeState::new(CIRCUIT_MODES);
    let etas = eta.amplitudes();
    for (ell, c) in etas.iter().enumerate() {
        let ell = ell as u32;
        if ell > s_max {
            break;
        }
        for m in 0..=(s_max - ell) {
            for n in 0..=(s_max - ell - m) {
                let amp = reference_amplitude(alpha, m, n) * c;
                if amp != Complex64::new(0.0, 0.0) {
                    state.add(ModeConfiguration::new(vec![m, 0, ell, n]), amp)?;
                }
            }
        }
    }
    Ok(state)
}

/// Input `|α⟩|ψ⟩|iα⟩` with the bipartite state in the two middle modes,
/// restricted to at most `s_max` photons.
pub fn entanglement_input(psi: &BipartiteState, alpha: f64, s_max: u32) -> Result<FockAmplitudeState> {
    check_alpha(alpha)?;
    let mut state = FockAmplitudeState::new(CIRCUIT_MODES);
    for j in 0..psi.dim() as u32 {
        for v in 0..psi.dim() as u32 {
            if j + v > s_max {
                continue;
            }
            let c = psi.coefficient(j as usize, v as usize);
            for m in 0..=(s_max - j - v) {
                for n in 0..=(s_max - j - v - m) {
                    let amp = reference_amplitude(alpha, m, n) * c;
                    if amp != Complex64::new(0.0, 0.0) {
                        state.add(ModeConfiguration::new(vec![m, j, v, n]), amp)?;
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Every configuration [`tomography_input`] can populate.
pub fn tomography_support(max_photons: u32, s_max: u32) -> Vec<ModeConfiguration> {
    let mut out = Vec::new();
    for ell in 0..=max_photons.min(s_max) {
        for m in 0..=(s_max - ell) {
            for n in 0..=(s_max - ell - m) {
                out.push(ModeConfiguration::new(vec![m, 0, ell, n]));
            }
        }
    }
    out.sort();
    out
}

/// Every configuration [`entanglement_input`] can populate.
pub fn entanglement_support(max_photons: u32, s_max: u32) -> Vec<ModeConfiguration> {
    let mut out = Vec::new();
    for j in 0..=max_photons {
        for v in 0..=max_photons {
            if j + v > s_max {
                continue;
            }
            for m in 0..=(s_max - j - v) {
                for n in 0..=(s_max - j - v - m) {
                    out.push(ModeConfiguration::new(vec![m, j, v, n]));
                }
            }
        }
    }
    out.sort();
    out
}

/// Output-configuration probabilities for every photon number `s <= s_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDistribution {
    mode_count: usize,
    blocks: Vec<Vec<(ModeConfiguration, f64)>>,
    truncation_defect: f64,
}

impl PatternDistribution {
    fn from_blocks(mode_count: usize, blocks: Vec<Vec<(ModeConfiguration, f64)>>) -> Self {
        let total: f64 = blocks.iter().flatten().map(|(_, p)| p).sum();
        PatternDistribution {
            mode_count,
            blocks,
            truncation_defect: 1.0 - total,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn s_max(&self) -> u32 {
        self.blocks.len() as u32 - 1
    }

    /// Probabilities of the `s`-photon outputs in enumeration order.
    pub fn block(&self, s: u32) -> &[(ModeConfiguration, f64)] {
        &self.blocks[s as usize]
    }

    pub fn probability(&self, config: &ModeConfiguration) -> Option<f64> {
        let block = self.blocks.get(config.total() as usize)?;
        block.binary_search_by(|(c, _)| c.cmp(config)).ok().map(|i| block[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ModeConfiguration, f64)> {
        self.blocks.iter().flatten()
    }

    pub fn total_probability(&self) -> f64 {
        self.iter().map(|(_, p)| p).sum()
    }

    /// `1 - total_probability()`: mass beyond `s_max`.
    pub fn truncation_defect(&self) -> f64 {
        self.truncation_defect
    }

    /// Largest absolute per-configuration difference.
    pub fn max_deviation(&self, other: &PatternDistribution) -> Result<f64> {
        if self.blocks.len() != other.blocks.len() || self.mode_count != other.mode_count {
            return Err(Error::LayoutMismatch(format!(
                "s_max {} vs {}",
                self.s_max(),
                other.s_max()
            )));
        }
        Ok(self
            .iter()
            .zip(other.iter())
            .map(|((_, a), (_, b))| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn check_modes(net: &LinearNetwork, input: &FockAmplitudeState) -> Result<()> {
    if input.mode_count() != net.mode_count() {
        return Err(Error::ModeMismatch {
            expected: net.mode_count(),
            actual: input.mode_count(),
        });
    }
    Ok(())
}

fn terms_by_photon_number(input: &FockAmplitudeState, s_max: u32) -> Vec<Vec<(&ModeConfiguration, Complex64)>> {
    let mut by_s = vec![Vec::new(); s_max as usize + 1];
    for (cfg, &amp) in input.iter() {
        if cfg.total() <= s_max {
            by_s[cfg.total() as usize].push((cfg, amp));
        }
    }
    by_s
}

/// Probabilities `|Σ_I amp(I) <O|U|I>|²` for all outputs `O` with at most
/// `s_max` photons. Inner sums run in configuration order, so results are
/// bit-reproducible.
pub fn output_distribution(
    net: &LinearNetwork,
    input: &FockAmplitudeState,
    s_max: u32,
) -> Result<PatternDistribution> {
    LinearNetwork::new(net.unitary.clone())?;
    check_modes(net, input)?;
    let modes = net.mode_count();
    let by_s = terms_by_photon_number(input, s_max);
    let blocks = (0..=s_max)
        .map(|s| {
            let terms = &by_s[s as usize];
            enumerate_configurations(modes, s)
                .into_par_iter()
                .map(|out| {
                    let mut amp = Complex64::new(0.0, 0.0);
                    for (cfg, a) in terms {
                        amp += a * transition_amplitude(&net.unitary, cfg, &out)?;
                    }
                    Ok((out, amp.norm_sqr()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternDistribution::from_blocks(modes, blocks))
}

/// Same result as [`output_distribution`] computed without permanents: each
/// input term is expanded as a polynomial in creation operators under
/// `a_q† -> Σ_p u[p][q] a_p†` and the monomials are read back as Fock states.
pub fn brute_force_output(
    net: &LinearNetwork,
    input: &FockAmplitudeState,
    s_max: u32,
) -> Result<PatternDistribution> {
    check_modes(net, input)?;
    let modes = net.mode_count();
    let u = net.unitary();
    let mut out_amps: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (cfg, &amp) in input.iter() {
        let photons = cfg.total();
        if photons > s_max {
            continue;
        }
        if photons > MAX_BRUTE_FORCE_PHOTONS {
            return Err(Error::ScaleExceeded {
                photons,
                max: MAX_BRUTE_FORCE_PHOTONS,
            });
        }
        let mut poly: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; modes], Complex64::new(1.0, 0.0));
        for (q, &count) in cfg.counts().iter().enumerate() {
            for _ in 0..count {
                let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
                for (mono, coef) in &poly {
                    for p in 0..modes {
                        let w = u[(p, q)];
                        if w == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut m = mono.clone();
                        m[p] += 1;
                        *next.entry(m).or_default() += coef * w;
                    }
                }
                poly = next;
            }
        }
        let in_fact: f64 = cfg.counts().iter().map(|&n| factorial(n)).product();
        for (mono, coef) in poly {
            let out_fact: f64 = mono.iter().map(|&n| factorial(n)).product();
            *out_amps.entry(mono).or_default() += amp * coef * (out_fact / in_fact).sqrt();
        }
    }
    let blocks = (0..=s_max)
        .map(|s| {
            enumerate_configurations(modes, s)
                .into_iter()
                .map(|c| {
                    let p = out_amps.get(c.counts()).map_or(0.0, |a| a.norm_sqr());
                    (c, p)
                })
                .collect()
        })
        .collect();
    Ok(PatternDistribution::from_blocks(modes, blocks))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

struct CompiledBlock {
    index: HashMap<ModeConfiguration, usize>,
    outputs: Vec<ModeConfiguration>,
    // row-major: outputs x inputs
    table: Vec<Complex64>,
}

/// Transition amplitudes precomputed for a fixed input support, so that
/// many states over the same support cost one matrix-vector product each.
pub struct CompiledCircuit {
    mode_count: usize,
    blocks: Vec<CompiledBlock>,
}

impl CompiledCircuit {
    pub fn new(net: &LinearNetwork, support: &[ModeConfiguration], s_max: u32) -> Result<Self> {
        let modes = net.mode_count();
        let mut inputs: Vec<Vec<ModeConfiguration>> = vec![Vec::new(); s_max as usize + 1];
        for cfg in support {
            if cfg.mode_count() != modes {
                return Err(Error::ModeMismatch {
                    expected: modes,
                    actual: cfg.mode_count(),
                });
            }
            if cfg.total() <= s_max {
                inputs[cfg.total() as usize].push(cfg.clone());
            }
        }
        let blocks = inputs
            .into_iter()
            .enumerate()
            .map(|(s, mut ins)| {
                ins.sort();
                ins.dedup();
                let outputs = enumerate_configurations(modes, s as u32);
                let table = outputs
                    .par_iter()
                    .flat_map_iter(|o| ins.iter().map(move |i| (i, o)))
                    .map(|(i, o)| transition_amplitude(net.unitary(), i, o))
                    .collect::<Result<Vec<_>>>()?;
                let index = ins.into_iter().enumerate().map(|(k, c)| (c, k)).collect();
                Ok(CompiledBlock { index, outputs, table })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledCircuit {
            mode_count: modes,
            blocks,
        })
    }

    pub fn s_max(&self) -> u32 {
        self.blocks.len() as u32 - 1
    }

    /// Output distribution of `input`, whose entries must lie in the support.
    pub fn distribution(&self, input: &FockAmplitudeState) -> Result<PatternDistribution> {
        if input.mode_count() != self.mode_count {
            return Err(Error::ModeMismatch {
                expected: self.mode_count,
                actual: input.mode_count(),
            });
        }
        let mut amps: Vec<Vec<Complex64>> = self
            .blocks
            .iter()
            .map(|b| vec![Complex64::new(0.0, 0.0); b.index.len()])
            .collect();
        for (cfg, &a) in input.iter() {
            let s = cfg.total() as usize;
            if s >= self.blocks.len() {
                continue;
            }
            let k = *self.blocks[s]
                .index
                .get(cfg)
                .ok_or_else(|| Error::UnsupportedConfiguration(cfg.counts().to_vec()))?;
            amps[s][k] = a;
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&amps)
            .map(|(b, v)| {
                let width = v.len();
                b.outputs
                    .iter()
                    .enumerate()
                    .map(|(row, o)| {
                        let coeffs = &b.table[row * width..(row + 1) * width];
                        let amp: Complex64 = coeffs.iter().zip(v).map(|(t, a)| t * a).sum();
                        (o.clone(), amp.norm_sqr())
                    })
                    .collect()
            })
            .collect();
        Ok(PatternDistribution::from_blocks(self.mode_count, blocks))
    }
}

/// Closed-form vacuum and single-photon probabilities for an `N = 1`
/// unknown state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N1Probabilities {
    pub vacuum: f64,
    pub p1000: f64,
    pub p0100: f64,
    pub p0010: f64,
    pub p0001: f64,
}

impl N1Probabilities {
    /// Reads the five probabilities off an engine distribution.
    pub fn from_distribution(dist: &PatternDistribution) -> Option<Self> {
        let get = |c: [u32; 4]| dist.probability(&ModeConfiguration::from(c));
        Some(N1Probabilities {
            vacuum: get([0, 0, 0, 0])?,
            p1000: get([1, 0, 0, 0])?,
            p0100: get([0, 1, 0, 0])?,
            p0010: get([0, 0, 1, 0])?,
            p0001: get([0, 0, 0, 1])?,
        })
    }
}

pub fn analytic_probabilities_n1(r0: f64, r1: f64, phi1: f64, alpha: f64) -> Result<N1Probabilities> {
    check_alpha(alpha)?;
    let norm = r0 * r0 + r1 * r1;
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let pre = (-2.0 * alpha * alpha).exp();
    let base = alpha * alpha * r0 * r0 + 0.5 * r1 * r1;
    let cross = SQRT_2 * alpha * r0 * r1;
    let (s, c) = phi1.sin_cos();
    Ok(N1Probabilities {
        vacuum: pre * r0 * r0,
        p1000: 0.5 * pre * (base + cross * c),
        p0100: 0.5 * pre * (base - cross * c),
        p0010: 0.5 * pre * (base - cross * s),
        p0001: 0.5 * pre * (base + cross * s),
    })
}

/// Threshold on `r0 * r1` below which the relative phase is unobservable.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Tolerance on `P_vac e^{2α²} <= 1` before the input is rejected.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N1Estimate {
    pub r0: f64,
    pub r1: f64,
    /// In `[0, 2π)`; `0` when `degenerate`.
    pub phi1: f64,
    pub degenerate: bool,
}

impl N1Estimate {
    pub fn state(&self) -> SingleModeState {
        let r0 = self.r0.clamp(0.0, 1.0);
        let r1 = (1.0 - r0 * r0).max(0.0).sqrt();
        SingleModeState {
            r: vec![r0, r1],
            phi: vec![0.0, self.phi1],
        }
    }
}

/// Recovers `(r0, r1, φ1)` from the vacuum and single-photon probabilities.
/// The phase comes from the two probability differences, which are
/// proportional to `cos φ1` and `sin φ1`.
pub fn analytic_invert_n1(p: &N1Probabilities, alpha: f64) -> Result<N1Estimate> {
    check_alpha(alpha)?;
    let scale = (2.0 * alpha * alpha).exp();
    let r0_sq = p.vacuum * scale;
    if !(r0_sq >= 0.0) || r0_sq > 1.0 + CONSISTENCY_TOLERANCE {
        return Err(Error::Inconsistent(format!(
            "vacuum probability {} exceeds e^(-2|α|²) = {}",
            p.vacuum,
            1.0 / scale
        )));
    }
    let r0 = r0_sq.min(1.0).sqrt();
    let r1 = (1.0 - r0 * r0).max(0.0).sqrt();
    if alpha == 0.0 || r0 * r1 < DEGENERACY_TOLERANCE {
        return Ok(N1Estimate {
            r0,
            r1,
            phi1: 0.0,
            degenerate: true,
        });
    }
    let cos_part = p.p1000 - p.p0100;
    let sin_part = p.p0001 - p.p0010;
    Ok(N1Estimate {
        r0,
        r1,
        phi1: wrap_phase(sin_part.atan2(cos_part)),
        degenerate: false,
    })
}

/// Closed-form two-photon probabilities for an `N = 2` unknown state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N2Probabilities {
    pub p2000: f64,
    /// The commonly quoted closed form for `|0020⟩`. Its two sine terms have
    /// the opposite sign of what the circuit produces.
    pub p0020: f64,
    /// `|0020⟩` with the sine-term signs the circuit actually produces.
    pub p0020_corrected: f64,
}

pub fn analytic_probabilities_n2(state: &SingleModeState, alpha: f64) -> Result<N2Probabilities> {
    check_alpha(alpha)?;
    if state.max_photons() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: state.r.len(),
        });
    }
    check_normalized(state.r.iter().map(|x| x * x).sum())?;
    let (r0, r1, r2) = (state.r[0], state.r[1], state.r[2]);
    let (phi1, phi2) = (state.phi[1], state.phi[2]);
    let a2 = alpha * alpha;
    let pre = 0.25 * (-2.0 * a2).exp();
    let diag = a2 * a2 * r0 * r0 / 2.0 + a2 * r1 * r1 + r2 * r2 / 4.0;
    let t02 = SQRT_2 * a2 * r0 * r2 * phi2.cos() / 2.0;
    let p2000 = pre * (diag + SQRT_2 * a2 * alpha * r0 * r1 * phi1.cos() + t02 + alpha * r1 * r2 * (phi1 - phi2).cos());
    let sines = SQRT_2 * a2 * alpha * r0 * r1 * phi1.sin() - alpha * r1 * r2 * (phi1 - phi2).sin();
    Ok(N2Probabilities {
        p2000,
        p0020: pre * (diag + sines - t02),
        p0020_corrected: pre * (diag - sines - t02),
    })
}

/// Closed-form permanent of the fixed circuit's submatrix for the two-photon
/// input `|(2-ℓ-n), 0, ℓ, n⟩` and output `|g h k f⟩`.
///
/// Photons from the phase-0 reference reach outputs 0/1 with weight `a`,
/// those from the phase-π/2 reference reach outputs 2/3 with `∓a`, and the
/// `ℓ` unknown-mode photons split `d` up and `q = ℓ - d` down with weight
/// `±a²`. Returns `None` when `input` is not of that form.
pub fn closed_form_two_photon_permanent(input: &ModeConfiguration, output: &ModeConfiguration) -> Option<f64> {
    let (&[m, zero, ell, n], &[g, h, k, f]) = (input.counts(), output.counts()) else {
        return None;
    };
    if zero != 0 || m + ell + n != 2 || g + h + k + f != 2 {
        return None;
    }
    let a = FRAC_1_SQRT_2;
    let sign_k = if k % 2 == 0 { 1.0 } else { -1.0 };
    let fact = |x: u32| factorial(x);
    // x!/(x-y)!, zero when y > x
    let falling = |x: u32, y: u32| if y > x { 0.0 } else { fact(x) / fact(x - y) };
    if ell == 0 {
        return Some(if g + h == 2 - n {
            sign_k * a * a * fact(2 - n) * fact(n)
        } else {
            0.0
        });
    }
    let up = (g + h) as i64 - (2 - ell - n) as i64;
    if up < 0 || up > ell as i64 {
        return Some(0.0);
    }
    let d = up as u32;
    let q = ell - d;
    if k + f != q + n {
        return Some(0.0);
    }
    let upper: f64 = (0..=d)
        .map(|x| {
            let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
            binomial(d as u64, x as u64) as f64 * sign * fact(2 - ell - n) * falling(g, d - x) * falling(h, x)
        })
        .sum();
    let lower: f64 = (0..=q)
        .map(|y| {
            let sign = if y % 2 == 0 { 1.0 } else { -1.0 };
            binomial(q as u64, y as u64) as f64 * sign * fact(n) * falling(f, q - y) * falling(k, y)
        })
        .sum();
    Some(sign_k * binomial(ell as u64, d as u64) as f64 * a.powi(2 + ell as i32) * upper * lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permanent::{build_submatrix, permanent};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{E, PI};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_eta(n: usize, rng: &mut impl Rng) -> SingleModeState {
        let amps: Vec<Complex64> = (0..=n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SingleModeState::from_amplitudes(&amps).unwrap()
    }

    fn random_psi(dim: usize, rng: &mut impl Rng) -> BipartiteState {
        let amps: Vec<Complex64> = (0..dim * dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        BipartiteState::from_amplitudes(dim, &amps).unwrap()
    }

    #[test]
    fn fixed_circuit_entries_and_unitarity() {
        let net = fixed_four_mode_circuit();
        let u = net.unitary();
        assert_eq!(u[(0, 0)].re, FRAC_1_SQRT_2);
        assert_eq!(u[(0, 3)], Complex64::new(0.0, 0.0));
        assert!(u.unitarity_defect() <= 1e-15);
        assert!(LinearNetwork::new(u.clone()).is_ok());
    }

    #[test]
    fn non_unitary_rejected() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(LinearNetwork::new(m), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn beam_splitter_composition_is_unitary() {
        let q = PI / 4.0;
        let net = LinearNetwork::beam_splitter(4, 0, 1, q, 0.0)
            .unwrap()
            .then(&LinearNetwork::beam_splitter(4, 2, 3, q, 0.3).unwrap())
            .unwrap()
            .then(&LinearNetwork::beam_splitter(4, 1, 2, q, 0.0).unwrap())
            .unwrap();
        assert!(net.unitary().unitarity_defect() < 1e-14);
        assert!(LinearNetwork::beam_splitter(4, 1, 1, q, 0.0).is_err());
    }

    #[test]
    fn tomography_input_vacuum() {
        let eta = SingleModeState::fock(0, 1);
        let s = tomography_input(&eta, 0.0, 2).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(&ModeConfiguration::vacuum(4)), Some(Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn tomography_input_single_photon_term() {
        let eta = SingleModeState::new(vec![0.6, 0.8], vec![0.0, 0.7]).unwrap();
        let s = tomography_input(&eta, 1.0, 3).unwrap();
        let amp = s.get(&ModeConfiguration::from([0, 0, 1, 0])).unwrap();
        let expected = Complex64::from_polar((-1.0f64).exp() * 0.8, 0.7);
        assert!((amp - expected).norm() < 1e-15);
        // phase-π/2 reference contributes a factor of i per photon
        let amp = s.get(&ModeConfiguration::from([0, 0, 0, 1])).unwrap();
        assert!((amp - Complex64::new(0.0, 0.6 / E)).norm() < 1e-15);
    }

    #[test]
    fn tomography_input_norm_is_poisson_partial_sum() {
        let eta = SingleModeState::fock(0, 1);
        let s = tomography_input(&eta, 1.0, 12).unwrap();
        let mut series = 0.0;
        for m in 0..=12u32 {
            for n in 0..=(12 - m) {
                series += 1.0 / (factorial(m) * factorial(n));
            }
        }
        let expected = (-2.0f64).exp() * series;
        assert!((s.squared_norm() - expected).abs() < 1e-14);
        // P(Poisson(2) > 12) ≈ 2.0e-7
        let defect = 1.0 - s.squared_norm();
        assert!(defect > 1.9e-7 && defect < 2.1e-7, "{defect}");
    }

    #[test]
    fn entanglement_input_cases() {
        let psi = BipartiteState::new(2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        let s = entanglement_input(&psi, 0.0, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(&ModeConfiguration::vacuum(4)), Some(Complex64::new(1.0, 0.0)));

        let h = FRAC_1_SQRT_2;
        let bell = BipartiteState::new(2, vec![0.0, h, h, 0.0], vec![0.0; 4]).unwrap();
        let s = entanglement_input(&bell, 0.0, 2).unwrap();
        assert_eq!(s.len(), 2);
        for (_, a) in s.iter() {
            assert!((a - Complex64::new(h, 0.0)).norm() < 1e-15);
        }
        assert!(s.get(&ModeConfiguration::from([0, 0, 1, 0])).is_some());
        assert!(s.get(&ModeConfiguration::from([0, 1, 0, 0])).is_some());
    }

    #[test]
    fn entanglement_input_norm_close_to_one() {
        let mut r = rng(4);
        for _ in 0..10 {
            let psi = random_psi(2, &mut r);
            let s = entanglement_input(&psi, 1.0, 12).unwrap();
            // worst case: all weight on |11⟩, defect P(Poisson(2) > 10) ≈ 8.3e-6
            assert!((1.0 - s.squared_norm()) < 8.4e-6);
            assert!(s.squared_norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn identity_network_passes_input_through() {
        let mut r = rng(8);
        let eta = random_eta(2, &mut r);
        let input = tomography_input(&eta, 0.5, 4).unwrap();
        let dist = output_distribution(&LinearNetwork::identity(4), &input, 4).unwrap();
        for (cfg, p) in dist.iter() {
            let expected = input.get(cfg).map_or(0.0, |a| a.norm_sqr());
            assert!((p - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn vacuum_unknown_vacuum_probability() {
        let eta = SingleModeState::fock(0, 1);
        let input = tomography_input(&eta, 1.0, 3).unwrap();
        let dist = output_distribution(&fixed_four_mode_circuit(), &input, 3).unwrap();
        let p = dist.probability(&ModeConfiguration::vacuum(4)).unwrap();
        assert!((p - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_photon_without_references_spreads_evenly() {
        let eta = SingleModeState::fock(1, 1);
        let input = tomography_input(&eta, 0.0, 1).unwrap();
        let dist = output_distribution(&fixed_four_mode_circuit(), &input, 1).unwrap();
        for (_, p) in dist.block(1) {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!(dist.truncation_defect().abs() < 1e-15);
    }

    #[test]
    fn brute_force_small_cases() {
        let bs = LinearNetwork::beam_splitter(2, 0, 1, PI / 4.0, 0.0).unwrap();
        let mut input = FockAmplitudeState::new(2);
        input.add(ModeConfiguration::from([1, 0]), Complex64::new(1.0, 0.0)).unwrap();
        let dist = brute_force_output(&bs, &input, 1).unwrap();
        for (_, p) in dist.block(1) {
            assert!((p - 0.5).abs() < 1e-15);
        }

        let mut vac = FockAmplitudeState::new(4);
        vac.add(ModeConfiguration::vacuum(4), Complex64::new(1.0, 0.0)).unwrap();
        let dist = brute_force_output(&fixed_four_mode_circuit(), &vac, 2).unwrap();
        assert_eq!(dist.probability(&ModeConfiguration::vacuum(4)), Some(1.0));
        assert!(dist.truncation_defect().abs() < 1e-15);
    }

    #[test]
    fn brute_force_scale_limit() {
        let mut big = FockAmplitudeState::new(4);
        big.add(ModeConfiguration::from([11, 0, 0, 0]), Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            brute_force_output(&fixed_four_mode_circuit(), &big, 12),
            Err(Error::ScaleExceeded { photons: 11, .. })
        ));
    }

    #[test]
    fn engine_matches_brute_force() {
        let net = fixed_four_mode_circuit();
        let mut r = rng(21);
        for alpha in [0.0, 0.5, 1.0] {
            let eta = random_eta(2, &mut r);
            let input = tomography_input(&eta, alpha, 4).unwrap();
            let a = output_distribution(&net, &input, 4).unwrap();
            let b = brute_force_output(&net, &input, 4).unwrap();
            assert!(a.max_deviation(&b).unwrap() < 1e-10);

            let psi = random_psi(2, &mut r);
            let input = entanglement_input(&psi, alpha, 4).unwrap();
            let a = output_distribution(&net, &input, 4).unwrap();
            let b = brute_force_output(&net, &input, 4).unwrap();
            assert!(a.max_deviation(&b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn photon_number_is_conserved() {
        let net = fixed_four_mode_circuit();
        let mut input = FockAmplitudeState::new(4);
        for (cfg, a) in [([2u32, 0, 1, 0], 0.6), ([0, 0, 1, 2], 0.8)] {
            input.add(ModeConfiguration::from(cfg), Complex64::new(a, 0.0)).unwrap();
        }
        let dist = output_distribution(&net, &input, 5).unwrap();
        let in_block: f64 = dist.block(3).iter().map(|(_, p)| p).sum();
        assert!((in_block - 1.0).abs() < 1e-12);
        for s in [0, 1, 2, 4, 5] {
            assert!(dist.block(s).iter().all(|(_, p)| *p < 1e-28));
        }
    }

    #[test]
    fn truncation_defect_decreases_with_s_max() {
        let net = fixed_four_mode_circuit();
        let eta = random_eta(1, &mut rng(2));
        let mut last = f64::INFINITY;
        for s_max in 0..=8 {
            let input = tomography_input(&eta, 1.0, s_max).unwrap();
            let dist = output_distribution(&net, &input, s_max).unwrap();
            assert!(dist.truncation_defect() < last);
            assert!((dist.total_probability() + dist.truncation_defect() - 1.0).abs() < 1e-9);
            last = dist.truncation_defect();
        }
    }

    #[test]
    fn compiled_circuit_matches_direct_engine() {
        let net = fixed_four_mode_circuit();
        let mut r = rng(5);
        let tomo = CompiledCircuit::new(&net, &tomography_support(2, 5), 5).unwrap();
        let ent = CompiledCircuit::new(&net, &entanglement_support(1, 5), 5).unwrap();
        for _ in 0..5 {
            let input = tomography_input(&random_eta(2, &mut r), 1.0, 5).unwrap();
            let a = tomo.distribution(&input).unwrap();
            let b = output_distribution(&net, &input, 5).unwrap();
            assert!(a.max_deviation(&b).unwrap() < 1e-14);

            let input = entanglement_input(&random_psi(2, &mut r), 1.0, 5).unwrap();
            let a = ent.distribution(&input).unwrap();
            let b = output_distribution(&net, &input, 5).unwrap();
            assert!(a.max_deviation(&b).unwrap() < 1e-14);
        }
        let input = tomography_input(&random_eta(3, &mut r), 1.0, 5).unwrap();
        assert!(matches!(tomo.distribution(&input), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn n1_closed_form_examples() {
        let p = analytic_probabilities_n1(1.0, 0.0, 0.0, 1.0).unwrap();
        let e2 = (-2.0f64).exp();
        assert!((p.vacuum - e2).abs() < 1e-16);
        for x in [p.p1000, p.p0100, p.p0010, p.p0001] {
            assert!((x - 0.5 * e2).abs() < 1e-16);
        }
        let p = analytic_probabilities_n1(0.0, 1.0, 1.3, 0.0).unwrap();
        assert!((p.p1000 - 0.25).abs() < 1e-16);
        let h = FRAC_1_SQRT_2;
        let p = analytic_probabilities_n1(h, h, 0.0, 1.0).unwrap();
        let expected = 0.5 * e2 * (0.5 + 0.25 + SQRT_2 / 2.0);
        assert!((p.p1000 - expected).abs() < 1e-16);
        assert!((p.p1000 - 0.098_599).abs() < 1e-6);
        assert!(matches!(
            analytic_probabilities_n1(0.5, 0.5, 0.0, 1.0),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn n1_closed_form_matches_engine() {
        let net = fixed_four_mode_circuit();
        let mut r = rng(31);
        for _ in 0..20 {
            let eta = random_eta(1, &mut r);
            let alpha = r.random_range(0.0..1.5);
            let dist = output_distribution(&net, &tomography_input(&eta, alpha, 1).unwrap(), 1).unwrap();
            let engine = N1Probabilities::from_distribution(&dist).unwrap();
            let closed = analytic_probabilities_n1(eta.r()[0], eta.r()[1], eta.phi()[1], alpha).unwrap();
            for (a, b) in [
                (engine.vacuum, closed.vacuum),
                (engine.p1000, closed.p1000),
                (engine.p0100, closed.p0100),
                (engine.p0010, closed.p0010),
                (engine.p0001, closed.p0001),
            ] {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn n1_inversion_round_trips() {
        let p = analytic_probabilities_n1(0.8, 0.6, 1.2, 1.0).unwrap();
        let est = analytic_invert_n1(&p, 1.0).unwrap();
        assert!(!est.degenerate);
        assert!((est.r0 - 0.8).abs() < 1e-8);
        assert!((est.r1 - 0.6).abs() < 1e-8);
        assert!((est.phi1 - 1.2).abs() < 1e-8);

        let h = FRAC_1_SQRT_2;
        let p = analytic_probabilities_n1(h, h, PI, 1.0).unwrap();
        let est = analytic_invert_n1(&p, 1.0).unwrap();
        assert!((est.phi1 - PI).abs() < 1e-8);
    }

    #[test]
    fn n1_inversion_degenerate_and_inconsistent() {
        let p = analytic_probabilities_n1(1.0, 0.0, 0.0, 1.0).unwrap();
        let est = analytic_invert_n1(&p, 1.0).unwrap();
        assert!(est.degenerate);
        assert!((est.r0 - 1.0).abs() < 1e-12);
        assert_eq!(est.phi1, 0.0);

        let mut bad = p;
        bad.vacuum = 1.5 * (-2.0f64).exp();
        assert!(matches!(analytic_invert_n1(&bad, 1.0), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn n2_closed_form_examples() {
        let e2 = (-2.0f64).exp();
        let vac = SingleModeState::fock(0, 2);
        let p = analytic_probabilities_n2(&vac, 1.0).unwrap();
        assert!((p.p2000 - e2 / 8.0).abs() < 1e-16);
        let two = SingleModeState::fock(2, 2);
        for alpha in [0.0, 0.4, 1.0] {
            let p = analytic_probabilities_n2(&two, alpha).unwrap();
            assert!((p.p2000 - (-2.0 * alpha * alpha).exp() / 16.0).abs() < 1e-16);
        }
    }

    #[test]
    fn n2_closed_forms_against_engine() {
        let net = fixed_four_mode_circuit();
        let mut r = rng(77);
        let mut printed_gap: f64 = 0.0;
        for _ in 0..20 {
            let eta = random_eta(2, &mut r);
            let dist = output_distribution(&net, &tomography_input(&eta, 1.0, 2).unwrap(), 2).unwrap();
            let p = analytic_probabilities_n2(&eta, 1.0).unwrap();
            let e2000 = dist.probability(&ModeConfiguration::from([2, 0, 0, 0])).unwrap();
            let e0020 = dist.probability(&ModeConfiguration::from([0, 0, 2, 0])).unwrap();
            assert!((p.p2000 - e2000).abs() < 1e-10);
            assert!((p.p0020_corrected - e0020).abs() < 1e-10);
            printed_gap = printed_gap.max((p.p0020 - e0020).abs());
        }
        // the uncorrected |0020⟩ form does not describe this circuit
        assert!(printed_gap > 1e-3);
    }

    #[test]
    fn two_photon_permanent_closed_forms() {
        let u = fixed_four_mode_circuit();
        let inputs: Vec<ModeConfiguration> = enumerate_configurations(4, 2)
            .into_iter()
            .filter(|c| c.counts()[1] == 0)
            .collect();
        assert_eq!(inputs.len(), 6);
        for i in &inputs {
            for o in enumerate_configurations(4, 2) {
                let per = permanent(&build_submatrix(u.unitary(), i, &o).unwrap()).unwrap();
                let closed = closed_form_two_photon_permanent(i, &o).unwrap();
                assert!((per - Complex64::new(closed, 0.0)).norm() < 1e-12, "{i:?} -> {o:?}");
            }
        }
        let a = FRAC_1_SQRT_2;
        let per = |i: [u32; 4], o: [u32; 4]| {
            permanent(&build_submatrix(u.unitary(), &i.into(), &o.into()).unwrap()).unwrap().re
        };
        // worked single-output examples
        assert!((per([1, 0, 1, 0], [2, 0, 0, 0]) - a.powi(3) * 2.0).abs() < 1e-15);
        assert!((per([0, 0, 2, 0], [1, 0, 0, 1]) - 2.0 * a.powi(4)).abs() < 1e-15);
        assert!((per([0, 0, 2, 0], [0, 1, 1, 0]) + 2.0 * a.powi(4)).abs() < 1e-15);
        assert!(closed_form_two_photon_permanent(&[0, 1, 1, 0].into(), &[2, 0, 0, 0].into()).is_none());
    }
}
