//! Fock-space bookkeeping: mode configurations, coherent-state amplitudes
//! and factorials.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discarded Poisson tail allowed when choosing a coherent-state cutoff.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Photon counts per optical mode.
///
/// Ordering is lexicographic on the count tuple, which is also the order
/// produced by [`enumerate_configurations`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeConfiguration(Vec<u32>);

impl ModeConfiguration {
    pub fn new(counts: Vec<u32>) -> Self {
        ModeConfiguration(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        ModeConfiguration(vec![0; modes])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Photons in modes `1..=ell` (1-based), with `prefix_sum(0) == 0`.
    pub fn prefix_sum(&self, ell: usize) -> u32 {
        self.0[..ell].iter().sum()
    }

    /// 0-based mode index of each photon, photons of lower modes first.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &n)| std::iter::repeat_n(mode, n as usize))
            .collect()
    }

    /// `ln(prod_k counts_k!)`.
    pub fn log_factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| log_factorial(n)).sum()
    }
}

impl fmt::Debug for ModeConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl From<Vec<u32>> for ModeConfiguration {
    fn from(v: Vec<u32>) -> Self {
        ModeConfiguration(v)
    }
}

impl<const M: usize> From<[u32; M]> for ModeConfiguration {
    fn from(v: [u32; M]) -> Self {
        ModeConfiguration(v.to_vec())
    }
}

/// All compositions of `photons` into `modes` parts, ascending lexicographic.
///
/// This order defines the feature layout of every dataset, so it must not
/// change without bumping [`crate::dataset::FEATURE_ORDER_VERSION`].
pub fn enumerate_configurations(modes: usize, photons: u32) -> Vec<ModeConfiguration> {
    assert!(modes >= 1, "at least one mode is required");
    let mut out = Vec::with_capacity(binomial(photons as u64 + modes as u64 - 1, modes as u64 - 1) as usize);
    let mut current = vec![0u32; modes];
    fill_compositions(&mut current, 0, photons, &mut out);
    out
}

fn fill_compositions(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<ModeConfiguration>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(ModeConfiguration(current.clone()));
        return;
    }
    for n in 0..=remaining {
        current[pos] = n;
        fill_compositions(current, pos + 1, remaining - n, out);
    }
}

/// Number of configurations of `photons` photons in `modes` modes.
pub fn configuration_count(modes: usize, photons: u32) -> usize {
    binomial(photons as u64 + modes as u64 - 1, modes as u64 - 1) as usize
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `ln(n!)`, exact up to `n = 20` and accumulated in log space above.
pub fn log_factorial(n: u32) -> f64 {
    if n <= 20 {
        let fact: u64 = (1..=n as u64).product();
        (fact as f64).ln()
    } else {
        let exact20 = (1..=20u64).product::<u64>() as f64;
        exact20.ln() + (21..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// A truncated coherent state `|α e^{iθ}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub magnitude: f64,
    pub phase: f64,
    pub cutoff: u32,
}

impl CoherentSpec {
    /// Coherent state with the cutoff chosen for [`DEFAULT_TAIL_TOLERANCE`].
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        Self::with_tail_tolerance(magnitude, phase, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tail_tolerance(magnitude: f64, phase: f64, tail_tolerance: f64) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("coherent magnitude {magnitude}")));
        }
        if !(tail_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tail tolerance {tail_tolerance}")));
        }
        let mut cutoff = 0;
        while poisson_tail(magnitude * magnitude, cutoff) >= tail_tolerance {
            cutoff += 1;
        }
        Ok(CoherentSpec {
            magnitude,
            phase,
            cutoff,
        })
    }

    pub fn with_cutoff(magnitude: f64, phase: f64, cutoff: u32) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("coherent magnitude {magnitude}")));
        }
        Ok(CoherentSpec {
            magnitude,
            phase,
            cutoff,
        })
    }

    /// Probability mass beyond the cutoff.
    pub fn discarded_tail(&self) -> f64 {
        poisson_tail(self.magnitude * self.magnitude, self.cutoff)
    }
}

/// Natural log of the Poisson weight `e^{-mean} mean^n / n!`.
pub(crate) fn log_poisson_weight(mean: f64, n: u32) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + n as f64 * mean.ln() - log_factorial(n)
}

/// `sum_{k > cutoff} e^{-mean} mean^k / k!`, summed directly from the tail
/// side so small values do not cancel against 1.
pub fn poisson_tail(mean: f64, cutoff: u32) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut k = cutoff + 1;
    loop {
        let term = log_poisson_weight(mean, k).exp();
        total += term;
        if (k as f64) > mean && term < total * 1e-17 {
            break;
        }
        if term == 0.0 && (k as f64) > mean {
            break;
        }
        k += 1;
    }
    total
}

/// Fock amplitudes `e^{-|α|²/2} e^{inθ} |α|^n / sqrt(n!)` for `n = 0..=cutoff`.
pub fn coherent_amplitudes(spec: &CoherentSpec) -> Vec<Complex64> {
    let mean = spec.magnitude * spec.magnitude;
    (0..=spec.cutoff)
        .map(|n| {
            let modulus = (0.5 * log_poisson_weight(mean, n)).exp();
            Complex64::from_polar(modulus, n as f64 * spec.phase)
        })
        .collect()
}

/// Sparse superposition over mode configurations sharing one mode count.
#[derive(Debug, Clone, PartialEq)]
pub struct FockAmplitudeState {
    mode_count: usize,
    amplitudes: BTreeMap<ModeConfiguration, Complex64>,
}

impl FockAmplitudeState {
    pub fn new(mode_count: usize) -> Self {
        FockAmplitudeState {
            mode_count,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Adds `amplitude` to the entry for `config`.
    pub fn add(&mut self, config: ModeConfiguration, amplitude: Complex64) -> Result<()> {
        if config.mode_count() != self.mode_count {
            return Err(Error::ModeMismatch {
                expected: self.mode_count,
                actual: config.mode_count(),
            });
        }
        *self.amplitudes.entry(config).or_default() += amplitude;
        Ok(())
    }

    pub fn get(&self, config: &ModeConfiguration) -> Option<Complex64> {
        self.amplitudes.get(config).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeConfiguration, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_photons(&self) -> u32 {
        self.amplitudes.keys().map(|c| c.total()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;
    use std::f64::consts::FRAC_PI_2;

    fn cfgs(v: &[&[u32]]) -> Vec<ModeConfiguration> {
        v.iter().map(|c| ModeConfiguration::new(c.to_vec())).collect()
    }

    #[test]
    fn enumerate_small_cases() {
        assert_eq!(enumerate_configurations(2, 0), cfgs(&[&[0, 0]]));
        assert_eq!(enumerate_configurations(2, 1), cfgs(&[&[0, 1], &[1, 0]]));
        assert_eq!(enumerate_configurations(4, 2).len(), 10);
        assert_eq!(enumerate_configurations(1, 3), cfgs(&[&[3]]));
    }

    #[test]
    fn enumeration_is_sorted_and_stable() {
        let a = enumerate_configurations(4, 5);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(a, sorted);
        assert_eq!(a, enumerate_configurations(4, 5));
        // frozen head of the s = 2 block; part of the on-disk feature layout
        assert_eq!(
            &enumerate_configurations(4, 2)[..4],
            &cfgs(&[&[0, 0, 0, 2], &[0, 0, 1, 1], &[0, 0, 2, 0], &[0, 1, 0, 1]])[..]
        );
    }

    proptest! {
        #[test]
        fn enumeration_counts(modes in 1usize..6, photons in 0u32..8) {
            let all = enumerate_configurations(modes, photons);
            prop_assert_eq!(all.len() as u64, binomial(photons as u64 + modes as u64 - 1, modes as u64 - 1));
            prop_assert_eq!(all.len(), configuration_count(modes, photons));
            let unique: HashSet<_> = all.iter().cloned().collect();
            prop_assert_eq!(unique.len(), all.len());
            for c in &all {
                prop_assert_eq!(c.total(), photons);
                prop_assert_eq!(c.mode_count(), modes);
            }
        }

        #[test]
        fn coherent_partial_sums_monotone(mag in 0.0f64..3.0, phase in 0.0f64..6.3) {
            let spec = CoherentSpec::new(mag, phase).unwrap();
            let mut acc = 0.0;
            for a in coherent_amplitudes(&spec) {
                let next = acc + a.norm_sqr();
                prop_assert!(next >= acc);
                acc = next;
            }
            prop_assert!(acc <= 1.0 + 1e-12);
            prop_assert!(1.0 - acc < DEFAULT_TAIL_TOLERANCE + 1e-14);
        }
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert_eq!(log_factorial(5), 120f64.ln());
        let via_sum: f64 = (1..=30).map(|k| (k as f64).ln()).sum();
        assert!((log_factorial(30) - via_sum).abs() < 1e-12);
    }

    #[test]
    fn coherent_vacuum() {
        let spec = CoherentSpec::with_cutoff(0.0, 0.0, 3).unwrap();
        let amps = coherent_amplitudes(&spec);
        assert_eq!(amps.len(), 4);
        assert_eq!(amps[0], Complex64::new(1.0, 0.0));
        assert!(amps[1..].iter().all(|a| a.norm() == 0.0));
        assert_eq!(CoherentSpec::new(0.0, 0.0).unwrap().cutoff, 0);
    }

    #[test]
    fn coherent_quarter_phase() {
        let spec = CoherentSpec::with_cutoff(1.0, FRAC_PI_2, 1).unwrap();
        let amps = coherent_amplitudes(&spec);
        let e = (-0.5f64).exp();
        assert!((amps[0] - Complex64::new(e, 0.0)).norm() < 1e-15);
        assert!((amps[1] - Complex64::new(0.0, e)).norm() < 1e-15);
    }

    #[test]
    fn coherent_normalization() {
        let spec = CoherentSpec::with_cutoff(1.0, 0.0, 20).unwrap();
        let total: f64 = coherent_amplitudes(&spec).iter().map(|a| a.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_meets_tail_tolerance() {
        let spec = CoherentSpec::new(1.0, 0.0).unwrap();
        assert!(spec.discarded_tail() < DEFAULT_TAIL_TOLERANCE);
        let shorter = CoherentSpec::with_cutoff(1.0, 0.0, spec.cutoff - 1).unwrap();
        assert!(shorter.discarded_tail() >= DEFAULT_TAIL_TOLERANCE);
    }

    #[test]
    fn prefix_sums() {
        let c = ModeConfiguration::from([0, 1, 0, 2]);
        let sums: Vec<u32> = (0..=4).map(|l| c.prefix_sum(l)).collect();
        assert_eq!(sums, vec![0, 0, 1, 1, 3]);
        assert_eq!(c.photon_modes(), vec![1, 3, 3]);
    }

    #[test]
    fn amplitude_state_rejects_wrong_modes() {
        let mut s = FockAmplitudeState::new(4);
        assert!(s.add(ModeConfiguration::from([1, 0]), Complex64::new(1.0, 0.0)).is_err());
        s.add(ModeConfiguration::from([1, 0, 0, 0]), Complex64::new(0.6, 0.0)).unwrap();
        s.add(ModeConfiguration::from([0, 0, 0, 1]), Complex64::new(0.0, 0.8)).unwrap();
        assert!((s.squared_norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.max_photons(), 1);
    }
}
