//! Pure-state fidelity, reduced density matrices and entanglement entropy.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{BipartiteState, SingleModeState};
use crate::error::{Error, Result};

/// Eigenvalues (or squared Schmidt coefficients) below this are dropped from
/// entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-15;

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &SingleModeState, b: &SingleModeState) -> Result<f64> {
    if a.max_photons() != b.max_photons() {
        return Err(Error::DimensionMismatch {
            expected: a.max_photons() + 1,
            actual: b.max_photons() + 1,
        });
    }
    let overlap: Complex64 = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(overlap.norm_sqr().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// The first mode of the pair (index `j`).
    A,
    /// The second mode of the pair (index `v`).
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// `-Tr(ρ ln ρ)` from a dense Hermitian eigendecomposition.
    pub fn von_neumann_entropy(&self) -> f64 {
        entropy_of_spectrum(self.eigenvalues())
    }
}

fn entropy_of_spectrum(weights: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = weights
        .into_iter()
        .filter(|&l| l >= ENTROPY_CUTOFF)
        .map(|l| -l * l.ln())
        .sum();
    s.max(0.0)
}

fn coefficient_matrix(psi: &BipartiteState) -> DMatrix<Complex64> {
    let d = psi.dim();
    DMatrix::from_fn(d, d, |j, v| psi.coefficient(j, v))
}

/// Reduced state of one mode: `(ρ_A)_{jj'} = Σ_v c_{jv} c*_{j'v}`, and the
/// symmetric sum over `j` for `ρ_B`.
pub fn reduced_density(psi: &BipartiteState, keep: Subsystem) -> DensityMatrix {
    let c = coefficient_matrix(psi);
    let entries = match keep {
        Subsystem::A => &c * c.adjoint(),
        Subsystem::B => c.transpose() * c.map(|z| z.conj()),
    };
    DensityMatrix { entries }
}

/// Squared Schmidt coefficients, descending.
pub fn schmidt_weights(psi: &BipartiteState) -> Vec<f64> {
    let sv = coefficient_matrix(psi).singular_values();
    let mut w: Vec<f64> = sv.iter().map(|s| s * s).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

/// Von Neumann entropy (nats) of either reduced state, computed from the
/// singular values of the coefficient matrix.
pub fn entanglement_entropy(psi: &BipartiteState) -> Result<f64> {
    let norm: f64 = psi.r().iter().map(|x| x * x).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(entropy_of_spectrum(schmidt_weights(psi)))
}
