//! Matrix permanents and the photon-transition submatrix.
//!
//! Unitaries use the column convention: `u[(p, q)]` is the amplitude for a
//! photon entering mode `q` to leave in mode `p`.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{binomial, ModeConfiguration};

/// Largest matrix accepted by [`permanent`].
pub const MAX_PERMANENT_SIZE: usize = 25;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(ComplexMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        for z in &mut t.data {
            *z = z.conj();
        }
        t
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = &self.adjoint() * self;
        let id = Self::identity(self.rows);
        prod.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order
/// so each step updates the row sums with a single column.
pub fn permanent(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    if n > MAX_PERMANENT_SIZE {
        return Err(Error::SizeExceeded(n));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        if gray & (1 << j) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[(i, j)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[(i, j)];
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        if (n - gray.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

fn check_pair(u: &ComplexMatrix, input: &ModeConfiguration, output: &ModeConfiguration) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NonSquare {
            rows: u.rows,
            cols: u.cols,
        });
    }
    for c in [input, output] {
        if c.mode_count() != u.rows {
            return Err(Error::ModeMismatch {
                expected: u.rows,
                actual: c.mode_count(),
            });
        }
    }
    if input.total() != output.total() {
        return Err(Error::PhotonMismatch {
            input: input.total(),
            output: output.total(),
        });
    }
    Ok(())
}

/// The `N x N` matrix whose row `j` belongs to the output mode owning photon
/// `j` and whose column `k` belongs to the input mode owning photon `k`.
pub fn build_submatrix(
    u: &ComplexMatrix,
    input: &ModeConfiguration,
    output: &ModeConfiguration,
) -> Result<ComplexMatrix> {
    check_pair(u, input, output)?;
    let rows = output.photon_modes();
    let cols = input.photon_modes();
    let n = rows.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, &p) in rows.iter().enumerate() {
        for (k, &q) in cols.iter().enumerate() {
            m[(j, k)] = u[(p, q)];
        }
    }
    Ok(m)
}

/// Permanent of the submatrix of `u` with row `p` repeated `row_counts[p]`
/// times and column `q` repeated `col_counts[q]` times.
///
/// Ryser's sum collapses over identical columns: choosing `k_q` of the
/// `I_q` copies of column `q` contributes `C(I_q, k_q)` identical terms. The
/// cost is `prod (I_q + 1)`, and the cheaper of rows/columns is expanded.
pub fn permanent_repeated(u: &ComplexMatrix, row_counts: &[u32], col_counts: &[u32]) -> Complex64 {
    let row_terms: u64 = row_counts.iter().map(|&c| c as u64 + 1).product();
    let col_terms: u64 = col_counts.iter().map(|&c| c as u64 + 1).product();
    if row_terms < col_terms {
        repeated_ryser(row_counts, col_counts, |p, q| u[(p, q)])
    } else {
        repeated_ryser(col_counts, row_counts, |q, p| u[(p, q)])
    }
}

// Expands over subsets of the `expand` side; `entry(e, f)` is the matrix
// element between expanded index `e` and fixed index `f`.
fn repeated_ryser(expand: &[u32], fixed: &[u32], entry: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    let n: u32 = expand.iter().sum();
    let active: Vec<usize> = (0..expand.len()).filter(|&e| expand[e] > 0).collect();
    let targets: Vec<usize> = (0..fixed.len()).filter(|&f| fixed[f] > 0).collect();
    let mut chosen = vec![0u32; active.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let picked: u32 = chosen.iter().sum();
        let mut weight = 1.0;
        for (slot, &e) in active.iter().enumerate() {
            weight *= binomial(expand[e] as u64, chosen[slot] as u64) as f64;
        }
        let mut prod = Complex64::new(weight, 0.0);
        for &f in &targets {
            let mut s = Complex64::new(0.0, 0.0);
            for (slot, &e) in active.iter().enumerate() {
                if chosen[slot] > 0 {
                    s += entry(e, f) * chosen[slot] as f64;
                }
            }
            prod *= s.powu(fixed[f]);
        }
        if (n - picked).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }

        // mixed-radix increment
        let mut slot = 0;
        loop {
            if slot == active.len() {
                return total;
            }
            if chosen[slot] < expand[active[slot]] {
                chosen[slot] += 1;
                break;
            }
            chosen[slot] = 0;
            slot += 1;
        }
    }
}

/// `<output| U |input>` for Fock configurations:
/// `Per(Λ) / sqrt(prod I_k! prod O_k!)`.
pub fn transition_amplitude(
    u: &ComplexMatrix,
    input: &ModeConfiguration,
    output: &ModeConfiguration,
) -> Result<Complex64> {
    check_pair(u, input, output)?;
    let per = permanent_repeated(u, output.counts(), input.counts());
    let norm = (-0.5 * (input.log_factorial_product() + output.log_factorial_product())).exp();
    Ok(per * norm)
}
