//! Independent reference implementations used only by tests.
#![allow(dead_code, clippy::needless_range_loop)]

use fockprint::Complex64;
use rand::Rng;

/// Permanent as the plain sum over all permutations.
pub fn naive_permanent(a: &[Vec<Complex64>]) -> Complex64 {
    fn go(a: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == a.len() {
            return Complex64::new(1.0, 0.0);
        }
        let mut total = Complex64::new(0.0, 0.0);
        for col in 0..a.len() {
            if !used[col] {
                used[col] = true;
                total += a[row][col] * go(a, row + 1, used);
                used[col] = false;
            }
        }
        total
    }
    go(a, 0, &mut vec![false; a.len()])
}

pub fn random_complex_rows(n: usize, rng: &mut impl Rng) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect()
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Eigenvalues of a Hermitian matrix via its real embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is the original one doubled.
pub fn hermitian_eigenvalues(h: &[Vec<Complex64>]) -> Vec<f64> {
    let n = h.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            big[i][j] = h[i][j].re;
            big[i + n][j + n] = h[i][j].re;
            big[i][j + n] = -h[i][j].im;
            big[i + n][j] = h[i][j].im;
        }
    }
    let mut ev = jacobi_eigenvalues(big);
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter().step_by(2).collect()
}

/// `-Σ λ ln λ` over eigenvalues of the reduced state of the first mode,
/// built directly from the coefficient matrix `c[j][v]`.
pub fn entropy_oracle(c: &[Vec<Complex64>]) -> f64 {
    let d = c.len();
    let rho: Vec<Vec<Complex64>> = (0..d)
        .map(|j| (0..d).map(|k| (0..d).map(|v| c[j][v] * c[k][v].conj()).sum()).collect())
        .collect();
    hermitian_eigenvalues(&rho)
        .into_iter()
        .filter(|&l| l > 1e-15)
        .map(|l| -l * l.ln())
        .sum()
}
