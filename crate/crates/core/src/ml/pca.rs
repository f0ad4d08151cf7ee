use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_width, matrix_width};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Retained principal axes, one orthonormal row each.
    pub components: Vec<Vec<f64>>,
    /// Explained variance ratio of every axis (retained or not), descending.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn retained_variance(&self) -> f64 {
        self.explained_variance_ratio[..self.n_components()].iter().sum()
    }

    /// Projects centered rows onto the retained axes.
    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(x, self.n_features())?;
        Ok(x.iter()
            .map(|row| {
                self.components
                    .iter()
                    .map(|axis| axis.iter().zip(row).zip(&self.mean).map(|((a, v), m)| a * (v - m)).sum())
                    .collect()
            })
            .collect())
    }

    pub fn inverse_transform(&self, z: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(z, self.n_components())?;
        Ok(z.iter()
            .map(|coords| {
                let mut row = self.mean.clone();
                for (c, axis) in coords.iter().zip(&self.components) {
                    for (r, a) in row.iter_mut().zip(axis) {
                        *r += c * a;
                    }
                }
                row
            })
            .collect())
    }
}

/// Fits PCA and keeps the fewest leading axes whose cumulative explained
/// variance ratio reaches `variance_target`. A target of 1 keeps every axis.
pub fn pca_fit(x: &[Vec<f64>], variance_target: f64) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidParameter(format!("variance target {variance_target}")));
    }
    let d = matrix_width(x)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two samples".into()));
    }
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let variances: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData);
    }
    let ratios: Vec<f64> = variances.iter().map(|v| v / total).collect();

    let keep = if variance_target >= 1.0 {
        d
    } else {
        let mut cum = 0.0;
        let mut k = 0;
        while k < d {
            cum += ratios[k];
            k += 1;
            if cum >= variance_target {
                break;
            }
        }
        k
    };
    let components = order[..keep]
        .iter()
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            // sign convention: largest-magnitude entry positive
            let pivot = col.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            col.iter().map(|v| v * sign).collect()
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio: ratios,
    })
}
