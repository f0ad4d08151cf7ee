use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: 1.0,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn polynomial(gamma: f64, coef0: f64, degree: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            coef0,
            degree,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != KernelKind::Linear && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel gamma {}", self.gamma)));
        }
        if self.kind == KernelKind::Polynomial && self.degree < 1 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        Ok(())
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Linear => dot(u, v),
            KernelKind::Polynomial => (self.gamma * dot(u, v) + self.coef0).powi(self.degree as i32),
        }
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `1 / (n_features * Var(X))` over all entries of `x`; 1 when `x` is constant.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let n_features = x.first().map_or(1, Vec::len).max(1);
    let count = (x.len() * n_features) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 { 1.0 / (n_features as f64 * var) } else { 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let u = [1.0, 2.0];
        let v = [0.5, -1.0];
        assert_eq!(KernelSpec::rbf(0.7).eval(&u, &u), 1.0);
        assert!((KernelSpec::rbf(0.5).eval(&u, &v) - (-0.5f64 * 9.25).exp()).abs() < 1e-15);
        assert_eq!(KernelSpec::linear().eval(&u, &v), -1.5);
        assert_eq!(KernelSpec::polynomial(2.0, 1.0, 3).eval(&u, &v), (-3.0f64 + 1.0).powi(3));
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::rbf(0.0).validate().is_err());
        assert!(KernelSpec::polynomial(1.0, 0.0, 0).validate().is_err());
        assert!(KernelSpec::linear().validate().is_ok());
    }

    #[test]
    fn gamma_scale() {
        let x = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        // entries {0,2,2,0}: variance 1
        assert!((scale_gamma(&x) - 0.5).abs() < 1e-15);
        assert_eq!(scale_gamma(&[vec![3.0, 3.0]]), 1.0);
    }
}
