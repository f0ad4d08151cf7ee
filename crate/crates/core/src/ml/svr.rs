//! ε-insensitive support vector regression trained by sequential minimal
//! optimization on the dual.
//!
//! The dual has `2n` box-constrained variables (`α_i` and `α_i*`) tied by one
//! equality constraint. Each step picks the maximally violating index `i`
//! and, among the indices that can move against it, the `j` with the largest
//! second-order objective decrease, then solves the two-variable subproblem
//! in closed form.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::{check_width, matrix_width};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
const KERNEL_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration budget in units of `2n` pair updates.
    pub max_passes: usize,
}

impl SvrParams {
    pub fn new(kernel: KernelSpec) -> Self {
        SvrParams {
            kernel,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_passes: 100,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i - α_i*` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub n_features: usize,
    /// Final maximal KKT violation.
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, b)| b * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(x, self.n_features)?;
        Ok(x.iter().map(|row| self.predict_one(row)).collect())
    }
}

/// Kernel rows computed on demand with a bounded FIFO cache.
struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: KernelSpec,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], kernel: KernelSpec) -> Self {
        let capacity = (KERNEL_CACHE_BYTES / (8 * x.len().max(1))).max(2);
        KernelRows {
            x,
            kernel,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.x[i];
            let row = self.x.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

pub fn svr_fit(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    let d = matrix_width(x)?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("SVR needs at least two samples".into()));
    }
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C = {}, epsilon = {}, tol = {}",
            params.c, params.epsilon, params.tol
        )));
    }
    params.kernel.validate()?;

    let c = params.c;
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let sample = |t: usize| if t < n { t } else { t - n };
    let diag: Vec<f64> = x.iter().map(|xi| params.kernel.eval(xi, xi)).collect();
    let mut cache = KernelRows::new(x, params.kernel);

    let mut alpha = vec![0.0; l];
    // gradient of ½αᵀQα + pᵀα at α = 0
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    let max_iter = params.max_passes.saturating_mul(l).max(l);
    let mut iterations = 0;
    let mut violation;
    loop {
        // i: argmax over I_up of -y_t G_t
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let up = if sign(t) > 0.0 { !at_upper(alpha[t]) } else { !at_lower(alpha[t]) };
            if up {
                let v = -sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        // j: second-order selection over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            let ki: Vec<f64> = cache.row(sample(i)).to_vec();
            for t in 0..l {
                let low = if sign(t) > 0.0 { !at_lower(alpha[t]) } else { !at_upper(alpha[t]) };
                if !low {
                    continue;
                }
                let yg = sign(t) * grad[t];
                gmax2 = gmax2.max(yg);
                let diff = gmax + yg;
                if diff > 0.0 {
                    let st = sample(t);
                    let mut quad = diag[sample(i)] + diag[st] - 2.0 * ki[st];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj < best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        violation = (gmax + gmax2).max(0.0);
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < params.tol {
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (si, sj) = (sample(i), sample(j));
        let kij = cache.row(si)[sj];
        let (yi, yj) = (sign(i), sign(j));
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let mut quad = diag[si] + diag[sj] - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        let ki = cache.row(si).to_vec();
        let kj = cache.row(sj);
        for (t, g) in grad.iter_mut().enumerate() {
            let st = sample(t);
            // Q_ts = y_t y_s K(t, s)
            *g += sign(t) * (yi * ki[st] * dai + yj * kj[st] * daj);
        }
    }

    // bias from free variables, or the midpoint of the feasible interval
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if at_upper(alpha[t]) {
            if sign(t) < 0.0 { upper = upper.min(yg) } else { lower = lower.max(yg) }
        } else if at_lower(alpha[t]) {
            if sign(t) > 0.0 { upper = upper.min(yg) } else { lower = lower.max(yg) }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { (upper + lower) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for k in 0..n {
        let beta = alpha[k] - alpha[k + n];
        if beta != 0.0 {
            support_vectors.push(x[k].clone());
            dual_coef.push(beta);
        }
    }
    let model = SvrModel {
        kernel: params.kernel,
        c,
        epsilon: params.epsilon,
        support_vectors,
        dual_coef,
        bias: -rho,
        n_features: d,
        kkt_violation: violation,
        iterations,
    };
    if violation >= params.tol {
        return Err(Error::NonConvergence {
            violation,
            model: Box::new(model),
        });
    }
    Ok(model)
}
