//! Extremely randomized trees for regression.
//!
//! Every tree sees the full training set. At each node `K` candidate
//! features are drawn without replacement, each gets one uniform random
//! threshold inside its range at that node, and the candidate with the
//! largest variance reduction wins.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_width, matrix_width};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, Rng as SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErtParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` uses all features.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ErtParams {
    fn default() -> Self {
        ErtParams {
            n_trees: 100,
            max_features: None,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Flat binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErtModel {
    pub params: ErtParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl ErtModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_one(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(x, self.n_features)?;
        Ok(x.iter().map(|row| self.predict_one(row)).collect())
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    k: usize,
    min_split: usize,
    max_depth: Option<usize>,
    rng: SeededRng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let y0 = self.y[idx[0]];
        if idx.len() < self.min_split
            || self.max_depth.is_some_and(|d| depth >= d)
            || idx.iter().all(|&i| self.y[i] == y0)
        {
            return self.leaf(idx);
        }
        let n_features = self.x[0].len();
        let mut candidates = sample(&mut self.rng, n_features, self.k).into_vec();
        candidates.sort_unstable();

        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let base = total * total / n;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in candidates {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.x[i][feature];
                (lo.min(v), hi.max(v))
            });
            if !(lo < hi) {
                continue;
            }
            let threshold = loop {
                let t = lo + self.rng.random::<f64>() * (hi - lo);
                if t > lo && t < hi {
                    break t;
                }
            };
            let (mut left_sum, mut left_n) = (0.0, 0usize);
            for &i in idx.iter() {
                if self.x[i][feature] <= threshold {
                    left_sum += self.y[i];
                    left_n += 1;
                }
            }
            let right_sum = total - left_sum;
            let right_n = idx.len() - left_n;
            let score = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64 - base;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, feature, threshold));
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(idx);
        };

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let x = self.x;
        let mid = partition(idx, |&i| x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

// Stable partition: elements satisfying `pred` first; returns their count.
fn partition(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (mut yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|i| pred(i));
    let mid = yes.len();
    yes.extend(no);
    idx.copy_from_slice(&yes);
    mid
}

/// Grows `params.n_trees` trees; tree `t` draws from its own stream
/// `derive_seed(params.seed, t)`, so trees can be built in parallel.
pub fn ert_fit(x: &[Vec<f64>], y: &[f64], params: &ErtParams) -> Result<ErtModel> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = matrix_width(x)?;
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if params.n_trees == 0 || d == 0 {
        return Err(Error::InvalidParameter("need at least one tree and one feature".into()));
    }
    let k = params.max_features.unwrap_or(d);
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("max_features {k} for {d} features")));
    }
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut b = Builder {
                x,
                y,
                k,
                min_split: params.min_samples_split.max(2),
                max_depth: params.max_depth,
                rng: rng_from_seed(derive_seed(params.seed, t as u64)),
                nodes: Vec::new(),
            };
            let mut idx: Vec<usize> = (0..x.len()).collect();
            b.grow(&mut idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ErtModel {
        params: *params,
        n_features: d,
        trees,
    })
}
