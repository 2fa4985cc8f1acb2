//! Gradient-boosted regression trees on the logistic loss, with Newton leaf
//! values and a guard that keeps the training loss from ever going up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifiers::{sigmoid, target};
use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

const NO_NODE: u32 = u32::MAX;
/// Times a loss-raising tree is halved before it is dropped.
const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 0.5,
            min_samples_leaf: 10,
            lambda: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, message: &str| {
            Err(Error::InvalidConfig {
                field,
                message: message.into(),
            })
        };
        if self.max_depth == 0 {
            return bad("max_depth", "must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample", "must be in (0, 1]");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf", "must be at least 1");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    fn scale(&mut self, f: f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { value } = n {
                *value *= f;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Prior log-odds of the suspended class.
    pub init: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss after the prior and after each kept tree.
    pub train_loss: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }

    fn score(&self, lambda: f64) -> f64 {
        self.g * self.g / (self.h + lambda)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.gain > x.gain || (y.gain == x.gain && y.feature < x.feature) {
            y
        } else {
            x
        }),
        (x, None) => x,
        (None, y) => y,
    }
}

struct Columns<'a> {
    cols: &'a [Vec<f64>],
    order: &'a [Vec<u32>],
}

/// Grows one tree level by level. Every level scans each feature's presorted
/// row order once, so a tree costs `O(depth * d * n)`.
fn grow_tree(data: &Columns, grad: &[f64], hess: &[f64], sample: &[usize], p: &GbtParams) -> Tree {
    let n = grad.len();
    let mut node_of = vec![NO_NODE; n];
    let mut root = Stats::default();
    for &r in sample {
        node_of[r] = 0;
        root.add(grad[r], hess[r]);
    }
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut stats = vec![root];
    let mut frontier = vec![0usize];
    for _ in 0..p.max_depth {
        let open: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&k| stats[k].n >= 2 * p.min_samples_leaf)
            .collect();
        if open.is_empty() {
            break;
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, &k) in open.iter().enumerate() {
            slot_of[k] = s;
        }
        let best = (0..data.cols.len())
            .into_par_iter()
            .map(|f| {
                let col = &data.cols[f];
                let mut left = vec![Stats::default(); open.len()];
                let mut last = vec![f64::NAN; open.len()];
                let mut found: Vec<Option<Candidate>> = vec![None; open.len()];
                for &r in &data.order[f] {
                    let r = r as usize;
                    let k = node_of[r];
                    if k == NO_NODE || slot_of[k as usize] == usize::MAX {
                        continue;
                    }
                    let s = slot_of[k as usize];
                    let v = col[r];
                    let l = left[s];
                    let total = stats[k as usize];
                    if l.n >= p.min_samples_leaf && total.n - l.n >= p.min_samples_leaf && v > last[s] {
                        let right = Stats {
                            g: total.g - l.g,
                            h: total.h - l.h,
                            n: total.n - l.n,
                        };
                        let gain = l.score(p.lambda) + right.score(p.lambda) - total.score(p.lambda);
                        if gain > 1e-12 {
                            let mut threshold = last[s] + (v - last[s]) / 2.0;
                            if threshold >= v {
                                threshold = last[s];
                            }
                            found[s] = better(
                                found[s],
                                Some(Candidate {
                                    gain,
                                    feature: f,
                                    threshold,
                                }),
                            );
                        }
                    }
                    left[s].add(grad[r], hess[r]);
                    last[s] = v;
                }
                found
            })
            .reduce(
                || vec![None; open.len()],
                |a, b| a.into_iter().zip(b).map(|(x, y)| better(x, y)).collect(),
            );
        let mut next = Vec::new();
        let mut child_of = vec![(usize::MAX, 0usize, 0.0f64); nodes.len()];
        for (s, &k) in open.iter().enumerate() {
            if let Some(c) = best[s] {
                let (l, r) = (nodes.len(), nodes.len() + 1);
                nodes[k] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: l,
                    right: r,
                };
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                stats.push(Stats::default());
                stats.push(Stats::default());
                child_of[k] = (l, c.feature, c.threshold);
                next.extend([l, r]);
            }
        }
        if next.is_empty() {
            break;
        }
        for &r in sample {
            let k = node_of[r] as usize;
            let (l, f, t) = child_of[k];
            if l != usize::MAX {
                let c = if data.cols[f][r] <= t { l } else { l + 1 };
                node_of[r] = c as u32;
                stats[c].add(grad[r], hess[r]);
            }
        }
        frontier = next;
    }
    for (node, st) in nodes.iter_mut().zip(&stats) {
        if let TreeNode::Leaf { value } = node {
            *value = if st.n == 0 { 0.0 } else { -p.learning_rate * st.g / (st.h + p.lambda) };
        }
    }
    Tree { nodes }
}

fn log_loss(f: &[f64], y: &[f64]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(s, t)| s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s)
        .sum();
    total / f.len() as f64
}

impl GbtModel {
    pub fn fit(data: &LabeledDataset, params: &GbtParams, seed: u64) -> Result<GbtModel> {
        params.validate()?;
        let n = data.len();
        if n == 0 {
            return Err(Error::InsufficientData("no training rows".into()));
        }
        let d = data.n_features();
        let y: Vec<f64> = data.y.iter().map(|&l| target(l)).collect();
        let prior = (y.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (prior / (1.0 - prior)).ln();

        let cols: Vec<Vec<f64>> = (0..d).map(|j| data.x.iter().map(|r| r[j]).collect()).collect();
        let order: Vec<Vec<u32>> = cols
            .par_iter()
            .map(|c| {
                let mut o: Vec<u32> = (0..n as u32).collect();
                o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        let columns = Columns {
            cols: &cols,
            order: &order,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = vec![init; n];
        let mut loss = log_loss(&f, &y);
        let mut model = GbtModel {
            init,
            trees: Vec::new(),
            train_loss: vec![loss],
        };
        let m = ((n as f64 * params.subsample).round() as usize).clamp(1, n);
        let (mut grad, mut hess) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..params.n_trees {
            for i in 0..n {
                let p = sigmoid(f[i]);
                grad[i] = p - y[i];
                hess[i] = (p * (1.0 - p)).max(1e-12);
            }
            let mut sample = rand::seq::index::sample(&mut rng, n, m).into_vec();
            sample.sort_unstable();
            let mut tree = grow_tree(&columns, &grad, &hess, &sample, params);
            let step: Vec<f64> = data.x.iter().map(|r| tree.predict(r)).collect();
            let mut factor = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let cand: Vec<f64> = f.iter().zip(&step).map(|(a, b)| a + factor * b).collect();
                let l = log_loss(&cand, &y);
                if l <= loss {
                    accepted = Some((cand, l));
                    break;
                }
                factor *= 0.5;
            }
            if let Some((cand, l)) = accepted {
                if factor != 1.0 {
                    tree.scale(factor);
                }
                f = cand;
                loss = l;
                model.trees.push(tree);
                model.train_loss.push(loss);
            }
        }
        Ok(model)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}
