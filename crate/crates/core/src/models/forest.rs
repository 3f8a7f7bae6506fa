//! Random forest of CART classification trees.
//!
//! Each tree is grown on a bootstrap sample drawn from its own seeded stream.
//! Splits minimise weighted Gini impurity over `floor(sqrt(D))` candidate
//! features; features that are constant within a node do not count towards
//! that budget. A tree stops at `max_depth`, at pure nodes and when no split
//! lowers impurity.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::ingest::CoarseLabel;
use crate::seed;

const CLASSES: usize = CoarseLabel::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        counts: [u32; CLASSES],
    },
}

impl Node {
    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_counts(&self, row: &[f32]) -> &[u32; CLASSES] {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if f64::from(row[*feature]) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Majority class at the reached leaf; ties go to the earlier class.
    pub fn vote(&self, row: &[f32]) -> usize {
        argmax_u32(self.leaf_counts(row))
    }
}

fn argmax_u32(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Grower<'a> {
    ds: &'a LabeledDataset,
    labels: Vec<usize>,
    max_depth: usize,
    mtry: usize,
    feature_order: Vec<usize>,
    scratch: Vec<(f32, usize)>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [u32; CLASSES] {
        let mut c = [0u32; CLASSES];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut seed::Rng) -> Node {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return Node::Leaf { counts };
        }
        let Some((feature, threshold)) = self.best_split(idx, &counts, rng) else {
            return Node::Leaf { counts };
        };
        let mut split = 0;
        for k in 0..idx.len() {
            if f64::from(self.ds.value(idx[k], feature)) <= threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (left_idx, right_idx) = idx.split_at_mut(split);
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        Node::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Best `(feature, threshold)` by Gini, or `None` if nothing improves on the parent.
    fn best_split(&mut self, idx: &[usize], parent: &[u32; CLASSES], rng: &mut seed::Rng) -> Option<(usize, f64)> {
        let n = idx.len() as f64;
        let purity = |c: &[u32; CLASSES], m: f64| -> f64 {
            if m == 0.0 {
                0.0
            } else {
                c.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / m
            }
        };
        // Maximising sum(count^2)/n over both children minimises weighted Gini.
        let parent_score = purity(parent, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let dim = self.feature_order.len();
        let mut examined = 0;
        for pos in 0..dim {
            if examined >= self.mtry {
                break;
            }
            let j = rng.gen_range(pos..dim);
            self.feature_order.swap(pos, j);
            let feature = self.feature_order[pos];

            self.scratch.clear();
            self.scratch
                .extend(idx.iter().map(|&i| (self.ds.value(i, feature), self.labels[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if self.scratch[0].0 == self.scratch[self.scratch.len() - 1].0 {
                continue;
            }
            examined += 1;

            let mut left = [0u32; CLASSES];
            let mut right = *parent;
            for k in 0..self.scratch.len() - 1 {
                let (v, y) = self.scratch[k];
                left[y] += 1;
                right[y] -= 1;
                let next = self.scratch[k + 1].0;
                if v == next {
                    continue;
                }
                let nl = (k + 1) as f64;
                let score = purity(&left, nl) + purity(&right, n - nl);
                if score > parent_score + 1e-12 && best.is_none_or(|(s, _, _)| score > s) {
                    let threshold = (f64::from(v) + f64::from(next)) / 2.0;
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Grows one tree on the rows listed in `sample` (repeats allowed).
pub fn grow_tree(ds: &LabeledDataset, sample: &[usize], max_depth: usize, rng: &mut seed::Rng) -> Node {
    let dim = ds.dim;
    let mut grower = Grower {
        ds,
        labels: ds.labels.iter().map(|l| l.index()).collect(),
        max_depth,
        mtry: ((dim as f64).sqrt().floor() as usize).max(1),
        feature_order: (0..dim).collect(),
        scratch: Vec::with_capacity(sample.len()),
    };
    let mut idx = sample.to_vec();
    grower.grow(&mut idx, 0, rng)
}

pub fn fit(ds: &LabeledDataset, trees: usize, max_depth: usize, run_seed: u64) -> Vec<Node> {
    (0..trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(run_seed, "rf-tree", t as u64);
            let n = ds.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow_tree(ds, &sample, max_depth, &mut rng)
        })
        .collect()
}

pub fn scores(trees: &[Node], row: &[f32]) -> [f64; CLASSES] {
    let mut votes = [0f64; CLASSES];
    for tree in trees {
        votes[tree.vote(row)] += 1.0;
    }
    let n = trees.len().max(1) as f64;
    votes.iter_mut().for_each(|v| *v /= n);
    votes
}
