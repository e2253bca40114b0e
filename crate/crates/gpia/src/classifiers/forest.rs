//! Random forest of CART trees with Gini splits.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{sub_rng, Rng};

/// A tree node. Trees are stored as preorder node lists: a split's left
/// child immediately follows it, the right child sits at `right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub(crate) enum Node {
    Leaf { positive: f64 },
    Split { feature: usize, threshold: f64, right: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn score(&self, x: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive } => return positive,
                Node::Split { feature, threshold, right } => {
                    i = if x[feature] <= threshold { i + 1 } else { right };
                }
            }
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: usize,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a Array2<f64>,
    y: &'a [usize],
    params: &'a TreeParams,
    rng: Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) {
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        self.nodes.push(Node::Leaf { positive: pos as f64 / rows.len() as f64 });
    }

    /// Best split over a random feature order. At least `max_features`
    /// features are examined; the search goes on until a valid split is
    /// found or every feature has been tried.
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let n = rows.len();
        let total_pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let parent = gini(total_pos, n);
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.params.max_features && best.is_some() {
                break;
            }
            order.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(self.y[order[k - 1]] == 1);
                let (lo, hi) = (self.x[[order[k - 1], f]], self.x[[order[k], f]]);
                if lo == hi || k < self.params.min_leaf || n - k < self.params.min_leaf {
                    continue;
                }
                let child = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(total_pos - left_pos, n - k)) / n as f64;
                let gain = parent - child;
                if best.is_none_or(|b| gain > b.2) {
                    let mut t = lo + (hi - lo) / 2.0;
                    if t >= hi {
                        t = lo;
                    }
                    best = Some((f, t, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) {
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        if pos == 0 || pos == rows.len() || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            self.leaf(rows);
            return;
        }
        let Some((feature, threshold, _)) = self.best_split(rows) else {
            self.leaf(rows);
            return;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| self.x[[r, feature]] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Split { feature, threshold, right: 0 });
        self.grow(&left, depth + 1);
        let right_at = self.nodes.len();
        if let Node::Split { right, .. } = &mut self.nodes[at] {
            *right = right_at;
        }
        self.grow(&right, depth + 1);
    }
}

pub(crate) fn fit_tree(x: &Array2<f64>, y: &[usize], rows: &[usize], params: &TreeParams, rng: Rng) -> Tree {
    let mut b = Builder { x, y, params, rng, nodes: Vec::new() };
    b.grow(rows, 0);
    Tree { nodes: b.nodes }
}

pub(crate) fn fit_forest(x: &Array2<f64>, y: &[usize], n_trees: usize, params: &TreeParams, seed: u64) -> Vec<Tree> {
    use rayon::prelude::*;
    let m = x.nrows();
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = sub_rng(seed, "rf-tree", t as u64);
            let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            fit_tree(x, y, &rows, params, rng)
        })
        .collect()
}
