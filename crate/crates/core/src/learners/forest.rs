//! Random forest with bootstrap resampling and per-node feature subsampling.
//!
//! Binary outcomes split on weighted child Gini impurity, continuous outcomes
//! on weighted child variance. Leaves store the mean outcome, so binary
//! predictions are averaged class-1 proportions.

use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_inputs, FittedModel, Hyperparams, ModelState};
use crate::data::OutcomeKind;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Features sampled at each node.
    pub mtry: usize,
    /// Nodes with fewer samples become leaves.
    pub min_node: usize,
    pub n_trees: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut row = vec![0.0; x.ncols()];
        x.rows()
            .into_iter()
            .map(|r| {
                row.iter_mut().zip(r).for_each(|(d, s)| *d = *s);
                self.trees.iter().map(|t| t.predict_row(&row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

/// Sum of squared deviations for a node; for 0/1 outcomes this is half the
/// count-weighted Gini impurity `n·2p(1-p)`.
fn impurity(kind: OutcomeKind, count: f64, sum: f64, sum_sq: f64) -> f64 {
    if count == 0.0 {
        return 0.0;
    }
    match kind {
        OutcomeKind::Binary => {
            let p = sum / count;
            count * 2.0 * p * (1.0 - p)
        }
        OutcomeKind::Continuous => (sum_sq - sum * sum / count).max(0.0),
    }
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    kind: OutcomeKind,
    params: ForestParams,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn grow(&self, rng: &mut impl Rng) -> Tree {
        let n = self.y.len();
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, sample)];
        while let Some((slot, rows)) = stack.pop() {
            let count = rows.len() as f64;
            let sum: f64 = rows.iter().map(|&r| self.y[r]).sum();
            let sum_sq: f64 = rows.iter().map(|&r| self.y[r] * self.y[r]).sum();
            let node_impurity = impurity(self.kind, count, sum, sum_sq);
            let mean = sum / count;
            if rows.len() < self.params.min_node || rows.len() < 2 || node_impurity <= 0.0 {
                nodes[slot] = Node::Leaf(mean);
                continue;
            }
            let Some(best) = self.best_split(&rows, node_impurity, rng) else {
                nodes[slot] = Node::Leaf(mean);
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| self.x[[r, best.feature]] <= best.threshold);
            let (li, ri) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left: li,
                right: ri,
            };
            stack.push((ri, right));
            stack.push((li, left));
        }
        Tree { nodes }
    }

    fn best_split(&self, rows: &[usize], parent: f64, rng: &mut impl Rng) -> Option<BestSplit> {
        let p = self.x.ncols();
        let mut features: Vec<usize> = rand::seq::index::sample(rng, p, self.params.mtry.min(p)).into_vec();
        features.sort_unstable();
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let total_sq: f64 = rows.iter().map(|&r| self.y[r] * self.y[r]).sum();
        let count = rows.len() as f64;
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for feature in features {
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (self.x[[r, feature]], self.y[r])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut ls, mut lss) = (0.0, 0.0);
            for k in 0..pairs.len() - 1 {
                let (v, t) = pairs[k];
                ls += t;
                lss += t * t;
                let next = pairs[k + 1].0;
                if next <= v {
                    continue;
                }
                let lc = (k + 1) as f64;
                let score = impurity(self.kind, lc, ls, lss)
                    + impurity(self.kind, count - lc, total - ls, total_sq - lss);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit {
                        feature,
                        threshold: 0.5 * (v + next),
                        score,
                    });
                }
            }
        }
        best.filter(|b| b.score < parent)
    }
}

pub fn fit_random_forest(
    x: ArrayView2<'_, f64>,
    names: &[String],
    y: &[f64],
    params: ForestParams,
    kind: OutcomeKind,
    seed: u64,
) -> Result<FittedModel> {
    check_inputs(x, names, y, kind)?;
    if params.mtry == 0 || params.mtry > x.ncols() {
        return Err(Error::model(format!(
            "mtry must lie in 1..={}, got {}",
            x.ncols(),
            params.mtry
        )));
    }
    if params.min_node == 0 || params.n_trees == 0 {
        return Err(Error::model("min_node and n_trees must be positive"));
    }
    let grower = Grower { x, y, kind, params };
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grower.grow(&mut seed::rng(seed::derive(seed, t as u64))))
        .collect();
    Ok(FittedModel {
        params: Hyperparams::RandomForest(params),
        kind,
        feature_names: names.to_vec(),
        state: ModelState::RandomForest(Forest { trees }),
    })
}
