//! Gradient boosting with depth-1 trees (stumps).
//!
//! Squared-error loss for continuous outcomes, logistic loss on the log-odds
//! scale for binary ones. Every terminal node must hold at least
//! [`MIN_TERMINAL`] training observations.

use ndarray::ArrayView2;

use super::lasso::sigmoid;
use super::{check_inputs, is_one_class, FittedModel, Hyperparams, ModelState};
use crate::data::OutcomeKind;
use crate::error::{Error, Result};

pub const MIN_TERMINAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    pub fn eval(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmModel {
    /// Initial score: mean outcome, or its log-odds for binary outcomes.
    pub base: f64,
    pub shrinkage: f64,
    pub stumps: Vec<Stump>,
}

impl GbmModel {
    /// Raw (link-scale) scores after the first `n_trees` stumps, for every
    /// checkpoint in `checkpoints` (ascending). Returns one vector per checkpoint.
    pub fn staged_raw(&self, x: ArrayView2<'_, f64>, checkpoints: &[usize]) -> Vec<Vec<f64>> {
        let n = x.nrows();
        let mut raw = vec![self.base; n];
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut done = 0;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        if checkpoints.iter().any(|&c| c > 0) {
            rows = x.rows().into_iter().map(|r| r.to_vec()).collect();
        }
        for &stop in checkpoints {
            let stop = stop.min(self.stumps.len());
            for stump in &self.stumps[done.min(stop)..stop] {
                for (r, row) in raw.iter_mut().zip(&rows) {
                    *r += self.shrinkage * stump.eval(row);
                }
            }
            done = done.max(stop);
            out.push(raw.clone());
        }
        out
    }

    pub fn link_to_score(raw: Vec<f64>, kind: OutcomeKind) -> Vec<f64> {
        match kind {
            OutcomeKind::Continuous => raw,
            OutcomeKind::Binary => raw.into_iter().map(sigmoid).collect(),
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>, kind: OutcomeKind) -> Vec<f64> {
        let raw = self.staged_raw(x, &[self.stumps.len()]).remove(0);
        Self::link_to_score(raw, kind)
    }
}

/// Per-feature ascending order and the legal split positions within it.
struct SortedFeature {
    order: Vec<usize>,
    /// `k` such that the first `k` sorted rows go left; both sides keep ≥ MIN_TERMINAL rows.
    cuts: Vec<usize>,
}

fn presort(x: ArrayView2<'_, f64>) -> Vec<SortedFeature> {
    let n = x.nrows();
    x.columns()
        .into_iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let cuts = (MIN_TERMINAL..=n.saturating_sub(MIN_TERMINAL))
                .filter(|&k| k > 0 && k < n && col[order[k - 1]] < col[order[k]])
                .collect();
            SortedFeature { order, cuts }
        })
        .collect()
}

pub fn fit_gbm(
    x: ArrayView2<'_, f64>,
    names: &[String],
    y: &[f64],
    n_trees: usize,
    shrinkage: f64,
    kind: OutcomeKind,
) -> Result<FittedModel> {
    check_inputs(x, names, y, kind)?;
    if !(shrinkage > 0.0 && shrinkage <= 1.0) {
        return Err(Error::model(format!("shrinkage must lie in (0, 1], got {shrinkage}")));
    }
    let n = y.len();
    let nf = n as f64;
    let ybar = y.iter().sum::<f64>() / nf;
    let base = match kind {
        OutcomeKind::Continuous => ybar,
        OutcomeKind::Binary => {
            if is_one_class(y) {
                return Err(Error::model("gbm: binary outcome has a single class, base log-odds undefined"));
            }
            (ybar / (1.0 - ybar)).ln()
        }
    };
    if n_trees > 0 && n < 2 * MIN_TERMINAL {
        return Err(Error::model(format!(
            "gbm needs at least {} observations ({MIN_TERMINAL} per terminal node), got {n}",
            2 * MIN_TERMINAL
        )));
    }

    let sorted = if n_trees > 0 { presort(x) } else { Vec::new() };
    let mut raw = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![1.0; n];
    let mut stumps = Vec::with_capacity(n_trees);
    for iter in 0..n_trees {
        for i in 0..n {
            match kind {
                OutcomeKind::Continuous => grad[i] = y[i] - raw[i],
                OutcomeKind::Binary => {
                    let p = sigmoid(raw[i]);
                    grad[i] = y[i] - p;
                    hess[i] = p * (1.0 - p);
                }
            }
        }
        let total: f64 = grad.iter().sum();
        // Maximize GL²/nL + GR²/nR: the SSE reduction of a two-constant fit to the gradient.
        let mut best: Option<(usize, usize, f64)> = None;
        for (j, feat) in sorted.iter().enumerate() {
            let mut left = 0.0;
            let mut k_done = 0;
            for &k in &feat.cuts {
                left += feat.order[k_done..k].iter().map(|&r| grad[r]).sum::<f64>();
                k_done = k;
                let (nl, nr) = (k as f64, (n - k) as f64);
                let right = total - left;
                let gain = left * left / nl + right * right / nr;
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((j, k, gain));
                }
            }
        }
        let Some((j, k, _)) = best else {
            return Err(Error::model(format!(
                "gbm iteration {iter}: no split leaves {MIN_TERMINAL} observations on each side"
            )));
        };
        let order = &sorted[j].order;
        let col = x.column(j);
        let threshold = 0.5 * (col[order[k - 1]] + col[order[k]]);
        let side_value = |rows: &[usize]| -> f64 {
            let g: f64 = rows.iter().map(|&r| grad[r]).sum();
            match kind {
                OutcomeKind::Continuous => g / rows.len() as f64,
                OutcomeKind::Binary => {
                    let h: f64 = rows.iter().map(|&r| hess[r]).sum();
                    if h > 1e-12 {
                        g / h
                    } else {
                        0.0
                    }
                }
            }
        };
        let stump = Stump {
            feature: j,
            threshold,
            left: side_value(&order[..k]),
            right: side_value(&order[k..]),
        };
        for &r in &order[..k] {
            raw[r] += shrinkage * stump.left;
        }
        for &r in &order[k..] {
            raw[r] += shrinkage * stump.right;
        }
        stumps.push(stump);
    }
    Ok(FittedModel {
        params: Hyperparams::Gbm { n_trees, shrinkage },
        kind,
        feature_names: names.to_vec(),
        state: ModelState::Gbm(GbmModel {
            base,
            shrinkage,
            stumps,
        }),
    })
}
