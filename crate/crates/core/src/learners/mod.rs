//! Native learners: L1-penalized regression, random forest, and boosted stumps.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureView, OutcomeKind};
use crate::error::{Error, Result};

pub mod forest;
pub mod gbm;
pub mod lasso;

pub use forest::{fit_random_forest, Forest, ForestParams};
pub use gbm::{fit_gbm, GbmModel, Stump};
pub use lasso::{fit_lasso, lambda_max, lasso_path, LassoModel, LassoOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Lasso,
    RandomForest,
    Gbm,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Lasso, ModelFamily::RandomForest, ModelFamily::Gbm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Lasso => "lasso",
            ModelFamily::RandomForest => "random_forest",
            ModelFamily::Gbm => "gbm",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown model `{s}` (expected lasso, random_forest or gbm)")))
    }
}

/// Penalty values for the L1 model. `Auto` is resolved against the training data at tune time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// `count` values log-spaced over `[lambda_max * min_ratio, lambda_max]`.
    Auto { count: usize, min_ratio: f64 },
    Values(Vec<f64>),
}

/// Features tried per split. Rules are resolved against the feature count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    Sqrt,
    Third,
    Tenth,
    Fixed(usize),
}

impl Mtry {
    pub fn resolve(self, p: usize) -> usize {
        let p_f = p as f64;
        let m = match self {
            Mtry::Sqrt => p_f.sqrt().ceil() as usize,
            Mtry::Third => (p_f / 3.0).ceil() as usize,
            Mtry::Tenth => (p_f / 10.0).ceil() as usize,
            Mtry::Fixed(m) => m,
        };
        m.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HyperGrid {
    Lasso { lambdas: LambdaGrid },
    RandomForest { mtry: Vec<Mtry>, min_node: Vec<usize>, n_trees: usize },
    Gbm { n_trees: Vec<usize>, shrinkage: Vec<f64> },
}

impl HyperGrid {
    pub fn family(&self) -> ModelFamily {
        match self {
            HyperGrid::Lasso { .. } => ModelFamily::Lasso,
            HyperGrid::RandomForest { .. } => ModelFamily::RandomForest,
            HyperGrid::Gbm { .. } => ModelFamily::Gbm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(format!("{} grid: {m}", self.family())));
        match self {
            HyperGrid::Lasso { lambdas } => match lambdas {
                LambdaGrid::Auto { count, min_ratio } => {
                    if *count == 0 {
                        return fail("lambda count must be positive");
                    }
                    if !(*min_ratio > 0.0 && *min_ratio <= 1.0) {
                        return fail("min_ratio must lie in (0, 1]");
                    }
                }
                LambdaGrid::Values(v) => {
                    if v.is_empty() {
                        return fail("empty lambda list");
                    }
                    if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                        return fail("lambda values must be finite and non-negative");
                    }
                }
            },
            HyperGrid::RandomForest { mtry, min_node, n_trees } => {
                if mtry.is_empty() || min_node.is_empty() {
                    return fail("empty mtry or min_node list");
                }
                if mtry.contains(&Mtry::Fixed(0)) || min_node.contains(&0) || *n_trees == 0 {
                    return fail("mtry, min_node and n_trees must be positive");
                }
            }
            HyperGrid::Gbm { n_trees, shrinkage } => {
                if n_trees.is_empty() || shrinkage.is_empty() {
                    return fail("empty n_trees or shrinkage list");
                }
                if shrinkage.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
                    return fail("shrinkage must lie in (0, 1]");
                }
            }
        }
        Ok(())
    }

    /// Concrete grid points in listed order.
    pub fn resolve(&self, x: ArrayView2<'_, f64>, y: &[f64], options: &LassoOptions) -> Vec<Hyperparams> {
        match self {
            HyperGrid::Lasso { lambdas } => {
                let values = match lambdas {
                    LambdaGrid::Values(v) => v.clone(),
                    LambdaGrid::Auto { count, min_ratio } => {
                        log_spaced(lambda_max(x, y, options), *min_ratio, *count)
                    }
                };
                values.into_iter().map(|lambda| Hyperparams::Lasso { lambda }).collect()
            }
            HyperGrid::RandomForest { mtry, min_node, n_trees } => {
                let p = x.ncols();
                let mut seen = Vec::new();
                for rule in mtry {
                    let m = rule.resolve(p);
                    if !seen.contains(&m) {
                        seen.push(m);
                    }
                }
                let mut out = Vec::new();
                for &m in &seen {
                    for &node in min_node {
                        out.push(Hyperparams::RandomForest(ForestParams {
                            mtry: m,
                            min_node: node,
                            n_trees: *n_trees,
                        }));
                    }
                }
                out
            }
            HyperGrid::Gbm { n_trees, shrinkage } => {
                let mut out = Vec::new();
                for &t in n_trees {
                    for &s in shrinkage {
                        out.push(Hyperparams::Gbm { n_trees: t, shrinkage: s });
                    }
                }
                out
            }
        }
    }
}

/// Descending from `max` to `max * min_ratio`, evenly spaced on the log scale.
fn log_spaced(max: f64, min_ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 || max <= 0.0 {
        return vec![max.max(0.0); 1];
    }
    let (hi, lo) = (max.ln(), (max * min_ratio).ln());
    (0..count)
        .map(|i| match i {
            0 => max,
            _ => (hi + (lo - hi) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Default grid for a family and outcome kind.
pub fn default_grid(family: ModelFamily, kind: OutcomeKind) -> HyperGrid {
    match family {
        ModelFamily::Lasso => HyperGrid::Lasso {
            lambdas: LambdaGrid::Auto {
                count: 50,
                min_ratio: 1e-3,
            },
        },
        ModelFamily::RandomForest => HyperGrid::RandomForest {
            mtry: vec![Mtry::Sqrt, Mtry::Third, Mtry::Tenth],
            min_node: match kind {
                OutcomeKind::Binary => vec![1, 5, 10],
                OutcomeKind::Continuous => vec![5],
            },
            n_trees: 500,
        },
        ModelFamily::Gbm => HyperGrid::Gbm {
            n_trees: vec![50, 100, 200, 500, 1000],
            shrinkage: vec![0.01, 0.1],
        },
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Lasso { lambda: f64 },
    RandomForest(ForestParams),
    Gbm { n_trees: usize, shrinkage: f64 },
}

impl Hyperparams {
    /// True when `self` is strictly simpler than `other`: larger penalty,
    /// fewer boosting rounds, fewer split candidates, or larger minimum node.
    pub fn simpler_than(&self, other: &Hyperparams) -> bool {
        match (self, other) {
            (Hyperparams::Lasso { lambda: a }, Hyperparams::Lasso { lambda: b }) => a > b,
            (Hyperparams::Gbm { n_trees: a, .. }, Hyperparams::Gbm { n_trees: b, .. }) => a < b,
            (Hyperparams::RandomForest(a), Hyperparams::RandomForest(b)) => {
                a.mtry < b.mtry || (a.mtry == b.mtry && a.min_node > b.min_node)
            }
            _ => false,
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparams::Lasso { lambda } => write!(f, "lambda={lambda:.6e}"),
            Hyperparams::RandomForest(p) => {
                write!(f, "mtry={} min_node={} n_trees={}", p.mtry, p.min_node, p.n_trees)
            }
            Hyperparams::Gbm { n_trees, shrinkage } => write!(f, "n_trees={n_trees} shrinkage={shrinkage}"),
        }
    }
}

/// Learner family plus the grid searched during nested tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub grid: HyperGrid,
    #[serde(default)]
    pub lasso: LassoOptions,
}

impl ModelSpec {
    pub fn new(grid: HyperGrid) -> Self {
        Self {
            grid,
            lasso: LassoOptions::default(),
        }
    }

    pub fn default_for(family: ModelFamily, kind: OutcomeKind) -> Self {
        Self::new(default_grid(family, kind))
    }

    pub fn family(&self) -> ModelFamily {
        self.grid.family()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Lasso(LassoModel),
    RandomForest(Forest),
    Gbm(GbmModel),
}

/// A trained predictor. Immutable; `predict` is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub params: Hyperparams,
    pub kind: OutcomeKind,
    pub feature_names: Vec<String>,
    pub state: ModelState,
}

impl FittedModel {
    pub fn family(&self) -> ModelFamily {
        match self.state {
            ModelState::Lasso(_) => ModelFamily::Lasso,
            ModelState::RandomForest(_) => ModelFamily::RandomForest,
            ModelState::Gbm(_) => ModelFamily::Gbm,
        }
    }

    /// Scores for every row: probabilities for binary outcomes, predicted values otherwise.
    pub fn predict(&self, view: FeatureView<'_>) -> Result<Vec<f64>> {
        if view.names != self.feature_names.as_slice() {
            let first = view
                .names
                .iter()
                .zip(&self.feature_names)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| view.names.len().min(self.feature_names.len()));
            let got = view.names.get(first).map_or("<none>", String::as_str);
            let want = self.feature_names.get(first).map_or("<none>", String::as_str);
            return Err(Error::data(format!(
                "feature columns differ from training at position {first}: got `{got}`, expected `{want}`"
            )));
        }
        Ok(self.predict_matrix(view.features))
    }

    pub(crate) fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        match &self.state {
            ModelState::Lasso(m) => m.predict(x, self.kind),
            ModelState::RandomForest(m) => m.predict(x),
            ModelState::Gbm(m) => m.predict(x, self.kind),
        }
    }
}

/// Fit one grid point. `seed` only affects forests.
pub fn fit(
    params: &Hyperparams,
    x: ArrayView2<'_, f64>,
    names: &[String],
    y: &[f64],
    kind: OutcomeKind,
    lasso_options: &LassoOptions,
    seed: u64,
) -> Result<FittedModel> {
    match *params {
        Hyperparams::Lasso { lambda } => fit_lasso(x, names, y, lambda, kind, lasso_options),
        Hyperparams::RandomForest(p) => fit_random_forest(x, names, y, p, kind, seed),
        Hyperparams::Gbm { n_trees, shrinkage } => fit_gbm(x, names, y, n_trees, shrinkage, kind),
    }
}

pub(crate) fn check_inputs(x: ArrayView2<'_, f64>, names: &[String], y: &[f64], kind: OutcomeKind) -> Result<()> {
    if y.is_empty() {
        return Err(Error::model("empty outcome vector"));
    }
    if x.nrows() != y.len() {
        return Err(Error::model(format!("{} feature rows but {} outcomes", x.nrows(), y.len())));
    }
    if x.ncols() != names.len() {
        return Err(Error::model(format!("{} feature columns but {} names", x.ncols(), names.len())));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::model("non-finite value in training data"));
    }
    if kind == OutcomeKind::Binary && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::model("binary outcome must be 0 or 1"));
    }
    Ok(())
}

pub(crate) fn is_one_class(y: &[f64]) -> bool {
    y.iter().all(|&v| v == y[0])
}
