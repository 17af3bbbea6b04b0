//! Fold construction, nested hyperparameter tuning, outer cross-validation,
//! and ground-truth evaluation on a future trial.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Axis;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{pool_with_labels, FeatureView, FoldPlan, OutcomeKind, PooledData, PredictionRecord, StudyCollection, TrialDataset};
use crate::error::{Error, Result, ResultExt};
use crate::learners::{self, FittedModel, Hyperparams, ModelFamily, ModelSpec, ModelState};
use crate::metrics::{self, CalibrationPolicy, MetricName, MetricReport, MetricValue};
use crate::seed;

/// Folds used for inner tuning when the outer plan leaves fewer than two.
const FALLBACK_INNER_FOLDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum CvScheme {
    KFold { k: usize, seed: u64 },
    LeaveOneStudyOut,
}

impl CvScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CvScheme::KFold { .. } => "kfold",
            CvScheme::LeaveOneStudyOut => "loso",
        }
    }
}

/// Random partition of `n` samples into `k` folds whose sizes differ by at most one.
pub fn kfold_assignment(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::data(format!("k-fold with k = {k} exceeds the {n} available samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut assignment = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &order[pos..pos + size] {
            assignment[row] = fold;
        }
        pos += size;
    }
    FoldPlan::new(k, assignment)
}

pub fn make_folds(scheme: &CvScheme, collection: &StudyCollection) -> Result<FoldPlan> {
    make_folds_pooled(scheme, &pool_with_labels(collection)?)
}

/// Fold plan over pooled rows. LOSO maps study `i` to fold `i`.
pub fn make_folds_pooled(scheme: &CvScheme, pooled: &PooledData) -> Result<FoldPlan> {
    match *scheme {
        CvScheme::KFold { k, seed } => kfold_assignment(pooled.n(), k, seed),
        CvScheme::LeaveOneStudyOut => {
            let studies: BTreeSet<usize> = pooled.study_index.iter().copied().collect();
            if studies.len() < 2 {
                return Err(Error::data(format!(
                    "leave-one-study-out needs at least 2 studies, got {}",
                    studies.len()
                )));
            }
            let ids: Vec<usize> = studies.into_iter().collect();
            let assignment = pooled
                .study_index
                .iter()
                .map(|s| ids.binary_search(s).expect("collected above"))
                .collect();
            FoldPlan::new(ids.len(), assignment)
        }
    }
}

/// Plan over the training rows of outer fold `held`, reusing the remaining outer folds.
///
/// Falls back to a random split when fewer than two outer folds remain.
pub fn inner_plan(outer: &FoldPlan, held: usize, fallback_seed: u64) -> Result<FoldPlan> {
    let train = outer.training(held);
    let remaining: Vec<usize> = (0..outer.n_folds()).filter(|&f| f != held).collect();
    if remaining.len() >= 2 {
        let assignment = train
            .iter()
            .map(|&r| {
                let f = outer.assignment()[r];
                remaining.binary_search(&f).expect("fold is not the held-out one")
            })
            .collect();
        FoldPlan::new(remaining.len(), assignment)
    } else {
        kfold_assignment(train.len(), FALLBACK_INNER_FOLDS.min(train.len()), fallback_seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneCriterion {
    Auc,
    Mse,
    R2,
}

impl TuneCriterion {
    /// AUC for binary outcomes; MSE for the L1 model and R² for tree ensembles otherwise.
    pub fn default_for(family: ModelFamily, kind: OutcomeKind) -> Self {
        match (kind, family) {
            (OutcomeKind::Binary, _) => TuneCriterion::Auc,
            (OutcomeKind::Continuous, ModelFamily::Lasso) => TuneCriterion::Mse,
            (OutcomeKind::Continuous, _) => TuneCriterion::R2,
        }
    }

    fn maximize(self) -> bool {
        !matches!(self, TuneCriterion::Mse)
    }

    fn check(self, kind: OutcomeKind) -> Result<()> {
        if self == TuneCriterion::Auc && kind != OutcomeKind::Binary {
            return Err(Error::config("tuning criterion auc requires a binary outcome"));
        }
        Ok(())
    }

    fn score(self, scores: &[f64], truths: &[f64]) -> Option<f64> {
        match self {
            TuneCriterion::Auc => metrics::auc(scores, truths).value(),
            TuneCriterion::R2 => metrics::generalized_r2(scores, truths).value(),
            TuneCriterion::Mse => {
                if truths.is_empty() {
                    return None;
                }
                let sse: f64 = scores.iter().zip(truths).map(|(s, t)| (s - t) * (s - t)).sum();
                Some(sse / truths.len() as f64)
            }
        }
    }
}

impl fmt::Display for TuneCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TuneCriterion::Auc => "auc",
            TuneCriterion::Mse => "mse",
            TuneCriterion::R2 => "r2",
        })
    }
}

impl FromStr for TuneCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auc" => Ok(TuneCriterion::Auc),
            "mse" => Ok(TuneCriterion::Mse),
            "r2" => Ok(TuneCriterion::R2),
            other => Err(Error::config(format!("unknown tuning criterion `{other}`"))),
        }
    }
}

/// Outcome of nested tuning: the chosen point and the mean inner criterion of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub chosen: Hyperparams,
    pub mean_scores: Vec<(Hyperparams, Option<f64>)>,
}

/// Predictions on `val_x` for every grid point, fitted on (`train_x`, `train_y`).
fn grid_predictions(
    spec: &ModelSpec,
    points: &[Hyperparams],
    train: &PooledData,
    val: &PooledData,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let (x, y, kind, names) = (train.features.view(), train.outcome.as_slice(), train.outcome_kind, &train.feature_names);
    let mut out = vec![Vec::new(); points.len()];
    match spec.family() {
        ModelFamily::Lasso => {
            let mut order: Vec<usize> = (0..points.len()).collect();
            let lambda = |i: usize| match points[i] {
                Hyperparams::Lasso { lambda } => lambda,
                _ => unreachable!("lasso grid"),
            };
            order.sort_by(|&a, &b| lambda(b).total_cmp(&lambda(a)));
            let lambdas: Vec<f64> = order.iter().map(|&i| lambda(i)).collect();
            let path = learners::lasso_path(x, names, y, &lambdas, kind, &spec.lasso)?;
            for (model, &i) in path.iter().zip(&order) {
                out[i] = model.predict_matrix(val.features.view());
            }
        }
        ModelFamily::Gbm => {
            let mut shrinkages: Vec<f64> = Vec::new();
            for p in points {
                if let Hyperparams::Gbm { shrinkage, .. } = *p {
                    if !shrinkages.contains(&shrinkage) {
                        shrinkages.push(shrinkage);
                    }
                }
            }
            for nu in shrinkages {
                let members: Vec<(usize, usize)> = points
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| match *p {
                        Hyperparams::Gbm { n_trees, shrinkage } if shrinkage == nu => Some((i, n_trees)),
                        _ => None,
                    })
                    .collect();
                let max_trees = members.iter().map(|m| m.1).max().unwrap_or(0);
                let model = learners::fit_gbm(x, names, y, max_trees, nu, kind)?;
                let ModelState::Gbm(g) = &model.state else { unreachable!() };
                let mut checkpoints: Vec<usize> = members.iter().map(|m| m.1).collect();
                checkpoints.sort_unstable();
                checkpoints.dedup();
                let staged = g.staged_raw(val.features.view(), &checkpoints);
                for (i, t) in members {
                    let at = checkpoints.binary_search(&t).expect("checkpoint present");
                    out[i] = learners::GbmModel::link_to_score(staged[at].clone(), kind);
                }
            }
        }
        ModelFamily::RandomForest => {
            for (i, p) in points.iter().enumerate() {
                let model = learners::fit(p, x, names, y, kind, &spec.lasso, seed::derive(seed, i as u64))?;
                out[i] = model.predict_matrix(val.features.view());
            }
        }
    }
    Ok(out)
}

/// Grid search by inner cross-validation over `train`.
///
/// Picks the best mean criterion; exact ties go to the simpler model, then to the first listed.
pub fn tune(
    spec: &ModelSpec,
    train: &PooledData,
    inner: &FoldPlan,
    criterion: TuneCriterion,
    seed: u64,
) -> Result<TuneOutcome> {
    criterion.check(train.outcome_kind)?;
    spec.grid.validate()?;
    if inner.n_samples() != train.n() {
        return Err(Error::data(format!(
            "inner plan covers {} samples but the training set has {}",
            inner.n_samples(),
            train.n()
        )));
    }
    let points = spec.grid.resolve(train.features.view(), &train.outcome, &spec.lasso);
    if points.len() == 1 {
        return Ok(TuneOutcome {
            chosen: points[0],
            mean_scores: vec![(points[0], None)],
        });
    }
    let per_fold: Vec<Vec<Option<f64>>> = (0..inner.n_folds())
        .into_par_iter()
        .map(|g| {
            let fit_rows = inner.training(g);
            let val_rows = inner.held_out(g);
            debug_assert!(fit_rows.iter().all(|r| inner.assignment()[*r] != g));
            let fit_set = train.subset(&fit_rows);
            let val_set = train.subset(&val_rows);
            let preds = grid_predictions(spec, &points, &fit_set, &val_set, seed::derive(seed, g as u64))
                .context(|| format!("inner fold {g}"))?;
            Ok(preds.iter().map(|p| criterion.score(p, &val_set.outcome)).collect())
        })
        .collect::<Result<_>>()?;

    let mean_scores: Vec<(Hyperparams, Option<f64>)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let vals: Vec<f64> = per_fold.iter().filter_map(|f| f[i]).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (*p, mean)
        })
        .collect();

    let mut best: Option<(Hyperparams, f64)> = None;
    for &(p, score) in &mean_scores {
        let Some(s) = score else { continue };
        let take = match best {
            None => true,
            Some((bp, bs)) => {
                let better = if criterion.maximize() { s > bs } else { s < bs };
                better || (s == bs && p.simpler_than(&bp))
            }
        };
        if take {
            best = Some((p, s));
        }
    }
    let (chosen, _) = best.ok_or_else(|| {
        Error::data(format!("tuning: criterion {criterion} undefined on every inner fold"))
    })?;
    Ok(TuneOutcome { chosen, mean_scores })
}

/// Fit the chosen point on the full training set. L1 fits are warm-started
/// along the tuned grid from its largest penalty down to the chosen one.
fn refit(spec: &ModelSpec, tuned: &TuneOutcome, train: &PooledData, seed: u64) -> Result<FittedModel> {
    let (x, names, y, kind) = (train.features.view(), &train.feature_names, train.outcome.as_slice(), train.outcome_kind);
    if let Hyperparams::Lasso { lambda: chosen } = tuned.chosen {
        let mut lambdas: Vec<f64> = tuned
            .mean_scores
            .iter()
            .filter_map(|(p, _)| match *p {
                Hyperparams::Lasso { lambda } if lambda > chosen => Some(lambda),
                _ => None,
            })
            .collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        lambdas.dedup();
        lambdas.push(chosen);
        let mut path = learners::lasso_path(x, names, y, &lambdas, kind, &spec.lasso)?;
        return Ok(path.pop().expect("non-empty path"));
    }
    learners::fit(&tuned.chosen, x, names, y, kind, &spec.lasso, seed)
}

/// What to compute on held-out predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub metrics: Vec<MetricName>,
    pub calibration: CalibrationPolicy,
    /// Overrides the per-family default tuning criterion.
    pub criterion: Option<TuneCriterion>,
}

impl EvalSettings {
    pub fn new(metrics: Vec<MetricName>) -> Self {
        let mut metrics = metrics;
        metrics.sort();
        metrics.dedup();
        Self {
            metrics,
            calibration: CalibrationPolicy::default(),
            criterion: None,
        }
    }

    fn needs_threshold(&self) -> bool {
        self.metrics.iter().any(|m| m.is_thresholded())
    }

    pub fn validate(&self, kind: OutcomeKind) -> Result<()> {
        for m in &self.metrics {
            if m.required_kind() != kind {
                return Err(Error::config(format!("metric {m} requires a {} outcome", m.required_kind())));
            }
        }
        self.calibration.validate()
    }

    fn criterion_for(&self, family: ModelFamily, kind: OutcomeKind) -> TuneCriterion {
        self.criterion.unwrap_or_else(|| TuneCriterion::default_for(family, kind))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold_id: usize,
    pub predictions: Vec<PredictionRecord>,
    pub report: MetricReport,
    pub chosen: Hyperparams,
    pub threshold: Option<f64>,
    pub train_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub scheme: CvScheme,
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    pub aggregate: MetricReport,
}

fn records(pooled: &PooledData, rows: &[usize], scores: &[f64], fold_id: usize) -> Vec<PredictionRecord> {
    rows.iter()
        .zip(scores)
        .map(|(&r, &score)| PredictionRecord {
            study_id: pooled.label(r).to_string(),
            sample_index: pooled.sample_index[r],
            score,
            truth: pooled.outcome[r],
            fold_id,
        })
        .collect()
}

/// Threshold for a fitted model under the policy, using its scores on the calibration features.
fn fold_threshold(settings: &EvalSettings, model: &FittedModel, calibration: Option<FeatureView<'_>>) -> Result<Option<f64>> {
    if !settings.needs_threshold() {
        return Ok(None);
    }
    let scores = match (settings.calibration.needs_calibration_scores(), calibration) {
        (false, _) => None,
        (true, Some(view)) => Some(model.predict(view)?),
        (true, None) => {
            return Err(Error::config("calibrated metrics requested but no calibration features supplied"))
        }
    };
    settings.calibration.threshold(scores.as_deref()).map(Some)
}

fn check_two_classes(y: &[f64], kind: OutcomeKind, what: impl FnOnce() -> String) -> Result<()> {
    if kind == OutcomeKind::Binary && y.iter().all(|&v| v == y[0]) {
        return Err(Error::data(format!("{}: training outcome has a single class", what())));
    }
    Ok(())
}

/// Outer cross-validation with nested tuning.
///
/// `calibration` holds the future trial's features only; its outcomes are not reachable here.
pub fn run_cv(
    collection: &StudyCollection,
    scheme: &CvScheme,
    spec: &ModelSpec,
    settings: &EvalSettings,
    calibration: Option<FeatureView<'_>>,
    seed: u64,
) -> Result<CvResult> {
    let pooled = pool_with_labels(collection)?;
    let kind = pooled.outcome_kind;
    settings.validate(kind)?;
    if settings.needs_threshold() && settings.calibration.needs_calibration_scores() && calibration.is_none() {
        return Err(Error::config("calibrated metrics requested but no calibration features supplied"));
    }
    let plan = make_folds_pooled(scheme, &pooled)?;
    let criterion = settings.criterion_for(spec.family(), kind);
    criterion.check(kind)?;

    let folds: Vec<FoldResult> = (0..plan.n_folds())
        .into_par_iter()
        .map(|f| {
            let fold_seed = seed::derive(seed, f as u64);
            let train_rows = plan.training(f);
            let test_rows = plan.held_out(f);
            let train = pooled.subset(&train_rows);
            check_two_classes(&train.outcome, kind, || format!("outer fold {f}"))?;
            let inner = inner_plan(&plan, f, seed::derive(fold_seed, 0))?;
            let tuned = tune(spec, &train, &inner, criterion, seed::derive(fold_seed, 1))
                .context(|| format!("outer fold {f}"))?;
            let model = refit(spec, &tuned, &train, seed::derive(fold_seed, 2)).context(|| format!("outer fold {f} refit"))?;
            let test_x = pooled.features.select(Axis(0), &test_rows);
            let scores = model.predict_matrix(test_x.view());
            let threshold = fold_threshold(settings, &model, calibration).context(|| format!("outer fold {f}"))?;
            let predictions = records(&pooled, &test_rows, &scores, f);
            let report = metrics::evaluate(&predictions, &settings.metrics, threshold);
            Ok(FoldResult {
                fold_id: f,
                predictions,
                report,
                chosen: tuned.chosen,
                threshold,
                train_rows,
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<MetricReport> = folds.iter().map(|f| f.report.clone()).collect();
    Ok(CvResult {
        scheme: *scheme,
        plan,
        folds,
        aggregate: MetricReport::mean_of(&reports),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthResult {
    pub report: MetricReport,
    pub predictions: Vec<PredictionRecord>,
    pub chosen: Hyperparams,
    pub threshold: Option<f64>,
}

/// Performance on the future trial of the model tuned (leave-one-legacy-study-out) and fitted on all legacy data.
pub fn evaluate_truth(
    collection: &StudyCollection,
    future: &TrialDataset,
    spec: &ModelSpec,
    settings: &EvalSettings,
    seed: u64,
) -> Result<TruthResult> {
    let pooled = pool_with_labels(collection)?;
    let kind = pooled.outcome_kind;
    settings.validate(kind)?;
    if future.feature_names() != pooled.feature_names.as_slice() {
        return Err(Error::data(format!(
            "future study `{}` does not share the legacy feature space",
            future.study_id()
        )));
    }
    if future.outcome_kind() != kind {
        return Err(Error::data(format!(
            "future study `{}` has {} outcomes, legacy studies have {kind}",
            future.study_id(),
            future.outcome_kind()
        )));
    }
    check_two_classes(&pooled.outcome, kind, || "legacy data".to_string())?;
    let inner = if collection.len() >= 2 {
        make_folds_pooled(&CvScheme::LeaveOneStudyOut, &pooled)?
    } else {
        kfold_assignment(pooled.n(), FALLBACK_INNER_FOLDS.min(pooled.n()), seed::derive(seed, 0))?
    };
    let criterion = settings.criterion_for(spec.family(), kind);
    let tuned = tune(spec, &pooled, &inner, criterion, seed::derive(seed, 1)).context(|| "truth tuning".to_string())?;
    let model = refit(spec, &tuned, &pooled, seed::derive(seed, 2)).context(|| "truth refit".to_string())?;
    let scores = model.predict(future.feature_view())?;
    let threshold = if settings.needs_threshold() {
        let own = settings.calibration.needs_calibration_scores().then_some(scores.as_slice());
        Some(settings.calibration.threshold(own)?)
    } else {
        None
    };
    let predictions: Vec<PredictionRecord> = scores
        .iter()
        .zip(future.outcome())
        .enumerate()
        .map(|(i, (&score, &truth))| PredictionRecord {
            study_id: future.study_id().to_string(),
            sample_index: i,
            score,
            truth,
            fold_id: 0,
        })
        .collect();
    let report = metrics::evaluate(&predictions, &settings.metrics, threshold);
    Ok(TruthResult {
        report,
        predictions,
        chosen: tuned.chosen,
        threshold,
    })
}

impl CvResult {
    /// Every pooled row held out exactly once, and never in its own training set.
    pub fn check_partition(&self) -> bool {
        let n = self.plan.n_samples();
        let mut seen = vec![0usize; n];
        for fold in &self.folds {
            let held: BTreeSet<usize> = self.plan.held_out(fold.fold_id).into_iter().collect();
            if fold.train_rows.iter().any(|r| held.contains(r)) {
                return false;
            }
            for r in held {
                seen[r] += 1;
            }
        }
        seen.iter().all(|&c| c == 1)
    }

    pub fn metric(&self, name: MetricName) -> Option<&MetricValue> {
        self.aggregate.get(name)
    }
}
