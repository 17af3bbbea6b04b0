//! Evaluation metrics: AUC, calibration thresholds, response-rate difference
//! between biomarker groups, classification accuracy, and out-of-sample R².
//!
//! A sample is biomarker-positive when `score >= threshold`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{OutcomeKind, PredictionRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Auc,
    Orr1,
    Orr0,
    DeltaOrr,
    Accuracy,
    GenR2,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Auc,
        MetricName::Orr1,
        MetricName::Orr0,
        MetricName::DeltaOrr,
        MetricName::Accuracy,
        MetricName::GenR2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Auc => "auc",
            MetricName::Orr1 => "orr1",
            MetricName::Orr0 => "orr0",
            MetricName::DeltaOrr => "delta_orr",
            MetricName::Accuracy => "accuracy",
            MetricName::GenR2 => "gen_r2",
        }
    }

    pub fn required_kind(self) -> OutcomeKind {
        match self {
            MetricName::GenR2 => OutcomeKind::Continuous,
            _ => OutcomeKind::Binary,
        }
    }

    /// Metrics that classify with a threshold.
    pub fn is_thresholded(self) -> bool {
        matches!(
            self,
            MetricName::Orr1 | MetricName::Orr0 | MetricName::DeltaOrr | MetricName::Accuracy
        )
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown metric `{s}`")))
    }
}

/// Either a value or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    Missing(String),
}

impl MetricValue {
    pub fn missing(reason: impl Into<String>) -> Self {
        MetricValue::Missing(reason.into())
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Missing(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CalibrationPolicy {
    /// Threshold at the score quantile of the future trial that yields the target prevalence.
    Calibrated { target_prevalence: f64 },
    Uncalibrated { fixed_threshold: f64 },
}

impl Default for CalibrationPolicy {
    fn default() -> Self {
        CalibrationPolicy::Calibrated {
            target_prevalence: 0.5,
        }
    }
}

impl CalibrationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CalibrationPolicy::Calibrated { target_prevalence } => {
                if !(target_prevalence > 0.0 && target_prevalence < 1.0) {
                    return Err(Error::config(format!(
                        "target_prevalence must lie in (0, 1), got {target_prevalence}"
                    )));
                }
            }
            CalibrationPolicy::Uncalibrated { fixed_threshold } => {
                if !fixed_threshold.is_finite() {
                    return Err(Error::config("fixed_threshold must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn needs_calibration_scores(&self) -> bool {
        matches!(self, CalibrationPolicy::Calibrated { .. })
    }

    /// Threshold for one fold-model; `calibration_scores` are its predictions on the future trial's features.
    pub fn threshold(&self, calibration_scores: Option<&[f64]>) -> Result<f64> {
        match *self {
            CalibrationPolicy::Uncalibrated { fixed_threshold } => Ok(fixed_threshold),
            CalibrationPolicy::Calibrated { target_prevalence } => {
                let scores = calibration_scores
                    .ok_or_else(|| Error::config("calibrated metrics need calibration features"))?;
                calibration_threshold(scores, target_prevalence)
            }
        }
    }
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn auc(scores: &[f64], truths: &[f64]) -> MetricValue {
    let mut pairs: Vec<(f64, bool)> = scores.iter().zip(truths).map(|(&s, &t)| (s, t == 1.0)).collect();
    let n_pos = pairs.iter().filter(|p| p.1).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return MetricValue::missing("degenerate class");
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Count, for each tie group, negatives strictly below plus half the tied negatives.
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0usize, 0usize);
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        wins += pos as f64 * (neg_below as f64 + 0.5 * neg as f64);
        neg_below += neg;
        i = j;
    }
    MetricValue::Value(wins / (n_pos as f64 * n_neg as f64))
}

/// Threshold marking as close to `round(target·m)` of the `m` scores positive as ties allow.
///
/// When `target·m` is a whole number `k` the threshold is the midpoint of the
/// `k`-th and `(k+1)`-th largest scores (the usual even-sample median at 0.5);
/// otherwise it is the `round(target·m)`-th largest score itself.
pub fn calibration_threshold(scores: &[f64], target_prevalence: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::data("calibration threshold needs at least one score"));
    }
    if !(target_prevalence > 0.0 && target_prevalence < 1.0) {
        return Err(Error::config(format!("target prevalence {target_prevalence} outside (0, 1)")));
    }
    let mut desc = scores.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let m = desc.len();
    let exact = target_prevalence * m as f64;
    let k = exact.round() as usize;
    let whole = (exact - exact.round()).abs() < 1e-9;

    let above_max = |v: f64| if v == 0.0 { f64::MIN_POSITIVE } else { v + v.abs() * 1e-9 };
    if k == 0 {
        return Ok(above_max(desc[0]));
    }
    if k >= m {
        return Ok(desc[m - 1]);
    }
    let (hi, lo) = (desc[k - 1], desc[k]);
    if hi > lo {
        return Ok(if whole { 0.5 * (hi + lo) } else { hi });
    }
    // A tie straddles the cut: include the whole tie group or exclude it, whichever is closer.
    let first = desc.iter().position(|&v| v == hi).unwrap_or(0);
    let last = desc.iter().rposition(|&v| v == hi).unwrap_or(m - 1);
    let include = last + 1;
    let exclude = first;
    if include.abs_diff(k) <= exclude.abs_diff(k) {
        Ok(hi)
    } else if exclude == 0 {
        Ok(above_max(hi))
    } else {
        Ok(0.5 * (desc[exclude - 1] + hi))
    }
}

/// Response rates in the biomarker-positive and -negative groups and their difference.
pub struct OrrSplit {
    pub orr1: MetricValue,
    pub orr0: MetricValue,
    pub delta: MetricValue,
}

pub fn delta_orr(scores: &[f64], truths: &[f64], threshold: f64) -> OrrSplit {
    let (mut n1, mut r1, mut n0, mut r0) = (0usize, 0.0, 0usize, 0.0);
    for (&s, &t) in scores.iter().zip(truths) {
        if s >= threshold {
            n1 += 1;
            r1 += t;
        } else {
            n0 += 1;
            r0 += t;
        }
    }
    let rate = |r: f64, n: usize| {
        if n == 0 {
            MetricValue::missing("empty biomarker group")
        } else {
            MetricValue::Value(r / n as f64)
        }
    };
    let orr1 = rate(r1, n1);
    let orr0 = rate(r0, n0);
    let delta = match (&orr1, &orr0) {
        (MetricValue::Value(a), MetricValue::Value(b)) => MetricValue::Value(a - b),
        _ => MetricValue::missing("empty biomarker group"),
    };
    OrrSplit { orr1, orr0, delta }
}

pub fn classification_accuracy(scores: &[f64], truths: &[f64], threshold: f64) -> MetricValue {
    if scores.is_empty() {
        return MetricValue::missing("no samples");
    }
    let hits = scores
        .iter()
        .zip(truths)
        .filter(|(&s, &t)| (s >= threshold) == (t == 1.0))
        .count();
    MetricValue::Value(hits as f64 / scores.len() as f64)
}

/// `1 - SSE/SST` against the evaluation-set mean. May be negative.
pub fn generalized_r2(scores: &[f64], truths: &[f64]) -> MetricValue {
    if truths.len() < 2 {
        return MetricValue::missing("fewer than 2 samples");
    }
    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let sst: f64 = truths.iter().map(|t| (t - mean) * (t - mean)).sum();
    if sst == 0.0 {
        return MetricValue::missing("zero total variance");
    }
    let sse: f64 = scores.iter().zip(truths).map(|(s, t)| (t - s) * (t - s)).sum();
    MetricValue::Value(1.0 - sse / sst)
}

/// Metric values keyed by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub values: BTreeMap<MetricName, MetricValue>,
}

impl MetricReport {
    pub fn get(&self, name: MetricName) -> Option<&MetricValue> {
        self.values.get(&name)
    }

    pub fn value(&self, name: MetricName) -> Option<f64> {
        self.get(name).and_then(MetricValue::value)
    }

    /// Unweighted mean per metric. A metric missing in any fold is missing in the aggregate.
    pub fn mean_of(reports: &[MetricReport]) -> MetricReport {
        let mut values = BTreeMap::new();
        let Some(first) = reports.first() else {
            return MetricReport { values };
        };
        for &name in first.values.keys() {
            let mut sum = 0.0;
            let mut missing = None;
            for (fold, r) in reports.iter().enumerate() {
                match r.get(name) {
                    Some(MetricValue::Value(v)) => sum += v,
                    Some(MetricValue::Missing(why)) => {
                        missing.get_or_insert_with(|| format!("fold {fold}: {why}"));
                    }
                    None => {
                        missing.get_or_insert_with(|| format!("fold {fold}: not computed"));
                    }
                }
            }
            let v = match missing {
                Some(why) => MetricValue::Missing(why),
                None => MetricValue::Value(sum / reports.len() as f64),
            };
            values.insert(name, v);
        }
        MetricReport { values }
    }
}

/// Compute `metrics` for a set of predictions. `threshold` is needed only for thresholded metrics.
pub fn evaluate(records: &[PredictionRecord], metrics: &[MetricName], threshold: Option<f64>) -> MetricReport {
    let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    let truths: Vec<f64> = records.iter().map(|r| r.truth).collect();
    let mut values = BTreeMap::new();
    let mut orr: Option<OrrSplit> = None;
    for &m in metrics {
        let v = match m {
            MetricName::Auc => auc(&scores, &truths),
            MetricName::GenR2 => generalized_r2(&scores, &truths),
            MetricName::Accuracy => match threshold {
                Some(t) => classification_accuracy(&scores, &truths, t),
                None => MetricValue::missing("no threshold"),
            },
            MetricName::Orr1 | MetricName::Orr0 | MetricName::DeltaOrr => {
                let split = match (&orr, threshold) {
                    (Some(s), _) => s,
                    (None, Some(t)) => orr.insert(delta_orr(&scores, &truths, t)),
                    (None, None) => {
                        values.insert(m, MetricValue::missing("no threshold"));
                        continue;
                    }
                };
                match m {
                    MetricName::Orr1 => split.orr1.clone(),
                    MetricName::Orr0 => split.orr0.clone(),
                    _ => split.delta.clone(),
                }
            }
        };
        values.insert(m, v);
    }
    MetricReport { values }
}
