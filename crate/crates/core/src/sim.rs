//! Heterogeneous multi-trial simulator.
//!
//! Each trial has an unobserved causal feature `X ~ N(0,1)` driving the
//! outcome (`Y = βX + ε` or `Y ~ Bernoulli(logistic(βX))`). Of the
//! `n_covariates` candidate biomarkers, a per-trial random subset of size
//! `n_correlated` is built as `Z = ρX + sqrt(1-ρ²)W`; the rest and all noise
//! features are independent standard normals. Because the subset is redrawn
//! per trial, trials share some correlated biomarkers and differ on others.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{OutcomeKind, StudyCollection, TrialDataset};
use crate::error::{Error, Result};
use crate::seed;

/// Column name used for the latent feature in diagnostic mode.
pub const LATENT_FEATURE: &str = "X_latent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_per_trial: usize,
    pub n_legacy: usize,
    pub beta: f64,
    pub rho: f64,
    pub n_covariates: usize,
    pub n_correlated: usize,
    pub n_noise: usize,
    pub noise_sd: f64,
    pub outcome_kind: OutcomeKind,
    pub seed: u64,
    /// Diagnostic mode: append the latent causal feature as a final column.
    pub expose_latent: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_per_trial: 500,
            n_legacy: 4,
            beta: 1.0,
            rho: 0.9,
            n_covariates: 30,
            n_correlated: 15,
            n_noise: 300,
            noise_sd: 1.0,
            outcome_kind: OutcomeKind::Continuous,
            seed: 0,
            expose_latent: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(format!("simulation config: {m}")));
        if self.n_correlated > self.n_covariates {
            return fail(format!(
                "n_correlated ({}) exceeds n_covariates ({})",
                self.n_correlated, self.n_covariates
            ));
        }
        if self.n_per_trial < 2 {
            return fail(format!("n_per_trial must be at least 2, got {}", self.n_per_trial));
        }
        if self.n_legacy < 1 {
            return fail("n_legacy must be at least 1".into());
        }
        if !(self.rho.abs() < 1.0) {
            return fail(format!("rho must satisfy |rho| < 1, got {}", self.rho));
        }
        if !self.beta.is_finite() {
            return fail(format!("beta must be finite, got {}", self.beta));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return fail(format!("noise_sd must be finite and non-negative, got {}", self.noise_sd));
        }
        if self.n_features() == 0 {
            return fail("no feature columns (n_covariates + n_noise = 0)".into());
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.n_covariates + self.n_noise + usize::from(self.expose_latent)
    }

    /// Column names: Z1..Z{n_covariates}, N1..N{n_noise}, then the latent column if exposed.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n_covariates).map(|j| format!("Z{j}")).collect();
        names.extend((1..=self.n_noise).map(|j| format!("N{j}")));
        if self.expose_latent {
            names.push(LATENT_FEATURE.to_string());
        }
        names
    }

    pub fn study_id(&self, trial_index: usize) -> String {
        if trial_index < self.n_legacy {
            format!("trial{}", trial_index + 1)
        } else {
            "future".to_string()
        }
    }

    /// Seed of the stream that generates trial `trial_index`.
    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        seed::derive(self.seed, trial_index as u64)
    }
}

/// Generating state of one trial, never shown to learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub study_id: String,
    pub seed: u64,
    /// 1-based covariate indices (`Zj`) correlated with the latent feature, ascending.
    pub correlated_indices: Vec<usize>,
    #[serde(skip)]
    pub latent: Vec<f64>,
    /// Per-patient response probability; binary outcomes only.
    #[serde(skip)]
    pub response_prob: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub trials: Vec<TrialTruth>,
    pub seed: u64,
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn simulate_trial(config: &SimConfig, trial_index: usize, stream_seed: u64) -> Result<(TrialDataset, TrialTruth)> {
    config.validate()?;
    let n = config.n_per_trial;
    let mut rng = seed::rng(stream_seed);

    let mut correlated: Vec<usize> = rand::seq::index::sample(&mut rng, config.n_covariates, config.n_correlated)
        .into_iter()
        .collect();
    correlated.sort_unstable();

    let latent: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let (outcome, response_prob) = match config.outcome_kind {
        OutcomeKind::Continuous => {
            let y = latent
                .iter()
                .map(|&x| {
                    let eps: f64 = rng.sample(StandardNormal);
                    config.beta * x + config.noise_sd * eps
                })
                .collect();
            (y, None)
        }
        OutcomeKind::Binary => {
            let p: Vec<f64> = latent.iter().map(|&x| logistic(config.beta * x)).collect();
            let y = p
                .iter()
                .map(|&pi| if rng.random::<f64>() < pi { 1.0 } else { 0.0 })
                .collect();
            (y, Some(p))
        }
    };

    let p = config.n_features();
    let mut features = Array2::<f64>::zeros((n, p));
    let loading = (1.0 - config.rho * config.rho).sqrt();
    let mut is_correlated = vec![false; config.n_covariates];
    for &j in &correlated {
        is_correlated[j] = true;
    }
    for j in 0..config.n_covariates {
        let mut col = features.column_mut(j);
        if is_correlated[j] {
            for (cell, &x) in col.iter_mut().zip(&latent) {
                let w: f64 = rng.sample(StandardNormal);
                *cell = config.rho * x + loading * w;
            }
        } else {
            col.iter_mut().for_each(|cell| *cell = rng.sample(StandardNormal));
        }
    }
    for j in config.n_covariates..config.n_covariates + config.n_noise {
        features.column_mut(j).iter_mut().for_each(|cell| *cell = rng.sample(StandardNormal));
    }
    if config.expose_latent {
        features.column_mut(p - 1).assign(&ndarray::ArrayView1::from(&latent));
    }

    let study_id = config.study_id(trial_index);
    let dataset = TrialDataset::new(
        study_id.clone(),
        features,
        config.feature_names(),
        outcome,
        config.outcome_kind,
    )?;
    let truth = TrialTruth {
        study_id,
        seed: stream_seed,
        correlated_indices: correlated.into_iter().map(|j| j + 1).collect(),
        latent,
        response_prob,
    };
    Ok((dataset, truth))
}

/// A simulated legacy collection, the future trial, and the generating truth.
#[derive(Debug, Clone)]
pub struct SimulatedStudy {
    pub legacy: StudyCollection,
    pub future: TrialDataset,
    pub truth: SimTruth,
}

pub fn simulate_collection(config: &SimConfig) -> Result<SimulatedStudy> {
    config.validate()?;
    let mut legacy = Vec::with_capacity(config.n_legacy);
    let mut truths = Vec::with_capacity(config.n_legacy + 1);
    for t in 0..config.n_legacy {
        let (ds, tr) = simulate_trial(config, t, config.trial_seed(t))?;
        legacy.push(ds);
        truths.push(tr);
    }
    let (future, tr) = simulate_trial(config, config.n_legacy, config.trial_seed(config.n_legacy))?;
    truths.push(tr);
    Ok(SimulatedStudy {
        legacy: StudyCollection::validated(legacy)?,
        future,
        truth: SimTruth {
            trials: truths,
            seed: config.seed,
        },
    })
}

/// Number of covariates correlated in exactly `m` trials, for every `m ≥ 1` that occurs.
pub fn overlap_census(truth: &SimTruth) -> BTreeMap<usize, usize> {
    let mut per_covariate: BTreeMap<usize, usize> = BTreeMap::new();
    for trial in &truth.trials {
        for &j in &trial.correlated_indices {
            *per_covariate.entry(j).or_default() += 1;
        }
    }
    let mut census = BTreeMap::new();
    for m in per_covariate.into_values() {
        *census.entry(m).or_default() += 1;
    }
    census
}
