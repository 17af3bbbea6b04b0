//! Leave-one-study-out versus K-fold cross-validation for multi-trial
//! biomarker models.

pub mod cv;
pub mod data;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod metrics;
pub mod plot;
pub mod seed;
pub mod sim;

pub use cv::{evaluate_truth, make_folds, run_cv, tune, CvResult, CvScheme, EvalSettings, TuneCriterion};
pub use data::{
    load_study_csv, pool_with_labels, validate_collection, FeatureView, FoldPlan, OutcomeKind, PooledData,
    PredictionRecord, StudyCollection, TrialDataset,
};
pub use error::{Error, Result};
pub use learners::{fit, FittedModel, HyperGrid, Hyperparams, ModelFamily, ModelSpec};
pub use metrics::{CalibrationPolicy, MetricName, MetricReport, MetricValue};
pub use sim::{simulate_collection, SimConfig};
