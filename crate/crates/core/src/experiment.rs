//! Replicated simulation experiments, parameter sweeps, and external-data
//! evaluation, with deterministic CSV result tables.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{evaluate_truth, run_cv, CvScheme, EvalSettings, TuneCriterion};
use crate::data::{load_study_csv, OutcomeKind, StudyCollection, TrialDataset};
use crate::error::{Error, Result, ResultExt};
use crate::learners::{default_grid, HyperGrid, LassoOptions, ModelFamily, ModelSpec};
use crate::metrics::{CalibrationPolicy, MetricName, MetricReport, MetricValue};
use crate::seed;
use crate::sim::{simulate_collection, SimConfig};

pub const CSV_HEADER: [&str; 8] = [
    "replicate",
    "sweep_value",
    "scheme",
    "model",
    "metric",
    "fold_id",
    "value",
    "missing_reason",
];

pub const FAST_MARKER: &str = "# profile=fast";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Sim,
    Sweep,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Kfold,
    Loso,
}

impl SchemeName {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Kfold => "kfold",
            SchemeName::Loso => "loso",
        }
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kfold" => Ok(SchemeName::Kfold),
            "loso" => Ok(SchemeName::Loso),
            other => Err(Error::config(format!("unknown scheme `{other}` (expected kfold or loso)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rho,
    Beta,
    NCorrelated,
    NPerTrial,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Rho => "rho",
            SweepAxis::Beta => "beta",
            SweepAxis::NCorrelated => "n_correlated",
            SweepAxis::NPerTrial => "n_per_trial",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Rho => vec![0.1, 0.3, 0.5, 0.7, 0.9],
            SweepAxis::Beta => vec![0.25, 0.5, 1.0, 2.0],
            SweepAxis::NCorrelated => vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            SweepAxis::NPerTrial => vec![100.0, 300.0, 500.0],
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(Error::config(format!("sweep value {v} for {} must be a whole number", self.as_str())))
            }
        };
        match self {
            SweepAxis::Rho => cfg.rho = value,
            SweepAxis::Beta => cfg.beta = value,
            SweepAxis::NCorrelated => cfg.n_correlated = count(value)?,
            SweepAxis::NPerTrial => cfg.n_per_trial = count(value)?,
        }
        cfg.validate().context(|| format!("sweep {} = {value}", self.as_str()))?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::Rho, SweepAxis::Beta, SweepAxis::NCorrelated, SweepAxis::NPerTrial]
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub sim: SimConfig,
    pub replicates: usize,
    pub schemes: Vec<SchemeName>,
    pub models: Vec<ModelFamily>,
    /// Defaults by outcome kind when absent.
    pub metrics: Option<Vec<MetricName>>,
    pub calibration: CalibrationPolicy,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Option<Vec<f64>>,
    pub external_path: Option<PathBuf>,
    pub future: Option<String>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub fast: bool,
    pub kfold_k: usize,
    pub criterion: Option<TuneCriterion>,
    pub standardize: bool,
    /// Per-family grid replacements.
    pub grids: Vec<HyperGrid>,
    /// Overrides the tree count of the forest grid.
    pub forest_trees: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Sim,
            sim: SimConfig::default(),
            replicates: 100,
            schemes: vec![SchemeName::Kfold, SchemeName::Loso],
            models: vec![ModelFamily::Lasso],
            metrics: None,
            calibration: CalibrationPolicy::default(),
            sweep_axis: None,
            sweep_values: None,
            external_path: None,
            future: None,
            output_dir: PathBuf::from("results"),
            master_seed: 0,
            jobs: 0,
            fast: false,
            kfold_k: 4,
            criterion: None,
            standardize: true,
            grids: Vec::new(),
            forest_trees: None,
        }
    }
}

pub const FAST_N_PER_TRIAL: usize = 300;
pub const FAST_FOREST_TREES: usize = 100;
pub const FAST_REPLICATES: usize = 30;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).context(|| format!("config {}", path.display()))
    }

    /// Configuration after applying the fast profile.
    pub fn effective(&self) -> Self {
        let mut cfg = self.clone();
        if cfg.fast {
            cfg.sim.n_per_trial = FAST_N_PER_TRIAL;
            cfg.replicates = FAST_REPLICATES;
            cfg.forest_trees = Some(FAST_FOREST_TREES);
        }
        cfg
    }

    pub fn metric_list(&self, kind: OutcomeKind) -> Vec<MetricName> {
        let mut list = match &self.metrics {
            Some(m) => m.clone(),
            None => match kind {
                OutcomeKind::Continuous => vec![MetricName::GenR2],
                OutcomeKind::Binary => vec![
                    MetricName::Auc,
                    MetricName::Orr1,
                    MetricName::Orr0,
                    MetricName::DeltaOrr,
                    MetricName::Accuracy,
                ],
            },
        };
        list.sort();
        list.dedup();
        list
    }

    fn sorted_schemes(&self) -> Vec<SchemeName> {
        let mut s = self.schemes.clone();
        s.sort();
        s.dedup();
        s
    }

    fn sorted_models(&self) -> Vec<ModelFamily> {
        let mut m = self.models.clone();
        m.sort();
        m.dedup();
        m
    }

    pub fn sweep_values_or_default(&self) -> Option<Vec<f64>> {
        self.sweep_values
            .clone()
            .or_else(|| self.sweep_axis.map(SweepAxis::default_values))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if self.schemes.is_empty() || self.models.is_empty() {
            return Err(Error::config("schemes and models must be non-empty"));
        }
        if self.metrics.as_ref().is_some_and(|m| m.is_empty()) {
            return Err(Error::config("metrics list is empty"));
        }
        if self.kfold_k < 2 {
            return Err(Error::config(format!("kfold_k must be at least 2, got {}", self.kfold_k)));
        }
        if self.forest_trees == Some(0) {
            return Err(Error::config("forest_trees must be positive"));
        }
        self.calibration.validate()?;
        for g in &self.grids {
            g.validate()?;
        }
        if self.mode != Mode::External {
            self.sim.validate()?;
        }
        if self.mode == Mode::Sweep {
            let axis = self.sweep_axis.ok_or_else(|| Error::config("sweep mode needs sweep_axis"))?;
            let values = self.sweep_values_or_default().unwrap_or_default();
            if values.is_empty() {
                return Err(Error::config("sweep_values is empty"));
            }
            for v in values {
                axis.apply(&self.sim, v)?;
            }
        }
        if self.mode == Mode::External {
            if self.external_path.is_none() {
                return Err(Error::config("external mode needs external_path"));
            }
            if self.future.is_none() {
                return Err(Error::config("external mode needs a future study id"));
            }
        }
        Ok(())
    }

    pub fn model_spec(&self, family: ModelFamily, kind: OutcomeKind) -> ModelSpec {
        let mut grid = self
            .grids
            .iter()
            .find(|g| g.family() == family)
            .cloned()
            .unwrap_or_else(|| default_grid(family, kind));
        if let (HyperGrid::RandomForest { n_trees, .. }, Some(t)) = (&mut grid, self.forest_trees) {
            *n_trees = t;
        }
        ModelSpec {
            grid,
            lasso: LassoOptions {
                standardize: self.standardize,
                ..LassoOptions::default()
            },
        }
    }

    fn settings(&self, kind: OutcomeKind) -> EvalSettings {
        EvalSettings {
            criterion: self.criterion,
            calibration: self.calibration.clone(),
            ..EvalSettings::new(self.metric_list(kind))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub replicate: usize,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub model: String,
    pub metric: String,
    /// `None` marks the aggregate row.
    pub fold_id: Option<usize>,
    pub value: MetricValue,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub fast: bool,
}

impl ResultTable {
    pub fn aggregates(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.fold_id.is_none())
    }

    /// Aggregate values for (scheme, model, metric), in row order.
    pub fn aggregate_values(&self, scheme: &str, model: &str, metric: &str) -> Vec<(usize, Option<f64>, Option<f64>)> {
        self.aggregates()
            .filter(|r| r.scheme == scheme && r.model == model && r.metric == metric)
            .map(|r| (r.replicate, r.sweep_value, r.value.value()))
            .collect()
    }
}

fn report_rows(
    out: &mut Vec<ResultRow>,
    replicate: usize,
    sweep_value: Option<f64>,
    scheme: &str,
    model: ModelFamily,
    metrics: &[MetricName],
    folds: &[(usize, &MetricReport)],
    aggregate: &MetricReport,
) {
    let missing = || MetricValue::missing("not computed");
    for &m in metrics {
        let row = |fold_id, value| ResultRow {
            replicate,
            sweep_value,
            scheme: scheme.to_string(),
            model: model.as_str().to_string(),
            metric: m.as_str().to_string(),
            fold_id,
            value,
        };
        for (f, report) in folds {
            out.push(row(Some(*f), report.get(m).cloned().unwrap_or_else(missing)));
        }
        out.push(row(None, aggregate.get(m).cloned().unwrap_or_else(missing)));
    }
}

/// All rows for one legacy collection and future trial.
fn evaluate_replicate(
    cfg: &ExperimentConfig,
    legacy: &StudyCollection,
    future: &TrialDataset,
    replicate: usize,
    sweep_value: Option<f64>,
    rep_seed: u64,
) -> Result<Vec<ResultRow>> {
    let kind = legacy.outcome_kind();
    let settings = cfg.settings(kind);
    let mut rows = Vec::new();
    let models = cfg.sorted_models();
    for scheme_name in cfg.sorted_schemes() {
        let scheme = match scheme_name {
            SchemeName::Kfold => CvScheme::KFold {
                k: cfg.kfold_k,
                seed: seed::derive(rep_seed, seed::tag("kfold-plan")),
            },
            SchemeName::Loso => CvScheme::LeaveOneStudyOut,
        };
        for &model in &models {
            let spec = cfg.model_spec(model, kind);
            let run_seed = seed::derive_path(rep_seed, &[seed::tag(scheme_name.as_str()), seed::tag(model.as_str())]);
            let res = run_cv(legacy, &scheme, &spec, &settings, Some(future.feature_view()), run_seed)
                .context(|| format!("replicate {replicate}, scheme {}, model {model}", scheme_name.as_str()))?;
            let folds: Vec<(usize, &MetricReport)> = res.folds.iter().map(|f| (f.fold_id, &f.report)).collect();
            report_rows(&mut rows, replicate, sweep_value, scheme_name.as_str(), model, &settings.metrics, &folds, &res.aggregate);
        }
    }
    for &model in &models {
        let spec = cfg.model_spec(model, kind);
        let truth_seed = seed::derive_path(rep_seed, &[seed::tag("truth"), seed::tag(model.as_str())]);
        let t = evaluate_truth(legacy, future, &spec, &settings, truth_seed)
            .context(|| format!("replicate {replicate}, scheme truth, model {model}"))?;
        report_rows(&mut rows, replicate, sweep_value, "truth", model, &settings.metrics, &[], &t.report);
    }
    Ok(rows)
}

/// Seed of replicate `r`; shared across sweep values.
pub fn replicate_seed(master_seed: u64, replicate: usize) -> u64 {
    seed::derive(master_seed, replicate as u64)
}

fn simulated_rows(cfg: &ExperimentConfig, sim: &SimConfig, replicate: usize, sweep_value: Option<f64>) -> Result<Vec<ResultRow>> {
    let rep_seed = replicate_seed(cfg.master_seed, replicate);
    let sim = SimConfig {
        seed: seed::derive(rep_seed, seed::tag("simulate")),
        ..sim.clone()
    };
    let study = simulate_collection(&sim).context(|| format!("replicate {replicate}"))?;
    evaluate_replicate(cfg, &study.legacy, &study.future, replicate, sweep_value, rep_seed)
}

fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}

fn run_tasks(cfg: &ExperimentConfig, tasks: Vec<(Option<f64>, SimConfig, usize)>) -> Result<ResultTable> {
    let chunks: Vec<Vec<ResultRow>> = with_pool(cfg.jobs, || {
        tasks
            .par_iter()
            .map(|(value, sim, r)| simulated_rows(cfg, sim, *r, *value))
            .collect::<Result<_>>()
    })??;
    Ok(ResultTable {
        rows: chunks.into_iter().flatten().collect(),
        fast: cfg.fast,
    })
}

pub fn run_replicated_sim(config: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = config.effective();
    cfg.validate()?;
    let tasks = (0..cfg.replicates).map(|r| (None, cfg.sim.clone(), r)).collect();
    run_tasks(&cfg, tasks)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = config.effective();
    let cfg = ExperimentConfig {
        mode: Mode::Sweep,
        ..cfg
    };
    cfg.validate()?;
    let axis = cfg.sweep_axis.expect("validated");
    let mut tasks = Vec::new();
    for v in cfg.sweep_values_or_default().expect("validated") {
        let sim = axis.apply(&cfg.sim, v)?;
        for r in 0..cfg.replicates {
            tasks.push((Some(v), sim.clone(), r));
        }
    }
    run_tasks(&cfg, tasks)
}

pub fn run_external(config: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = ExperimentConfig {
        mode: Mode::External,
        ..config.effective()
    };
    cfg.validate()?;
    let path = cfg.external_path.as_ref().expect("validated");
    let future_id = cfg.future.as_deref().expect("validated");
    let all = load_study_csv(path, None)?;
    all.ensure_valid()?;
    if all.len() < 3 {
        return Err(Error::data(format!(
            "external evaluation needs at least 3 studies (2 legacy + 1 future), found {}",
            all.len()
        )));
    }
    let ids = all.study_ids().join(", ");
    let (legacy, future) = all
        .split_off(future_id)
        .ok_or_else(|| Error::data(format!("future study `{future_id}` not found; available studies: {ids}")))?;
    let rows = with_pool(cfg.jobs, || evaluate_replicate(&cfg, &legacy, &future, 0, None, replicate_seed(cfg.master_seed, 0)))??;
    Ok(ResultTable { rows, fast: cfg.fast })
}

pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    match config.mode {
        Mode::Sim => run_replicated_sim(config),
        Mode::Sweep => run_sweep(config),
        Mode::External => run_external(config),
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_csv(table: &ResultTable, out: impl Write) -> Result<()> {
    let mut out = out;
    let io = |e: std::io::Error| Error::io("<results>", e);
    if table.fast {
        writeln!(out, "{FAST_MARKER}").map_err(io)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::data(format!("writing results: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        let (value, reason) = match &r.value {
            MetricValue::Value(v) => (fmt_value(*v), String::new()),
            MetricValue::Missing(m) => (String::new(), m.clone()),
        };
        w.write_record([
            r.replicate.to_string(),
            r.sweep_value.map(fmt_value).unwrap_or_default(),
            r.scheme.clone(),
            r.model.clone(),
            r.metric.clone(),
            r.fold_id.map(|f| f.to_string()).unwrap_or_default(),
            value,
            reason,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file)).context(|| format!("writing {}", path.display()))
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

pub fn parse_csv(text: &str, path: &Path) -> Result<ResultTable> {
    let fast = text.lines().next() == Some(FAST_MARKER);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1 + usize::from(fast),
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2 + usize::from(fast);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| parse_err(format!("invalid {what} `{s}`")))
        };
        let opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        let replicate = rec[0].parse::<usize>().map_err(|_| parse_err(format!("invalid replicate `{}`", &rec[0])))?;
        let fold_id = if rec[5].is_empty() {
            None
        } else {
            Some(rec[5].parse::<usize>().map_err(|_| parse_err(format!("invalid fold_id `{}`", &rec[5])))?)
        };
        let value = match (opt(&rec[6], "value")?, &rec[7]) {
            (Some(v), "") => MetricValue::Value(v),
            (None, reason) if !reason.is_empty() => MetricValue::Missing(reason.to_string()),
            _ => return Err(parse_err("exactly one of value and missing_reason must be set".into())),
        };
        rows.push(ResultRow {
            replicate,
            sweep_value: opt(&rec[1], "sweep_value")?,
            scheme: rec[2].to_string(),
            model: rec[3].to_string(),
            metric: rec[4].to_string(),
            fold_id,
            value,
        });
    }
    Ok(ResultTable { rows, fast })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: MetricValue, fold_id: Option<usize>) -> ResultRow {
        ResultRow {
            replicate: 3,
            sweep_value: Some(0.3),
            scheme: "loso".into(),
            model: "lasso".into(),
            metric: "gen_r2".into(),
            fold_id,
            value,
        }
    }

    fn render(t: &ResultTable) -> String {
        let mut buf = Vec::new();
        write_csv(t, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(
            render(&ResultTable::default()),
            "replicate,sweep_value,scheme,model,metric,fold_id,value,missing_reason\n"
        );
    }

    #[test]
    fn six_decimal_values_and_blanks() {
        let t = ResultTable {
            rows: vec![
                row(MetricValue::Value(0.5), Some(1)),
                row(MetricValue::missing("empty biomarker group"), None),
            ],
            fast: true,
        };
        let text = render(&t);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# profile=fast");
        assert_eq!(lines[2], "3,0.300000,loso,lasso,gen_r2,1,0.500000,");
        assert_eq!(lines[3], "3,0.300000,loso,lasso,gen_r2,,,empty biomarker group");
        assert!(!text.contains('\r'));
        assert_eq!(render(&t), text);
        let back = parse_csv(&text, Path::new("t.csv")).unwrap();
        assert!(back.fast);
        assert_eq!(back.rows, t.rows);
    }

    #[test]
    fn config_defaults_and_unknown_fields() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg.replicates, 100);
        assert_eq!(cfg.kfold_k, 4);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"mode":"sweep","sweep_axis":"rho","sweep_values":[0.3,0.9],"models":["gbm"],"schemes":["loso"]}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.models, vec![ModelFamily::Gbm]);
    }

    #[test]
    fn invalid_sweeps_rejected() {
        let bad = |json: &str| ExperimentConfig::from_json(json).unwrap().validate().unwrap_err().exit_code();
        assert_eq!(bad(r#"{"mode":"sweep"}"#), 1);
        assert_eq!(bad(r#"{"mode":"sweep","sweep_axis":"rho","sweep_values":[]}"#), 1);
        assert_eq!(bad(r#"{"mode":"sweep","sweep_axis":"rho","sweep_values":[1.5]}"#), 1);
        assert_eq!(bad(r#"{"mode":"sweep","sweep_axis":"n_correlated","sweep_values":[2.5]}"#), 1);
        assert_eq!(bad(r#"{"replicates":0}"#), 1);
    }

    #[test]
    fn fast_profile_overrides() {
        let cfg = ExperimentConfig {
            fast: true,
            ..ExperimentConfig::default()
        }
        .effective();
        assert_eq!(cfg.sim.n_per_trial, 300);
        assert_eq!(cfg.replicates, 30);
        match cfg.model_spec(ModelFamily::RandomForest, OutcomeKind::Binary).grid {
            HyperGrid::RandomForest { n_trees, .. } => assert_eq!(n_trees, 100),
            _ => unreachable!(),
        }
    }

    #[test]
    fn default_metrics_follow_outcome() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.metric_list(OutcomeKind::Continuous), vec![MetricName::GenR2]);
        assert!(cfg.metric_list(OutcomeKind::Binary).contains(&MetricName::DeltaOrr));
    }
}
