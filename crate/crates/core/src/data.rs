//! Shared domain types: trials, study collections, pooled views, fold plans,
//! and the flat multi-study CSV format.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Continuous => "continuous",
            OutcomeKind::Binary => "binary",
        }
    }

    pub fn admits(self, value: f64) -> bool {
        match self {
            OutcomeKind::Continuous => value.is_finite(),
            OutcomeKind::Binary => value == 0.0 || value == 1.0,
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(OutcomeKind::Continuous),
            "binary" => Ok(OutcomeKind::Binary),
            other => Err(Error::config(format!("unknown outcome kind `{other}`"))),
        }
    }
}

/// One study's data: an `n × p` feature matrix with named columns and an outcome per row.
///
/// Construction checks shapes only. Value-level invariants (finite cells,
/// 0/1 binary outcomes, unique names) are reported by [`validate_collection`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    study_id: String,
    features: Array2<f64>,
    feature_names: Vec<String>,
    outcome: Vec<f64>,
    outcome_kind: OutcomeKind,
}

impl TrialDataset {
    pub fn new(
        study_id: impl Into<String>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        outcome: Vec<f64>,
        outcome_kind: OutcomeKind,
    ) -> Result<Self> {
        let study_id = study_id.into();
        let (n, p) = features.dim();
        if n == 0 || p == 0 {
            return Err(Error::data(format!(
                "study `{study_id}`: feature matrix is {n}x{p}, need at least one row and one column"
            )));
        }
        if outcome.len() != n {
            return Err(Error::data(format!(
                "study `{study_id}`: {n} feature rows but {} outcomes",
                outcome.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::data(format!(
                "study `{study_id}`: {p} feature columns but {} names",
                feature_names.len()
            )));
        }
        Ok(Self {
            study_id,
            features,
            feature_names,
            outcome,
            outcome_kind,
        })
    }

    pub fn study_id(&self) -> &str {
        &self.study_id
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        self.outcome_kind
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    /// Features-only view, used wherever outcomes must not be reachable.
    pub fn feature_view(&self) -> FeatureView<'_> {
        FeatureView {
            features: self.features.view(),
            names: &self.feature_names,
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for name in &self.feature_names {
            if !seen.insert(name.as_str()) {
                out.push(Violation::new(
                    &self.study_id,
                    ViolationKind::DuplicateFeatureName,
                    format!("column `{name}` appears more than once"),
                ));
                break;
            }
        }
        if let Some(((r, c), _)) = self.features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            out.push(Violation::new(
                &self.study_id,
                ViolationKind::NonFiniteValue,
                format!("feature `{}` row {r}", self.feature_names[c]),
            ));
        }
        if let Some((i, v)) = self.outcome.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            out.push(Violation::new(
                &self.study_id,
                ViolationKind::NonFiniteValue,
                format!("outcome row {i} is {v}"),
            ));
        } else if let Some((i, v)) = self
            .outcome
            .iter()
            .enumerate()
            .find(|(_, &v)| !self.outcome_kind.admits(v))
        {
            out.push(Violation::new(
                &self.study_id,
                ViolationKind::NonBinaryOutcome,
                format!("outcome row {i} is {v}"),
            ));
        }
        out
    }
}

/// Borrowed feature matrix plus its column names, with no outcome attached.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a> {
    pub features: ArrayView2<'a, f64>,
    pub names: &'a [String],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    FeatureMismatch,
    OutcomeKindMismatch,
    NonBinaryOutcome,
    NonFiniteValue,
    DuplicateFeatureName,
    DuplicateStudyId,
    EmptyCollection,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::FeatureMismatch => "feature mismatch",
            ViolationKind::OutcomeKindMismatch => "outcome kind mismatch",
            ViolationKind::NonBinaryOutcome => "non-binary outcome",
            ViolationKind::NonFiniteValue => "non-finite value",
            ViolationKind::DuplicateFeatureName => "duplicate feature name",
            ViolationKind::DuplicateStudyId => "duplicate study id",
            ViolationKind::EmptyCollection => "empty collection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub study_id: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(study_id: &str, kind: ViolationKind, detail: String) -> Self {
        Self {
            study_id: study_id.to_string(),
            kind,
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "study `{}`: {} ({})", self.study_id, self.kind, self.detail)
    }
}

/// Ordered set of studies that are meant to share one feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCollection {
    studies: Vec<TrialDataset>,
}

impl StudyCollection {
    pub fn new(studies: Vec<TrialDataset>) -> Self {
        Self { studies }
    }

    /// Construct and require that every collection invariant holds.
    pub fn validated(studies: Vec<TrialDataset>) -> Result<Self> {
        let collection = Self::new(studies);
        collection.ensure_valid()?;
        Ok(collection)
    }

    pub fn studies(&self) -> &[TrialDataset] {
        &self.studies
    }

    pub fn len(&self) -> usize {
        self.studies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.studies.is_empty()
    }

    pub fn total_samples(&self) -> usize {
        self.studies.iter().map(TrialDataset::n).sum()
    }

    pub fn study_ids(&self) -> Vec<&str> {
        self.studies.iter().map(TrialDataset::study_id).collect()
    }

    pub fn get(&self, study_id: &str) -> Option<&TrialDataset> {
        self.studies.iter().find(|s| s.study_id == study_id)
    }

    /// Panics on an empty collection.
    pub fn feature_names(&self) -> &[String] {
        self.studies[0].feature_names()
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        self.studies[0].outcome_kind()
    }

    /// Split one study off, returning (rest, removed).
    pub fn split_off(mut self, study_id: &str) -> Option<(StudyCollection, TrialDataset)> {
        let idx = self.studies.iter().position(|s| s.study_id == study_id)?;
        let removed = self.studies.remove(idx);
        Some((self, removed))
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_collection(self);
        if violations.is_empty() {
            return Ok(());
        }
        let listed: Vec<String> = violations.iter().map(ToString::to_string).collect();
        Err(Error::data(format!("invalid study collection: {}", listed.join("; "))))
    }
}

/// Check every collection invariant. An empty result means the collection is valid.
pub fn validate_collection(collection: &StudyCollection) -> Vec<Violation> {
    let Some(first) = collection.studies.first() else {
        return vec![Violation::new("", ViolationKind::EmptyCollection, "no studies".into())];
    };
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for study in &collection.studies {
        if !ids.insert(study.study_id.as_str()) {
            out.push(Violation::new(
                &study.study_id,
                ViolationKind::DuplicateStudyId,
                "study id used more than once".into(),
            ));
        }
        if study.feature_names != first.feature_names {
            let detail = match study
                .feature_names
                .iter()
                .zip(&first.feature_names)
                .position(|(a, b)| a != b)
            {
                Some(i) => format!(
                    "column {i} is `{}`, expected `{}`",
                    study.feature_names[i], first.feature_names[i]
                ),
                None => format!(
                    "{} feature columns, expected {}",
                    study.p(),
                    first.p()
                ),
            };
            out.push(Violation::new(&study.study_id, ViolationKind::FeatureMismatch, detail));
        }
        if study.outcome_kind != first.outcome_kind {
            out.push(Violation::new(
                &study.study_id,
                ViolationKind::OutcomeKindMismatch,
                format!("{}, expected {}", study.outcome_kind, first.outcome_kind),
            ));
        }
        out.extend(study.violations());
    }
    out
}

/// All studies stacked row-wise, with the originating study of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledData {
    pub features: Array2<f64>,
    pub outcome: Vec<f64>,
    /// Index into `study_ids` for every row.
    pub study_index: Vec<usize>,
    /// Row position within the originating study.
    pub sample_index: Vec<usize>,
    pub study_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub outcome_kind: OutcomeKind,
}

impl PooledData {
    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn label(&self, row: usize) -> &str {
        &self.study_ids[self.study_index[row]]
    }

    pub fn labels(&self) -> Vec<&str> {
        (0..self.n()).map(|r| self.label(r)).collect()
    }

    /// Rows in the given order. Study labels keep referring to the full id list.
    pub fn subset(&self, rows: &[usize]) -> PooledData {
        PooledData {
            features: self.features.select(Axis(0), rows),
            outcome: rows.iter().map(|&r| self.outcome[r]).collect(),
            study_index: rows.iter().map(|&r| self.study_index[r]).collect(),
            sample_index: rows.iter().map(|&r| self.sample_index[r]).collect(),
            study_ids: self.study_ids.clone(),
            feature_names: self.feature_names.clone(),
            outcome_kind: self.outcome_kind,
        }
    }

    /// Rebuild one dataset per study label, in label order, skipping labels with no rows.
    pub fn regroup(&self) -> Result<StudyCollection> {
        let mut studies = Vec::new();
        for (s, id) in self.study_ids.iter().enumerate() {
            let mut rows: Vec<usize> = (0..self.n()).filter(|&r| self.study_index[r] == s).collect();
            if rows.is_empty() {
                continue;
            }
            rows.sort_by_key(|&r| self.sample_index[r]);
            studies.push(TrialDataset::new(
                id.clone(),
                self.features.select(Axis(0), &rows),
                self.feature_names.clone(),
                rows.iter().map(|&r| self.outcome[r]).collect(),
                self.outcome_kind,
            )?);
        }
        Ok(StudyCollection::new(studies))
    }
}

/// Stack a valid collection in study order, then within-study order.
pub fn pool_with_labels(collection: &StudyCollection) -> Result<PooledData> {
    collection.ensure_valid()?;
    let views: Vec<_> = collection.studies.iter().map(|s| s.features.view()).collect();
    let features = ndarray::concatenate(Axis(0), &views)
        .map_err(|e| Error::data(format!("cannot stack studies: {e}")))?;
    let mut outcome = Vec::with_capacity(features.nrows());
    let mut study_index = Vec::with_capacity(features.nrows());
    let mut sample_index = Vec::with_capacity(features.nrows());
    for (s, study) in collection.studies.iter().enumerate() {
        outcome.extend_from_slice(&study.outcome);
        study_index.extend(std::iter::repeat_n(s, study.n()));
        sample_index.extend(0..study.n());
    }
    Ok(PooledData {
        features,
        outcome,
        study_index,
        sample_index,
        study_ids: collection.studies.iter().map(|s| s.study_id.clone()).collect(),
        feature_names: collection.feature_names().to_vec(),
        outcome_kind: collection.outcome_kind(),
    })
}

/// One held-out prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub study_id: String,
    pub sample_index: usize,
    pub score: f64,
    pub truth: f64,
    pub fold_id: usize,
}

/// Assignment of every pooled row to a fold. All folds are non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n_folds: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n_folds: usize, assignment: Vec<usize>) -> Result<Self> {
        let mut counts = vec![0usize; n_folds];
        for &f in &assignment {
            if f >= n_folds {
                return Err(Error::data(format!("fold id {f} out of range 0..{n_folds}")));
            }
            counts[f] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::data(format!("fold {empty} is empty")));
        }
        Ok(Self { n_folds, assignment })
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    /// Fold of each pooled row.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_samples(&self) -> usize {
        self.assignment.len()
    }

    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&r| self.assignment[r] == fold).collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&r| self.assignment[r] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Fold of a sample addressed by (study id, row within study).
    pub fn fold_for(&self, pooled: &PooledData, study_id: &str, sample_index: usize) -> Option<usize> {
        (0..pooled.n())
            .find(|&r| pooled.label(r) == study_id && pooled.sample_index[r] == sample_index)
            .map(|r| self.assignment[r])
    }
}

/// Read the flat multi-study CSV (`study_id,outcome,<features...>`).
///
/// Outcome kind is inferred as binary when every outcome is 0 or 1, unless `kind` is given.
pub fn load_study_csv(path: &Path, kind: Option<OutcomeKind>) -> Result<StudyCollection> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_study_csv(file, path, kind)
}

pub fn read_study_csv(reader: impl Read, path: &Path, kind: Option<OutcomeKind>) -> Result<StudyCollection> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
        .clone();
    if header.len() < 3 || &header[0] != "study_id" || &header[1] != "outcome" {
        return Err(parse_err(
            1,
            "header must be `study_id,outcome,<feature...>` with at least one feature column".into(),
        ));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let p = feature_names.len();

    struct Group {
        id: String,
        cells: Vec<f64>,
        outcome: Vec<f64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = &record[0];
        if id.is_empty() {
            return Err(parse_err(line, "missing study_id".into()));
        }
        let parse_cell = |col: usize| -> Result<f64> {
            let cell = &record[col];
            if cell.is_empty() {
                return Err(parse_err(line, format!("missing value in column `{}`", &header[col])));
            }
            cell.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("non-numeric value `{cell}` in column `{}`", &header[col])))
        };
        let g = *by_id.entry(id.to_string()).or_insert_with(|| {
            groups.push(Group {
                id: id.to_string(),
                cells: Vec::new(),
                outcome: Vec::new(),
            });
            groups.len() - 1
        });
        let y = parse_cell(1)?;
        let group = &mut groups[g];
        group.outcome.push(y);
        for col in 2..record.len() {
            let v = parse_cell(col)?;
            group.cells.push(v);
        }
    }
    if groups.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    let kind = kind.unwrap_or_else(|| {
        let all_binary = groups
            .iter()
            .flat_map(|g| g.outcome.iter())
            .all(|&y| OutcomeKind::Binary.admits(y));
        if all_binary {
            OutcomeKind::Binary
        } else {
            OutcomeKind::Continuous
        }
    });
    let studies = groups
        .into_iter()
        .map(|g| {
            let n = g.outcome.len();
            let features = Array2::from_shape_vec((n, p), g.cells).expect("row width checked by reader");
            TrialDataset::new(g.id, features, feature_names.clone(), g.outcome, kind)
        })
        .collect::<Result<Vec<_>>>()?;
    StudyCollection::validated(studies)
}

/// Write a collection in the flat CSV format, LF line endings, shortest round-trip float text.
pub fn write_study_csv(collection: &StudyCollection, out: &mut impl Write) -> std::io::Result<()> {
    if collection.is_empty() {
        return Ok(());
    }
    write!(out, "study_id,outcome")?;
    for name in collection.feature_names() {
        write!(out, ",{name}")?;
    }
    out.write_all(b"\n")?;
    for study in collection.studies() {
        for (row, y) in study.features.rows().into_iter().zip(&study.outcome) {
            write!(out, "{},{}", study.study_id, y)?;
            for v in row {
                write!(out, ",{v}")?;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn save_study_csv(collection: &StudyCollection, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_study_csv(collection, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("f{j}")).collect()
    }

    fn study(id: &str, n: usize, p: usize, kind: OutcomeKind) -> TrialDataset {
        let features = Array2::from_shape_fn((n, p), |(i, j)| (i * p + j) as f64 * 0.5);
        let outcome = (0..n).map(|i| (i % 2) as f64).collect();
        TrialDataset::new(id, features, names(p), outcome, kind).unwrap()
    }

    #[test]
    fn two_matching_studies_are_valid() {
        let c = StudyCollection::new(vec![
            study("A", 4, 5, OutcomeKind::Binary),
            study("B", 3, 5, OutcomeKind::Binary),
        ]);
        assert!(validate_collection(&c).is_empty());
    }

    #[test]
    fn missing_feature_column_is_a_mismatch() {
        let c = StudyCollection::new(vec![
            study("A", 4, 5, OutcomeKind::Binary),
            study("B", 3, 4, OutcomeKind::Binary),
        ]);
        let v = validate_collection(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].study_id, "B");
        assert_eq!(v[0].kind.to_string(), "feature mismatch");
    }

    #[test]
    fn outcome_two_is_not_binary() {
        let bad = TrialDataset::new(
            "B",
            Array2::zeros((3, 2)),
            names(2),
            vec![0.0, 2.0, 1.0],
            OutcomeKind::Binary,
        )
        .unwrap();
        let c = StudyCollection::new(vec![study("A", 3, 2, OutcomeKind::Binary), bad]);
        let v = validate_collection(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind.to_string(), "non-binary outcome");
    }

    #[test]
    fn duplicate_ids_and_non_finite_cells_are_reported() {
        let mut x = Array2::zeros((2, 2));
        x[[1, 1]] = f64::NAN;
        let nan = TrialDataset::new("A", x, names(2), vec![0.0, 1.0], OutcomeKind::Binary).unwrap();
        let c = StudyCollection::new(vec![study("A", 2, 2, OutcomeKind::Binary), nan]);
        let kinds: Vec<_> = validate_collection(&c).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::DuplicateStudyId));
        assert!(kinds.contains(&ViolationKind::NonFiniteValue));
    }

    #[test]
    fn shape_mismatch_is_rejected_at_construction() {
        assert!(TrialDataset::new("A", Array2::zeros((3, 2)), names(2), vec![0.0; 2], OutcomeKind::Continuous).is_err());
        assert!(TrialDataset::new("A", Array2::zeros((3, 2)), names(3), vec![0.0; 3], OutcomeKind::Continuous).is_err());
        assert!(TrialDataset::new("A", Array2::zeros((0, 2)), names(2), vec![], OutcomeKind::Continuous).is_err());
    }

    #[test]
    fn pooling_orders_rows_by_study() {
        let c = StudyCollection::new(vec![
            study("A", 3, 2, OutcomeKind::Binary),
            study("B", 2, 2, OutcomeKind::Binary),
        ]);
        let pooled = pool_with_labels(&c).unwrap();
        assert_eq!(pooled.n(), 5);
        assert_eq!(pooled.labels(), vec!["A", "A", "A", "B", "B"]);
        assert_eq!(pooled.sample_index, vec![0, 1, 2, 0, 1]);
        assert_eq!(pooled.features.row(3), c.studies()[1].features().row(0));
        assert_eq!(pooled.regroup().unwrap(), c);
    }

    #[test]
    fn pooling_a_single_study_is_verbatim() {
        let s = study("A", 4, 3, OutcomeKind::Continuous);
        let pooled = pool_with_labels(&StudyCollection::new(vec![s.clone()])).unwrap();
        assert_eq!(&pooled.features, s.features());
        assert_eq!(pooled.outcome, s.outcome());
    }

    #[test]
    fn pooling_case_study_cohort_sizes() {
        let c = StudyCollection::new(
            [144, 613, 402, 400]
                .iter()
                .enumerate()
                .map(|(i, &n)| study(&format!("s{i}"), n, 2, OutcomeKind::Binary))
                .collect(),
        );
        assert_eq!(pool_with_labels(&c).unwrap().n(), 1559);
    }

    #[test]
    fn pooling_rejects_invalid_collections() {
        let c = StudyCollection::new(vec![
            study("A", 3, 2, OutcomeKind::Binary),
            study("B", 3, 3, OutcomeKind::Binary),
        ]);
        assert!(pool_with_labels(&c).is_err());
    }

    #[test]
    fn fold_plan_rejects_empty_folds() {
        assert!(FoldPlan::new(3, vec![0, 1, 0]).is_err());
        assert!(FoldPlan::new(2, vec![0, 2]).is_err());
        let plan = FoldPlan::new(2, vec![0, 1, 1]).unwrap();
        assert_eq!(plan.held_out(1), vec![1, 2]);
        assert_eq!(plan.training(1), vec![0]);
    }

    #[test]
    fn csv_parses_groups_and_infers_binary() {
        let text = "study_id,outcome,a,b,c\nS1,0,1,2,3\nS1,1,4,5,6\nS2,1,7,8,9e-1\nS2,0,1.5,2.5,3.5\n";
        let c = read_study_csv(text.as_bytes(), Path::new("mem.csv"), None).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.feature_names(), &["a", "b", "c"]);
        assert_eq!(c.outcome_kind(), OutcomeKind::Binary);
        assert_eq!(c.studies()[1].features(), &array![[7.0, 8.0, 0.9], [1.5, 2.5, 3.5]]);
    }

    #[test]
    fn csv_kind_override_and_crlf() {
        let text = "study_id,outcome,a\r\nS1,0,1\r\nS1,1,2\r\n";
        let c = read_study_csv(text.as_bytes(), Path::new("m"), Some(OutcomeKind::Continuous)).unwrap();
        assert_eq!(c.outcome_kind(), OutcomeKind::Continuous);
        assert_eq!(c.studies()[0].n(), 2);
    }

    #[test]
    fn csv_missing_cell_cites_line() {
        let mut text = String::from("study_id,outcome,a,b\n");
        for i in 0..5 {
            text.push_str(&format!("S{},{},1,2\n", i / 3, i % 2));
        }
        text.push_str("S2,1,,2\n");
        let err = read_study_csv(text.as_bytes(), Path::new("d.csv"), None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 7),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_rejects_bad_headers_and_cells() {
        for text in [
            "id,outcome,a\nS,0,1\n",
            "study_id,outcome\nS,0\n",
            "study_id,y,a\nS,0,1\n",
        ] {
            assert!(matches!(
                read_study_csv(text.as_bytes(), Path::new("h"), None),
                Err(Error::Parse { line: 1, .. })
            ));
        }
        let err = read_study_csv("study_id,outcome,a\nS,0,x\n".as_bytes(), Path::new("h"), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_study_csv("study_id,outcome,a\nS,0,1,2\n".as_bytes(), Path::new("h"), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn validate_is_pure() {
        let c = StudyCollection::new(vec![
            study("A", 4, 5, OutcomeKind::Binary),
            study("B", 3, 4, OutcomeKind::Binary),
        ]);
        assert_eq!(validate_collection(&c), validate_collection(&c));
    }
}
