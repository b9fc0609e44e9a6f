//! Tabular datasets of mixed categorical/continuous features with a class
//! column, plus the preprocessing and resampling used by the experiments.
//!
//! Missing cells live in a separate boolean mask. Categorical values are
//! stored as their index (in schema declaration order) inside an `f64`, so a
//! row is always a plain `&[f64]`-compatible vector.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of a single column as declared in a schema sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical { categories: Vec<String> },
    Continuous,
    Class { categories: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Compact, copyable view of a feature's type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "cardinality", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical(usize),
    Continuous,
}

impl FeatureKind {
    pub fn is_categorical(self) -> bool {
        matches!(self, FeatureKind::Categorical(_))
    }

    pub fn cardinality(self) -> Option<usize> {
        match self {
            FeatureKind::Categorical(k) => Some(k),
            FeatureKind::Continuous => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    columns: Vec<ColumnSpec>,
}

/// Column layout of a dataset: features in declaration order plus exactly one
/// class column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    features: Vec<usize>,
    kinds: Vec<FeatureKind>,
    class_col: usize,
}

impl TryFrom<SchemaFile> for Schema {
    type Error = Error;

    fn try_from(file: SchemaFile) -> Result<Self> {
        Schema::new(file.columns)
    }
}

impl From<Schema> for SchemaFile {
    fn from(s: Schema) -> Self {
        SchemaFile { columns: s.columns }
    }
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, c) in columns.iter().enumerate() {
            if seen.insert(c.name.as_str(), i).is_some() {
                return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
            }
        }
        let class_cols: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.kind, ColumnKind::Class { .. }))
            .map(|(i, _)| i)
            .collect();
        if class_cols.len() != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one class column, found {}",
                class_cols.len()
            )));
        }
        let mut features = Vec::new();
        let mut kinds = Vec::new();
        for (i, c) in columns.iter().enumerate() {
            match &c.kind {
                ColumnKind::Class { categories } if categories.len() < 2 => {
                    return Err(Error::Schema(format!(
                        "class column {:?} needs at least 2 categories",
                        c.name
                    )));
                }
                ColumnKind::Class { .. } => {}
                ColumnKind::Categorical { categories } => {
                    if categories.len() < 2 {
                        return Err(Error::Schema(format!(
                            "categorical column {:?} needs at least 2 categories",
                            c.name
                        )));
                    }
                    features.push(i);
                    kinds.push(FeatureKind::Categorical(categories.len()));
                }
                ColumnKind::Continuous => {
                    features.push(i);
                    kinds.push(FeatureKind::Continuous);
                }
            }
        }
        Ok(Schema {
            columns,
            features,
            kinds,
            class_col: class_cols[0],
        })
    }

    /// Schema with generated names (`x0`, `x1`, ..., `class`) and numeric
    /// category labels. Handy for synthetic data.
    pub fn from_kinds(kinds: &[FeatureKind], n_classes: usize) -> Result<Self> {
        let numbered = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>();
        let mut columns: Vec<ColumnSpec> = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| ColumnSpec {
                name: format!("x{i}"),
                kind: match k {
                    FeatureKind::Categorical(c) => ColumnKind::Categorical {
                        categories: numbered(*c),
                    },
                    FeatureKind::Continuous => ColumnKind::Continuous,
                },
            })
            .collect();
        columns.push(ColumnSpec {
            name: "class".into(),
            kind: ColumnKind::Class {
                categories: numbered(n_classes),
            },
        });
        Schema::new(columns)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Schema::new(file.columns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&SchemaFile {
            columns: self.columns.clone(),
        })
        .expect("schema is always representable as toml")
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn feature_kind(&self, f: usize) -> FeatureKind {
        self.kinds[f]
    }

    pub fn feature_name(&self, f: usize) -> &str {
        &self.columns[self.features[f]].name
    }

    pub fn class_name(&self) -> &str {
        &self.columns[self.class_col].name
    }

    pub fn class_labels(&self) -> &[String] {
        match &self.columns[self.class_col].kind {
            ColumnKind::Class { categories } => categories,
            _ => unreachable!("class column index always points at the class column"),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels().len()
    }

    /// Category labels of feature `f`, or `None` for continuous features.
    pub fn categories(&self, f: usize) -> Option<&[String]> {
        match &self.columns[self.features[f]].kind {
            ColumnKind::Categorical { categories } => Some(categories),
            _ => None,
        }
    }

    /// Checks that `value` is legal for feature `f`.
    pub fn validate_value(&self, f: usize, value: f64) -> bool {
        match self.kinds[f] {
            FeatureKind::Continuous => value.is_finite(),
            FeatureKind::Categorical(k) => value >= 0.0 && value < k as f64 && value.fract() == 0.0,
        }
    }
}

/// A feature vector where any coordinate may be unobserved.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialInstance(Vec<Option<f64>>);

impl PartialInstance {
    pub fn new(values: Vec<Option<f64>>) -> Self {
        PartialInstance(values)
    }

    pub fn complete(values: &[f64]) -> Self {
        PartialInstance(values.iter().copied().map(Some).collect())
    }

    pub fn all_missing(m: usize) -> Self {
        PartialInstance(vec![None; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, f: usize) -> Option<f64> {
        self.0[f]
    }

    pub fn set(&mut self, f: usize, value: Option<f64>) {
        self.0[f] = value;
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn n_missing(&self) -> usize {
        self.0.iter().filter(|v| v.is_none()).count()
    }

    /// The observed values, if nothing is missing.
    pub fn to_complete(&self) -> Option<Vec<f64>> {
        self.0.iter().copied().collect()
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.0.len() != schema.n_features() {
            return Err(Error::InvalidData(format!(
                "instance has {} features, schema has {}",
                self.0.len(),
                schema.n_features()
            )));
        }
        for (f, v) in self.0.iter().enumerate() {
            if let Some(v) = v {
                if !schema.validate_value(f, *v) {
                    return Err(Error::InvalidData(format!(
                        "value {v} out of range for feature {}",
                        schema.feature_name(f)
                    )));
                }
            }
        }
        Ok(())
    }
}

impl From<Vec<Option<f64>>> for PartialInstance {
    fn from(v: Vec<Option<f64>>) -> Self {
        PartialInstance(v)
    }
}

/// Immutable column-major table with class labels and an optional mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    columns: Vec<Vec<f64>>,
    missing: Option<Vec<Vec<bool>>>,
    labels: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from feature columns. `missing`, when given, has the
    /// same shape as `columns`; values under a set mask bit are ignored.
    pub fn new(
        schema: Arc<Schema>,
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        missing: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if columns.len() != schema.n_features() {
            return Err(Error::InvalidData(format!(
                "{} columns for {} features",
                columns.len(),
                schema.n_features()
            )));
        }
        let k = schema.n_classes();
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidData(format!("class label {bad} out of range")));
        }
        if let Some(mask) = &missing {
            if mask.len() != columns.len() || mask.iter().any(|c| c.len() != n) {
                return Err(Error::InvalidData("mask shape mismatch".into()));
            }
        }
        for (f, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidData(format!("column {f} has wrong length")));
            }
            for (r, &v) in col.iter().enumerate() {
                let masked = missing.as_ref().is_some_and(|m| m[f][r]);
                if !masked && !schema.validate_value(f, v) {
                    return Err(Error::InvalidData(format!(
                        "row {r}: value {v} invalid for feature {}",
                        schema.feature_name(f)
                    )));
                }
            }
        }
        // An all-false mask carries no information.
        let missing = missing.filter(|m| m.iter().any(|c| c.iter().any(|&b| b)));
        Ok(Dataset {
            schema,
            columns,
            missing,
            labels,
        })
    }

    /// Builds a complete dataset from row vectors.
    pub fn from_rows(schema: Arc<Schema>, rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let m = schema.n_features();
        if let Some(r) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::ArityMismatch {
                row: r + 1,
                expected: m,
                found: rows[r].len(),
            });
        }
        let columns = (0..m).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
        Dataset::new(schema, columns, labels, None)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn column(&self, f: usize) -> &[f64] {
        &self.columns[f]
    }

    pub fn value(&self, row: usize, f: usize) -> f64 {
        self.columns[f][row]
    }

    pub fn is_missing(&self, row: usize, f: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m[f][row])
    }

    pub fn get(&self, row: usize, f: usize) -> Option<f64> {
        (!self.is_missing(row, f)).then(|| self.columns[f][row])
    }

    pub fn has_missing(&self) -> bool {
        self.missing.is_some()
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Full feature vector of a row, ignoring the mask.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Row as a partial instance honouring the mask.
    pub fn instance(&self, row: usize) -> PartialInstance {
        PartialInstance((0..self.n_features()).map(|f| self.get(row, f)).collect())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order; duplicates allowed.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "subset must be nonempty");
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&i| c[i]).collect())
            .collect();
        let missing = self.missing.as_ref().map(|mask| {
            mask.iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect()
        });
        let missing: Option<Vec<Vec<bool>>> = missing;
        Dataset {
            schema: Arc::clone(&self.schema),
            columns,
            missing: missing.filter(|m| m.iter().any(|c| c.iter().any(|&b| b))),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Same data with the mask dropped.
    pub fn without_mask(&self) -> Dataset {
        Dataset {
            missing: None,
            ..self.clone()
        }
    }

    fn with_columns(&self, columns: Vec<Vec<f64>>) -> Dataset {
        Dataset {
            columns,
            ..self.clone()
        }
    }

    /// Per-feature `(min, max)` over observed cells; `None` for columns with
    /// no observed value.
    pub fn bounding_box(&self) -> Vec<Option<(f64, f64)>> {
        (0..self.n_features())
            .map(|f| {
                (0..self.n_rows())
                    .filter_map(|r| self.get(r, f))
                    .fold(None, |acc, v| match acc {
                        None => Some((v, v)),
                        Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
                    })
            })
            .collect()
    }

    /// Writes the dataset as CSV, missing cells as empty strings.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let header: Vec<&str> = (0..self.n_features())
            .map(|f| self.schema.feature_name(f))
            .chain(std::iter::once(self.schema.class_name()))
            .collect();
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec: Vec<String> = (0..self.n_features())
                .map(|f| match (self.get(r, f), self.schema.categories(f)) {
                    (None, _) => String::new(),
                    (Some(v), Some(cats)) => cats[v as usize].clone(),
                    (Some(v), None) => crate::textfloat::format(v),
                })
                .collect();
            rec.push(self.schema.class_labels()[self.labels[r]].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(())
    }
}

/// Reads a CSV file whose header names match the schema's columns (in any
/// order). Empty feature cells become missing; the class may never be empty.
pub fn load_csv(path: impl AsRef<Path>, schema: Arc<Schema>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: Arc<Schema>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut expected: Vec<String> = schema.columns().iter().map(|c| c.name.clone()).collect();
    let mut found = header.clone();
    expected.sort();
    found.sort();
    if expected != found {
        return Err(Error::HeaderMismatch {
            expected: schema.columns().iter().map(|c| c.name.clone()).collect(),
            found: header,
        });
    }
    // position in file of each schema column
    let position: Vec<usize> = schema
        .columns()
        .iter()
        .map(|c| header.iter().position(|h| *h == c.name).expect("checked above"))
        .collect();

    let m = schema.n_features();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut mask: Vec<Vec<bool>> = vec![Vec::new(); m];
    let mut labels = Vec::new();
    let lookup: Vec<Option<HashMap<&str, usize>>> = schema
        .columns()
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Categorical { categories } | ColumnKind::Class { categories } => Some(
                categories
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i))
                    .collect(),
            ),
            ColumnKind::Continuous => None,
        })
        .collect();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(Error::ArityMismatch {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut feature = 0;
        for (ci, spec) in schema.columns().iter().enumerate() {
            let col = position[ci] + 1;
            let cell = &record[position[ci]];
            match &spec.kind {
                ColumnKind::Class { .. } => {
                    if cell.is_empty() {
                        return Err(Error::MissingClass { row });
                    }
                    let idx = lookup[ci].as_ref().unwrap().get(cell).copied().ok_or_else(|| {
                        Error::UnknownCategory {
                            row,
                            col,
                            value: cell.to_string(),
                        }
                    })?;
                    labels.push(idx);
                }
                kind => {
                    if cell.is_empty() {
                        columns[feature].push(0.0);
                        mask[feature].push(true);
                    } else {
                        let v = match kind {
                            ColumnKind::Continuous => cell
                                .parse::<f64>()
                                .ok()
                                .filter(|v| v.is_finite())
                                .ok_or_else(|| Error::UnparsableNumber {
                                    row,
                                    col,
                                    value: cell.to_string(),
                                })?,
                            _ => lookup[ci].as_ref().unwrap().get(cell).copied().ok_or_else(
                                || Error::UnknownCategory {
                                    row,
                                    col,
                                    value: cell.to_string(),
                                },
                            )? as f64,
                        };
                        columns[feature].push(v);
                        mask[feature].push(false);
                    }
                    feature += 1;
                }
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(schema, columns, labels, Some(mask))
}

/// Mean and (population) standard deviation of one continuous column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    #[serde(with = "crate::textfloat")]
    pub mean: f64,
    #[serde(with = "crate::textfloat")]
    pub std: f64,
}

/// Train-set statistics per feature; `None` for categorical features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub columns: Vec<Option<Standardization>>,
}

pub const STD_FLOOR: f64 = 1e-12;

impl ColumnStats {
    pub fn fit(train: &Dataset) -> Self {
        let columns = (0..train.n_features())
            .map(|f| {
                if train.schema().feature_kind(f).is_categorical() {
                    return None;
                }
                let vals: Vec<f64> = (0..train.n_rows()).filter_map(|r| train.get(r, f)).collect();
                if vals.is_empty() {
                    return Some(Standardization { mean: 0.0, std: 1.0 });
                }
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                Some(Standardization {
                    mean,
                    std: var.sqrt().max(STD_FLOOR),
                })
            })
            .collect();
        ColumnStats { columns }
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let columns = d
            .columns
            .iter()
            .zip(&self.columns)
            .map(|(col, st)| match st {
                Some(s) => col.iter().map(|v| (v - s.mean) / s.std).collect(),
                None => col.clone(),
            })
            .collect();
        d.with_columns(columns)
    }

    pub fn apply_instance(&self, q: &PartialInstance) -> PartialInstance {
        PartialInstance(
            q.0.iter()
                .zip(&self.columns)
                .map(|(v, st)| match (v, st) {
                    (Some(v), Some(s)) => Some((v - s.mean) / s.std),
                    (v, _) => *v,
                })
                .collect(),
        )
    }
}

/// Standardizes continuous columns of `train` and every dataset in `others`
/// using statistics of `train` alone.
pub fn standardize(train: &Dataset, others: &[Dataset]) -> (Dataset, Vec<Dataset>, ColumnStats) {
    let stats = ColumnStats::fit(train);
    let t = stats.apply(train);
    let rest = others.iter().map(|d| stats.apply(d)).collect();
    (t, rest, stats)
}

/// Masks each feature cell independently with probability `rate`. Existing
/// mask bits are kept; the class column is never touched.
pub fn inject_mcar(d: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::RateOutOfRange(rate));
    }
    if rate == 0.0 {
        return Ok(d.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (d.n_rows(), d.n_features());
    let mut mask = d.missing.clone().unwrap_or_else(|| vec![vec![false; n]; m]);
    for r in 0..n {
        for col in mask.iter_mut() {
            if rng.random::<f64>() < rate {
                col[r] = true;
            }
        }
    }
    Ok(Dataset {
        missing: Some(mask).filter(|m| m.iter().any(|c| c.iter().any(|&b| b))),
        ..d.clone()
    })
}

/// Fold membership of every row, per repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Folds {
    pub k: usize,
    /// `assignments[repeat][row]` is the test fold of `row`.
    pub assignments: Vec<Vec<usize>>,
}

impl Folds {
    pub fn repeats(&self) -> usize {
        self.assignments.len()
    }

    /// `(train_rows, test_rows)` for one repeat and fold, each ascending.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments[repeat].len()).partition(|&r| self.assignments[repeat][r] == fold);
        (train, test)
    }

    pub fn fold_sizes(&self, repeat: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments[repeat] {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Repeated shuffled k-fold partition of `n` rows. The first `n % k` folds
/// get one extra row.
pub fn kfold(n: usize, k: usize, repeats: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k}, need k >= 2")));
    }
    if n < k {
        return Err(Error::TooFewRows { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (base, rem) = (n / k, n % k);
    let assignments = (0..repeats)
        .map(|_| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut fold_of = vec![0; n];
            let mut pos = 0;
            for fold in 0..k {
                let size = base + usize::from(fold < rem);
                for &row in &perm[pos..pos + size] {
                    fold_of[row] = fold;
                }
                pos += size;
            }
            fold_of
        })
        .collect();
    Ok(Folds { k, assignments })
}

pub fn bootstrap_indices(n: usize, rng: &mut impl RngCore) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `n` rows drawn with replacement.
pub fn bootstrap(d: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = bootstrap_indices(d.n_rows(), &mut rng);
    d.subset(&idx)
}
