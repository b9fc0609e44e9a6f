//! Experiment configuration read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::leaves::{LeafModel, LearnSpnParams};

/// Missing-data classifiers compared by the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Forest on the unmasked test rows; the no-missingness reference.
    Rf,
    Gef,
    #[serde(rename = "gefplus")]
    GefPlus,
    Friedman,
    Surrogate,
    #[serde(rename = "mean")]
    MeanImpute,
    #[serde(rename = "knn")]
    KnnImpute,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Rf,
        Method::Gef,
        Method::GefPlus,
        Method::Friedman,
        Method::Surrogate,
        Method::MeanImpute,
        Method::KnnImpute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rf => "rf",
            Method::Gef => "gef",
            Method::GefPlus => "gefplus",
            Method::Friedman => "friedman",
            Method::Surrogate => "surrogate",
            Method::MeanImpute => "mean",
            Method::KnnImpute => "knn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafKind {
    #[default]
    Factorized,
    Uniform,
    Learnspn,
}

impl LeafKind {
    /// Leaf estimator for a given (standardized) training set; uniform leaves
    /// are clipped to its bounding box.
    pub fn model_for(self, train: &Dataset) -> LeafModel {
        match self {
            LeafKind::Factorized => LeafModel::default(),
            LeafKind::Uniform => LeafModel::uniform_for(train),
            LeafKind::Learnspn => LeafModel::LearnSpn(LearnSpnParams::default()),
        }
    }
}

impl FromStr for LeafKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factorized" => Ok(LeafKind::Factorized),
            "uniform" => Ok(LeafKind::Uniform),
            "learnspn" => Ok(LeafKind::Learnspn),
            _ => Err(Error::Config(format!("unknown leaf kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Report label; defaults to the data file stem.
    pub name: Option<String>,
    pub data: PathBuf,
    pub schema: PathBuf,
}

impl DatasetSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.data
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into())
        })
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_rates() -> Vec<f64> {
    vec![0.0, 0.1, 0.3, 0.5]
}
fn default_trees() -> usize {
    100
}
fn one() -> usize {
    1
}
fn default_folds() -> usize {
    5
}
fn default_repeats() -> usize {
    10
}
fn default_k() -> usize {
    crate::baselines::DEFAULT_KNN_K
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    /// Minimum rows for a node to be split.
    #[serde(default = "one")]
    pub min_samples: usize,
    #[serde(default)]
    pub leaf: LeafKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub knn_k: usize,
    /// Standardize continuous features with training-fold statistics.
    #[serde(default = "yes")]
    pub standardize: bool,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetSpec>) -> Self {
        ExperimentConfig {
            datasets,
            methods: default_methods(),
            rates: default_rates(),
            n_trees: default_trees(),
            min_samples: 1,
            leaf: LeafKind::default(),
            folds: default_folds(),
            repeats: default_repeats(),
            seed: 0,
            knn_k: default_k(),
            standardize: true,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.datasets.is_empty() {
            return bad("no datasets".into());
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return bad(format!("rate {r} outside [0, 1)"));
        }
        if self.n_trees == 0 || self.min_samples == 0 || self.knn_k == 0 {
            return bad("n_trees, min_samples and knn_k must be >= 1".into());
        }
        if self.folds < 2 || self.repeats == 0 {
            return bad("need folds >= 2 and repeats >= 1".into());
        }
        Ok(())
    }

    /// Parses and validates; relative paths are taken from `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for d in &mut cfg.datasets {
            d.data = base.join(&d.data);
            d.schema = base.join(&d.schema);
        }
        if let Some(o) = &mut cfg.out_dir {
            *o = base.join(&*o);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
