//! Accuracy under test-time MCAR missingness, over repeated k-fold splits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::baselines::{friedman_predict, surrogate_predict, KnnImputer, MeanImputer};
use crate::bench::config::{ExperimentConfig, Method};
use crate::bench::derive_seed;
use crate::bench::metrics::{accuracy, mean_ci};
use crate::convert::{rf_to_gef, CombineMode};
use crate::data::{inject_mcar, kfold, load_csv, standardize, Dataset, Schema};
use crate::error::Result;
use crate::forest::{learn_forest, ForestParams, TreeParams};
use crate::inference::{predict_gef, predict_gefplus};

/// Accuracy of one method on one fold at one rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub dataset: String,
    pub repeat: usize,
    pub fold: usize,
    pub method: Method,
    pub rate: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub rate: f64,
    pub mean: f64,
    pub half_width: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    /// Sorted by dataset order, then repeat, fold, method and rate.
    pub runs: Vec<RunResult>,
}

impl ExperimentReport {
    /// Per-run accuracies of one (dataset, method, rate) cell in
    /// (repeat, fold) order.
    pub fn accuracies(&self, dataset: &str, method: Method, rate: f64) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.dataset == dataset && r.method == method && r.rate == rate)
            .map(|r| r.accuracy)
            .collect()
    }

    pub fn datasets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.dataset) {
                out.push(r.dataset.clone());
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut cells: BTreeMap<(usize, Method, u64), Vec<f64>> = BTreeMap::new();
        let names = self.datasets();
        for r in &self.runs {
            let d = names.iter().position(|n| *n == r.dataset).expect("listed");
            cells.entry((d, r.method, r.rate.to_bits())).or_default().push(r.accuracy);
        }
        cells
            .into_iter()
            .map(|((d, method, rate), accs)| {
                let (mean, half_width) = mean_ci(&accs);
                ReportRow {
                    dataset: names[d].clone(),
                    method,
                    rate: f64::from_bits(rate),
                    mean,
                    half_width,
                    runs: accs.len(),
                }
            })
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("dataset\tmethod\trate\taccuracy\thalf_width\truns\n");
        for r in self.rows() {
            writeln!(
                s,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
                r.dataset, r.method, r.rate, r.mean, r.half_width, r.runs
            )
            .expect("writing to a string");
        }
        s
    }

    /// Per-run tab-separated accuracies.
    pub fn runs_tsv(&self) -> String {
        let mut s = String::from("dataset\trepeat\tfold\tmethod\trate\taccuracy\n");
        for r in &self.runs {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.6}",
                r.dataset, r.repeat, r.fold, r.method, r.rate, r.accuracy
            )
            .expect("writing to a string");
        }
        s
    }
}

/// One repeat/fold job on an in-memory dataset.
#[allow(clippy::too_many_arguments)]
pub fn run_fold(
    name: &str,
    data: &Dataset,
    train_rows: &[usize],
    test_rows: &[usize],
    cfg: &ExperimentConfig,
    repeat: usize,
    fold: usize,
    seed: u64,
) -> Result<Vec<RunResult>> {
    let (train, test) = {
        let train = data.subset(train_rows);
        let test = data.subset(test_rows);
        if cfg.standardize {
            let (t, mut rest, _) = standardize(&train, &[test]);
            (t, rest.remove(0))
        } else {
            (train, test)
        }
    };
    let wants = |m: Method| cfg.methods.contains(&m);
    let params = ForestParams {
        n_trees: cfg.n_trees,
        tree: TreeParams {
            min_samples: cfg.min_samples,
            surrogates: wants(Method::Surrogate),
            ..TreeParams::default()
        },
        bootstrap: true,
    };
    let forest = learn_forest(&train, &params, derive_seed(seed, &[1]))?;
    let gef = if wants(Method::Gef) || wants(Method::GefPlus) {
        Some(rf_to_gef(&forest, &train, &cfg.leaf.model_for(&train), CombineMode::AverageConditionals)?)
    } else {
        None
    };
    let plus = gef.clone().map(|g| g.with_mode(CombineMode::UniformMixture));
    let mean = MeanImputer::fit(&train)?;
    let knn = if wants(Method::KnnImpute) {
        Some(KnnImputer::fit(&train, cfg.knn_k)?)
    } else {
        None
    };
    let truth = test.labels();
    let mut out = Vec::new();
    for (ri, &rate) in cfg.rates.iter().enumerate() {
        let masked = inject_mcar(&test, rate, derive_seed(seed, &[2, ri as u64]))?;
        for &method in &cfg.methods {
            let preds: Vec<usize> = (0..masked.n_rows())
                .map(|r| {
                    let q = masked.instance(r);
                    match method {
                        Method::Rf => forest.predict(&test.row(r)),
                        Method::Gef => predict_gef(gef.as_ref().expect("built"), &q).expect("mode").class,
                        Method::GefPlus => predict_gefplus(plus.as_ref().expect("built"), &q).expect("mode").class,
                        Method::Friedman => friedman_predict(&forest, &q),
                        Method::Surrogate => surrogate_predict(&forest, &q).class,
                        Method::MeanImpute => forest.predict(&mean.impute(&q)),
                        Method::KnnImpute => forest.predict(&knn.as_ref().expect("built").impute(&q)),
                    }
                })
                .collect();
            out.push(RunResult {
                dataset: name.to_string(),
                repeat,
                fold,
                method,
                rate,
                accuracy: accuracy(&preds, truth),
            });
        }
    }
    Ok(out)
}

/// Runs every (dataset, repeat, fold) job of `cfg` on preloaded data. Jobs
/// run concurrently; results are ordered by job key, so the report does not
/// depend on scheduling.
pub fn run_on_datasets(named: &[(String, Dataset)], cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut jobs = Vec::new();
    for (di, (_, d)) in named.iter().enumerate() {
        let folds = kfold(d.n_rows(), cfg.folds, cfg.repeats, derive_seed(cfg.seed, &[di as u64]))?;
        for repeat in 0..cfg.repeats {
            for fold in 0..cfg.folds {
                let (train, test) = folds.split(repeat, fold);
                jobs.push((di, repeat, fold, train, test));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|(di, repeat, fold, train, test)| {
            let seed = derive_seed(cfg.seed, &[*di as u64, *repeat as u64, *fold as u64]);
            let (name, d) = &named[*di];
            run_fold(name, d, train, test, cfg, *repeat, *fold, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        runs: results.into_iter().flatten().collect(),
    })
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<(String, Dataset)>> {
    cfg.datasets
        .iter()
        .map(|spec| {
            let schema = Arc::new(Schema::load(&spec.schema)?);
            Ok((spec.label(), load_csv(&spec.data, schema)?))
        })
        .collect()
}

pub fn run_missing_benchmark(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    run_on_datasets(&load_datasets(cfg)?, cfg)
}
