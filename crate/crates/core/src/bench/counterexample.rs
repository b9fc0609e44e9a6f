//! Nearest-neighbour imputation against marginalization when the label
//! depends on how far `x2` lies from its conditional mean.
//!
//! `x2` is always missing at test time. Imputation drives `x2` towards
//! `E[x2 | x1]`, exactly where the label is 0, while `P(Y = 1 | x1)` can be
//! close to one. The number of neighbours grows with the training size
//! (`k ≈ n^{4/5}`), the regime in which the imputed value converges to the
//! conditional mean.
//!
//! The default correlation is zero, which keeps the band axis-aligned. With
//! a strong correlation the band is diagonal and axis-aligned trees cannot
//! resolve it at this sample size, so the forest rather than the imputer
//! dominates the error.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::KnnImputer;
use crate::bench::derive_seed;
use crate::bench::synthetic::BandProblem;
use crate::convert::{rf_to_gef, CombineMode};
use crate::data::PartialInstance;
use crate::error::Result;
use crate::forest::{learn_forest, ForestParams};
use crate::inference::predict_gef;
use crate::leaves::LeafModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub rho: f64,
    pub sigma_c: f64,
    /// Band half-widths as multiples of `sigma_c`.
    pub eps_factors: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_trees: usize,
    /// Neighbours for imputation; `None` uses `round(n_train^(4/5))`.
    pub knn_k: Option<usize>,
    pub seeds: usize,
    pub seed: u64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            rho: 0.0,
            sigma_c: 0.6,
            eps_factors: vec![0.5, 0.2, 0.05],
            n_train: 10_000,
            n_test: 2_000,
            n_trees: 30,
            knn_k: None,
            seeds: 3,
            seed: 0,
        }
    }
}

impl CounterexampleConfig {
    pub fn k(&self) -> usize {
        self.knn_k
            .unwrap_or_else(|| (self.n_train as f64).powf(0.8).round() as usize)
            .max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleRow {
    pub eps_factor: f64,
    pub gef: f64,
    pub knn: f64,
    pub bayes: f64,
}

impl CounterexampleRow {
    pub fn gap(&self) -> f64 {
        self.gef - self.knn
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub k: usize,
    pub rows: Vec<CounterexampleRow>,
}

impl CounterexampleReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("eps_factor\tgef_accuracy\tknn_accuracy\tbayes_accuracy\tgap\n");
        for r in &self.rows {
            writeln!(s, "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", r.eps_factor, r.gef, r.knn, r.bayes, r.gap()).expect("string");
        }
        s
    }
}

/// Accuracies `(gef, knn)` for one band width and seed.
pub fn run_once(cfg: &CounterexampleConfig, eps_factor: f64, seed: u64) -> Result<(f64, f64)> {
    let problem = BandProblem {
        rho: cfg.rho,
        sigma_c: cfg.sigma_c,
        eps: eps_factor * cfg.sigma_c,
    };
    let train = problem.sample(cfg.n_train, derive_seed(seed, &[0]));
    let test = problem.sample(cfg.n_test, derive_seed(seed, &[1]));
    let params = ForestParams {
        n_trees: cfg.n_trees,
        ..ForestParams::default()
    };
    let forest = learn_forest(&train, &params, derive_seed(seed, &[2]))?;
    let gef = rf_to_gef(&forest, &train, &LeafModel::default(), CombineMode::AverageConditionals)?;
    let knn = KnnImputer::fit(&train, cfg.k())?;
    let (gef_hits, knn_hits) = (0..test.n_rows())
        .into_par_iter()
        .map(|r| {
            let q = PartialInstance::new(vec![Some(test.value(r, 0)), None]);
            let y = test.label(r);
            let g = predict_gef(&gef, &q).expect("mode").class == y;
            let k = forest.predict(&knn.impute(&q)) == y;
            (usize::from(g), usize::from(k))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = test.n_rows() as f64;
    Ok((gef_hits as f64 / n, knn_hits as f64 / n))
}

pub fn run_knn_counterexample(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let mut rows = Vec::new();
    for (ei, &eps_factor) in cfg.eps_factors.iter().enumerate() {
        let mut gef = 0.0;
        let mut knn = 0.0;
        for s in 0..cfg.seeds {
            let (g, k) = run_once(cfg, eps_factor, derive_seed(cfg.seed, &[ei as u64, s as u64]))?;
            gef += g;
            knn += k;
        }
        let problem = BandProblem {
            rho: cfg.rho,
            sigma_c: cfg.sigma_c,
            eps: eps_factor * cfg.sigma_c,
        };
        rows.push(CounterexampleRow {
            eps_factor,
            gef: gef / cfg.seeds as f64,
            knn: knn / cfg.seeds as f64,
            bayes: problem.bayes_accuracy_x1(),
        });
    }
    Ok(CounterexampleReport { k: cfg.k(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_band_is_easy_for_both() {
        let cfg = CounterexampleConfig {
            n_train: 800,
            n_test: 300,
            n_trees: 5,
            seeds: 1,
            eps_factors: vec![10.0],
            ..CounterexampleConfig::default()
        };
        let report = run_knn_counterexample(&cfg).unwrap();
        let r = &report.rows[0];
        assert!(r.gef > 0.99 && r.knn > 0.99, "{r:?}");
    }

    #[test]
    fn auto_k_grows_with_n() {
        let cfg = CounterexampleConfig::default();
        assert_eq!(cfg.k(), 1585);
    }
}
