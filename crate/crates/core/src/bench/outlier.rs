//! Outlier detection with the mixture log-density `log p(x)`.
//!
//! A forest is trained on part of the data and converted to the
//! uniform-mixture form. Held-out rows form the in-distribution group; the
//! same rows with every continuous feature shifted by a number of training
//! standard deviations form the outlier group.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::derive_seed;
use crate::bench::metrics::auc_roc;
use crate::convert::{rf_to_gef, CombineMode, GeF};
use crate::data::{standardize, Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::forest::{learn_forest, ForestParams};
use crate::inference::outlier_score;
use crate::leaves::LeafModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutlierConfig {
    pub train_fraction: f64,
    /// Shift of every continuous feature, in training standard deviations.
    pub shift: f64,
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            train_fraction: 0.7,
            shift: 3.0,
            n_trees: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlierReport {
    pub auc: f64,
    pub in_scores: Vec<f64>,
    pub out_scores: Vec<f64>,
}

/// Adds `shift` to every continuous feature of `d`.
pub fn shift_continuous(d: &Dataset, shift: f64) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..d.n_rows())
        .map(|r| {
            d.row(r)
                .into_iter()
                .enumerate()
                .map(|(f, v)| match d.schema().feature_kind(f) {
                    FeatureKind::Continuous => v + shift,
                    FeatureKind::Categorical(_) => v,
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(d.schema().clone(), &rows, d.labels().to_vec()).expect("shifted values stay valid")
}

pub fn scores(gef: &GeF, d: &Dataset) -> Vec<f64> {
    (0..d.n_rows())
        .into_par_iter()
        .map(|r| outlier_score(gef, &d.instance(r)).expect("uniform mixture"))
        .collect()
}

/// Scores held-out rows and shifted copies of them under a class-factorized
/// uniform-mixture forest.
pub fn run_outlier_experiment(data: &Dataset, cfg: &OutlierConfig) -> Result<OutlierReport> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidParameter("train_fraction must lie in (0, 1)".into()));
    }
    let mut idx: Vec<usize> = (0..data.n_rows()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0])));
    let cut = ((data.n_rows() as f64) * cfg.train_fraction).round() as usize;
    let (tr, te) = idx.split_at(cut.clamp(1, data.n_rows() - 1));
    let (train, rest, _) = standardize(&data.subset(tr), &[data.subset(te)]);
    let test = &rest[0];
    let params = ForestParams {
        n_trees: cfg.n_trees,
        ..ForestParams::default()
    };
    let forest = learn_forest(&train, &params, derive_seed(cfg.seed, &[1]))?;
    let gef = rf_to_gef(&forest, &train, &LeafModel::default(), CombineMode::UniformMixture)?;
    let in_scores = scores(&gef, test);
    let out_scores = scores(&gef, &shift_continuous(test, cfg.shift));
    let auc = auc_roc(&in_scores, &out_scores)?;
    Ok(OutlierReport {
        auc,
        in_scores,
        out_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synthetic::GaussianClasses;

    #[test]
    fn shifted_gaussians_score_lower() {
        let d = GaussianClasses::default().sample(400, 5);
        let cfg = OutlierConfig {
            n_trees: 10,
            ..OutlierConfig::default()
        };
        let r = run_outlier_experiment(&d, &cfg).unwrap();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean(&r.in_scores) > mean(&r.out_scores));
        assert!(r.auc > 0.8, "{}", r.auc);
    }
}
