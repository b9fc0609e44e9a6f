//! Convergence of uniform-leaf generative trees to a known density.
//!
//! For each training size a single tree is grown on all features with
//! minimum split size `⌈√n⌉`, converted with uniform leaves clipped to the
//! data bounding box, and compared with the true joint. The `ℓ1` distance
//! `Σ_y ∫ |p − p*|` is estimated by importance sampling from `½p + ½p*`;
//! classification error of `p(Y | x_o)` is measured for every observation
//! pattern against the Bayes risk.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::derive_seed;
use crate::bench::synthetic::GaussianClasses;
use crate::circuit::{EvalTrace, Node};
use crate::convert::{dt_to_gedt, GeDT};
use crate::data::PartialInstance;
use crate::error::Result;
use crate::forest::{learn_tree, MaxFeatures, TreeParams};
use crate::inference::predict_gedt;
use crate::leaves::{LeafDensity, LeafModel, UniformSide};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencyConfig {
    pub sizes: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
    /// Importance samples for the `ℓ1` estimate.
    pub mc_samples: usize,
    /// Fresh test points for the error rates.
    pub test_samples: usize,
    pub problem: GaussianClasses,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            sizes: vec![100, 1_000, 10_000, 100_000],
            seeds: 3,
            seed: 0,
            mc_samples: 100_000,
            test_samples: 20_000,
            problem: GaussianClasses::default(),
        }
    }
}

/// Observation patterns over two features: both, `x0` only, `x1` only, none.
pub const PATTERNS: [&[usize]; 4] = [&[0, 1], &[0], &[1], &[]];

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    /// Seed-averaged `ℓ1` estimate.
    pub l1: f64,
    /// Seed-averaged error rate per entry of [`PATTERNS`].
    pub errors: Vec<f64>,
    pub bayes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("n\tl1");
        for p in PATTERNS {
            let name = pattern_name(p);
            write!(s, "\terr_{name}\tbayes_{name}").expect("string");
        }
        s.push('\n');
        for r in &self.rows {
            write!(s, "{}\t{:.6}", r.n, r.l1).expect("string");
            for (e, b) in r.errors.iter().zip(&r.bayes) {
                write!(s, "\t{e:.6}\t{b:.6}").expect("string");
            }
            s.push('\n');
        }
        s
    }
}

fn pattern_name(p: &[usize]) -> String {
    if p.is_empty() {
        "none".into()
    } else {
        p.iter().map(|i| format!("x{i}")).collect::<Vec<_>>().join("")
    }
}

/// Draws `(x, y)` from a uniform-leaf generative tree.
pub fn sample_gedt(gedt: &GeDT, rng: &mut impl Rng) -> (Vec<f64>, usize) {
    let c = gedt.circuit();
    let mut id = c.root();
    loop {
        match &c.nodes()[id] {
            Node::Sum { children, weights } => {
                let u: f64 = rng.random();
                let w = weights.values();
                let mut acc = 0.0;
                let mut pick = children.len() - 1;
                for (i, wi) in w.iter().enumerate() {
                    acc += wi;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                id = children[pick];
            }
            Node::Leaf {
                density: LeafDensity::UniformCell { sides, class },
                ..
            } => {
                let x = sides
                    .iter()
                    .map(|s| match s {
                        UniformSide::Interval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                        UniformSide::Categories { allowed } => {
                            let idx: Vec<usize> = (0..allowed.len()).filter(|&c| allowed[c]).collect();
                            idx[rng.random_range(0..idx.len())] as f64
                        }
                    })
                    .collect();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut y = class.len() - 1;
                for (k, p) in class.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        y = k;
                        break;
                    }
                }
                return (x, y);
            }
            other => panic!("sampling needs a sum/uniform-leaf tree, found {other:?}"),
        }
    }
}

fn log_density(gedt: &GeDT, x: &[f64], y: usize) -> f64 {
    let mut ev: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
    ev.push(Some(y as f64));
    gedt.compiled().marginal_pruned(&ev, &mut EvalTrace::default())
}

/// `Σ_y ∫ |p − p*|` by importance sampling from the even mixture of both.
pub fn l1_estimate(gedt: &GeDT, truth: &GaussianClasses, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        let (x, y) = if rng.random_bool(0.5) {
            sample_gedt(gedt, &mut rng)
        } else {
            truth.sample_one(&mut rng)
        };
        let p = log_density(gedt, &x, y).exp();
        let q = truth.log_joint(&x, y).exp();
        let mix = 0.5 * p + 0.5 * q;
        if mix > 0.0 {
            total += (p - q).abs() / mix;
        }
    }
    total / samples as f64
}

/// Uniform-leaf tree on `n` samples of `problem`.
pub fn fit_uniform_tree(problem: &GaussianClasses, n: usize, seed: u64) -> Result<GeDT> {
    let train = problem.sample(n, derive_seed(seed, &[0]));
    let params = TreeParams {
        min_samples: (n as f64).sqrt().ceil() as usize,
        max_features: MaxFeatures::All,
        max_depth: None,
        surrogates: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let tree = learn_tree(&train, &params, &mut rng)?;
    dt_to_gedt(&tree, &train, &LeafModel::uniform_for(&train), 0)
}

pub fn pattern_errors(gedt: &GeDT, problem: &GaussianClasses, samples: usize, seed: u64) -> Vec<f64> {
    let test = problem.sample(samples, seed);
    PATTERNS
        .iter()
        .map(|p| {
            let wrong = (0..test.n_rows())
                .filter(|&r| {
                    let q = PartialInstance::new(
                        (0..test.n_features())
                            .map(|f| p.contains(&f).then(|| test.value(r, f)))
                            .collect(),
                    );
                    predict_gedt(gedt, &q).class != test.label(r)
                })
                .count();
            wrong as f64 / test.n_rows() as f64
        })
        .collect()
}

pub fn run_consistency_experiment(cfg: &ConsistencyConfig) -> Result<ConsistencyReport> {
    let bayes: Vec<f64> = PATTERNS.iter().map(|p| cfg.problem.bayes_risk(p)).collect();
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let per_seed = (0..cfg.seeds)
            .map(|s| {
                let seed = derive_seed(cfg.seed, &[n as u64, s as u64]);
                let g = fit_uniform_tree(&cfg.problem, n, seed)?;
                let l1 = l1_estimate(&g, &cfg.problem, cfg.mc_samples, derive_seed(seed, &[2]));
                let errs = pattern_errors(&g, &cfg.problem, cfg.test_samples, derive_seed(seed, &[3]));
                Ok((l1, errs))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = per_seed.len() as f64;
        let l1 = per_seed.iter().map(|p| p.0).sum::<f64>() / k;
        let errors = (0..PATTERNS.len())
            .map(|i| per_seed.iter().map(|p| p.1[i]).sum::<f64>() / k)
            .collect();
        rows.push(ConsistencyRow {
            n,
            l1,
            errors,
            bayes: bayes.clone(),
        });
    }
    Ok(ConsistencyReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_of_truth_against_itself_is_small_for_good_fit() {
        let p = GaussianClasses::default();
        let g = fit_uniform_tree(&p, 2_000, 1).unwrap();
        let l1 = l1_estimate(&g, &p, 5_000, 2);
        assert!(l1 > 0.0 && l1 < 2.0);
    }

    #[test]
    fn empty_pattern_predicts_prior_class() {
        let p = GaussianClasses::default();
        let g = fit_uniform_tree(&p, 500, 3).unwrap();
        let e = pattern_errors(&g, &p, 2_000, 4);
        // majority class is 0, so the empty pattern errs on exactly the class-1 rows
        let test = p.sample(2_000, 4);
        let ones = test.labels().iter().sum::<usize>() as f64 / 2_000.0;
        assert_eq!(e[3], ones);
    }
}
