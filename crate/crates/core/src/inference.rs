//! Classification with arbitrary missing features, and outlier scores.
//!
//! The posterior of a generative tree is `p(y | x_o) ∝ p(x_o, y)`, with every
//! unobserved feature integrated out exactly by the circuit.

use rayon::prelude::*;

use crate::circuit::EvalTrace;
use crate::convert::{CombineMode, GeDT, GeF};
use crate::data::{Dataset, PartialInstance};
use crate::error::{Error, Result};
use crate::util::{argmax, log_sum_exp, softmax_log};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassPosterior {
    pub probs: Vec<f64>,
    /// Most probable class; ties go to the lowest index.
    pub class: usize,
}

impl ClassPosterior {
    pub fn new(probs: Vec<f64>) -> Self {
        let class = argmax(&probs);
        ClassPosterior { probs, class }
    }
}

/// `log p(x_o, y)` for every class under one tree.
pub fn class_log_joint(gedt: &GeDT, q: &PartialInstance, trace: &mut EvalTrace) -> Vec<f64> {
    gedt.compiled().class_log_joint(q.values(), gedt.n_classes(), trace)
}

pub fn predict_gedt(gedt: &GeDT, q: &PartialInstance) -> ClassPosterior {
    predict_gedt_traced(gedt, q, &mut EvalTrace::default())
}

/// Like [`predict_gedt`], also counting the nodes and leaves visited.
pub fn predict_gedt_traced(gedt: &GeDT, q: &PartialInstance, trace: &mut EvalTrace) -> ClassPosterior {
    let joint = class_log_joint(gedt, q, trace);
    ClassPosterior::new(softmax_log(&joint).unwrap_or_else(|| gedt.root_prior().to_vec()))
}

fn expect_mode(gef: &GeF, mode: CombineMode) -> Result<()> {
    if gef.mode() == mode {
        Ok(())
    } else {
        Err(Error::ModeMismatch {
            expected: mode.name(),
            found: gef.mode().name(),
        })
    }
}

/// Mean of the per-tree posteriors.
pub fn predict_gef(gef: &GeF, q: &PartialInstance) -> Result<ClassPosterior> {
    expect_mode(gef, CombineMode::AverageConditionals)?;
    let mut acc = vec![0.0; gef.n_classes()];
    for g in gef.gedts() {
        for (a, p) in acc.iter_mut().zip(predict_gedt(g, q).probs) {
            *a += p;
        }
    }
    let n = gef.n_trees() as f64;
    Ok(ClassPosterior::new(acc.iter().map(|a| a / n).collect()))
}

/// Per-class `log(n_t⁻¹ Σ_j p_j(x_o, y))`.
pub fn mixture_class_log_joint(gef: &GeF, q: &PartialInstance) -> Vec<f64> {
    let k = gef.n_classes();
    let mut per_class: Vec<Vec<f64>> = vec![Vec::with_capacity(gef.n_trees()); k];
    for g in gef.gedts() {
        for (c, v) in per_class.iter_mut().zip(class_log_joint(g, q, &mut EvalTrace::default())) {
            c.push(v);
        }
    }
    let ln_n = (gef.n_trees() as f64).ln();
    per_class.iter().map(|c| log_sum_exp(c) - ln_n).collect()
}

/// Posterior of the uniform mixture of the trees' joints. Trees giving the
/// query zero density contribute nothing.
pub fn predict_gefplus(gef: &GeF, q: &PartialInstance) -> Result<ClassPosterior> {
    expect_mode(gef, CombineMode::UniformMixture)?;
    let joint = mixture_class_log_joint(gef, q);
    Ok(ClassPosterior::new(softmax_log(&joint).unwrap_or_else(|| gef.class_prior())))
}

/// Prediction according to the forest's combination mode.
pub fn predict(gef: &GeF, q: &PartialInstance) -> ClassPosterior {
    match gef.mode() {
        CombineMode::AverageConditionals => predict_gef(gef, q),
        CombineMode::UniformMixture => predict_gefplus(gef, q),
    }
    .expect("mode matches by construction")
}

/// Posteriors for every row of `d` (masked cells treated as missing).
pub fn predict_dataset(gef: &GeF, d: &Dataset) -> Vec<ClassPosterior> {
    (0..d.n_rows())
        .into_par_iter()
        .map(|r| predict(gef, &d.instance(r)))
        .collect()
}

/// `log p(x_o)` under the uniform mixture of the trees, class marginalized.
pub fn outlier_score(gef: &GeF, q: &PartialInstance) -> Result<f64> {
    expect_mode(gef, CombineMode::UniformMixture)?;
    let mut ev = q.values().to_vec();
    ev.push(None);
    let per_tree: Vec<f64> = gef
        .gedts()
        .iter()
        .map(|g| g.compiled().marginal_pruned(&ev, &mut EvalTrace::default()))
        .collect();
    Ok(log_sum_exp(&per_tree) - (gef.n_trees() as f64).ln())
}
