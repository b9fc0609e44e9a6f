//! Reference methods for missing features: Friedman's both-branches descent,
//! surrogate splits, and mean or nearest-neighbour imputation in front of a
//! plain forest.

use serde::{Deserialize, Serialize};

use crate::circuit::EvalTrace;
use crate::convert::GeF;
use crate::data::{Dataset, FeatureKind, PartialInstance};
use crate::error::{Error, Result};
use crate::forest::{DecisionTree, RandomForest, TreeNode};
use crate::inference::{class_log_joint, ClassPosterior};
use crate::util::{argmax, normalize_counts};

fn friedman_tree_counts(tree: &DecisionTree, q: &PartialInstance, acc: &mut [usize]) {
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        match tree.node(id) {
            TreeNode::Leaf { counts, .. } => {
                for (a, c) in acc.iter_mut().zip(counts) {
                    *a += c;
                }
            }
            TreeNode::Internal { split, left, right, .. } => match q.get(split.feature()) {
                None => {
                    stack.push(*right);
                    stack.push(*left);
                }
                Some(v) if split.goes_left(v) => stack.push(*left),
                Some(_) => stack.push(*right),
            },
        }
    }
}

/// Class counts summed over every leaf reachable when both branches are
/// followed at unobserved splits, over every tree.
pub fn friedman_counts(forest: &RandomForest, q: &PartialInstance) -> Vec<usize> {
    let mut acc = vec![0usize; forest.schema().n_classes()];
    for t in forest.trees() {
        friedman_tree_counts(t, q, &mut acc);
    }
    acc
}

/// Argmax of [`friedman_counts`], lowest class on ties.
pub fn friedman_predict(forest: &RandomForest, q: &PartialInstance) -> usize {
    let counts = friedman_counts(forest, q);
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    argmax(&as_f)
}

/// Count-sum scores `Σ_j n_j p_j(x_o, y)` of a forest converted with
/// constant leaves, where `n_j` is tree `j`'s sample size. In exact
/// arithmetic these are integers, so they are rounded.
pub fn constant_gef_count_sum(gef: &GeF, q: &PartialInstance) -> Vec<f64> {
    let mut acc = vec![0.0; gef.n_classes()];
    for g in gef.gedts() {
        let n = g.routed()[g.circuit().root()] as f64;
        for (a, l) in acc.iter_mut().zip(class_log_joint(g, q, &mut EvalTrace::default())) {
            *a += n * l.exp();
        }
    }
    acc.iter().map(|a| a.round()).collect()
}

fn surrogate_leaf(tree: &DecisionTree, q: &PartialInstance) -> usize {
    let mut id = 0;
    loop {
        match tree.node(id) {
            TreeNode::Leaf { .. } => return id,
            TreeNode::Internal {
                split,
                left,
                right,
                surrogates,
                majority_left,
                ..
            } => {
                let go_left = match q.get(split.feature()) {
                    Some(v) => split.goes_left(v),
                    None => surrogates
                        .iter()
                        .find_map(|s| q.get(s.rule.feature()).map(|v| s.goes_left(v)))
                        .unwrap_or(*majority_left),
                };
                id = if go_left { *left } else { *right };
            }
        }
    }
}

/// Soft vote where each tree routes unobserved splits through its surrogate
/// list, then the majority branch.
pub fn surrogate_predict(forest: &RandomForest, q: &PartialInstance) -> ClassPosterior {
    let k = forest.schema().n_classes();
    let mut acc = vec![0.0; k];
    for t in forest.trees() {
        for (a, p) in acc.iter_mut().zip(normalize_counts(t.leaf_counts(surrogate_leaf(t, q)))) {
            *a += p;
        }
    }
    let n = forest.n_trees() as f64;
    ClassPosterior::new(acc.iter().map(|a| a / n).collect())
}

/// Most frequent category, lowest index on ties.
fn mode_of(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut counts = vec![0usize; k];
    for v in values {
        counts[v as usize] += 1;
    }
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    argmax(&as_f) as f64
}

/// Fills missing cells with the training mean (continuous) or mode
/// (categorical).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanImputer {
    #[serde(with = "crate::textfloat::vec")]
    fill: Vec<f64>,
}

impl MeanImputer {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.has_missing() {
            return Err(Error::MaskedTrainingData);
        }
        let fill = (0..train.n_features())
            .map(|f| {
                let col = train.column(f);
                match train.schema().feature_kind(f) {
                    FeatureKind::Continuous => col.iter().sum::<f64>() / col.len() as f64,
                    FeatureKind::Categorical(k) => mode_of(col.iter().copied(), k),
                }
            })
            .collect();
        Ok(MeanImputer { fill })
    }

    pub fn fill_values(&self) -> &[f64] {
        &self.fill
    }

    pub fn impute(&self, q: &PartialInstance) -> Vec<f64> {
        q.values()
            .iter()
            .zip(&self.fill)
            .map(|(v, f)| v.unwrap_or(*f))
            .collect()
    }
}

/// Nearest-neighbour imputation with the mixed distance
/// `γ Σ_cat w_i 1{a_i ≠ b_i} + Σ_num w_i |a_i − b_i|` over the query's
/// observed features.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnImputer {
    train: Dataset,
    k: usize,
    gamma: f64,
    weights: Vec<f64>,
}

pub const DEFAULT_KNN_K: usize = 7;

impl KnnImputer {
    /// `k` larger than the training set is clipped to its size.
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        Self::with_weights(train, k, 1.0, vec![1.0; train.n_features()])
    }

    pub fn with_weights(train: &Dataset, k: usize, gamma: f64, weights: Vec<f64>) -> Result<Self> {
        if train.has_missing() {
            return Err(Error::MaskedTrainingData);
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if weights.len() != train.n_features() {
            return Err(Error::InvalidParameter("one weight per feature".into()));
        }
        Ok(KnnImputer {
            k: k.min(train.n_rows()),
            train: train.clone(),
            gamma,
            weights,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Mixed distance between two full rows.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let ev: Vec<Option<f64>> = a.iter().copied().map(Some).collect();
        self.partial_distance(&ev, b)
    }

    fn partial_distance(&self, q: &[Option<f64>], b: &[f64]) -> f64 {
        let kinds = self.train.schema().feature_kinds();
        let mut d = 0.0;
        for (i, (v, &x)) in q.iter().zip(b).enumerate() {
            if let Some(v) = v {
                d += match kinds[i] {
                    FeatureKind::Categorical(_) => self.gamma * self.weights[i] * f64::from(u8::from(*v != x)),
                    FeatureKind::Continuous => self.weights[i] * (v - x).abs(),
                };
            }
        }
        d
    }

    /// Indices of the `k` nearest training rows; distance ties keep training
    /// order.
    pub fn neighbours(&self, q: &PartialInstance) -> Vec<usize> {
        let n = self.train.n_rows();
        let m = self.train.n_features();
        let mut row = vec![0.0; m];
        let mut dist: Vec<(f64, usize)> = (0..n)
            .map(|r| {
                for (f, x) in row.iter_mut().enumerate() {
                    *x = self.train.value(r, f);
                }
                (self.partial_distance(q.values(), &row), r)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < n {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, r)| r).collect()
    }

    pub fn impute(&self, q: &PartialInstance) -> Vec<f64> {
        if q.is_complete() {
            return q.to_complete().expect("complete");
        }
        let nb = self.neighbours(q);
        q.values()
            .iter()
            .enumerate()
            .map(|(f, v)| match v {
                Some(v) => *v,
                None => {
                    let vals = nb.iter().map(|&r| self.train.value(r, f));
                    match self.train.schema().feature_kind(f) {
                        FeatureKind::Continuous => vals.sum::<f64>() / nb.len() as f64,
                        FeatureKind::Categorical(k) => mode_of(vals, k),
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::fixtures::f1_forest;
    use std::sync::Arc;

    #[test]
    fn friedman_on_f1() {
        let f = f1_forest();
        let q = PartialInstance::new(vec![Some(0.0), None]);
        assert_eq!(friedman_counts(&f, &q), vec![20, 40]);
        assert_eq!(friedman_predict(&f, &q), 1);
        let q = PartialInstance::new(vec![None, Some(0.3)]);
        assert_eq!(friedman_counts(&f, &q), vec![10, 70]);
        assert_eq!(friedman_predict(&f, &q), 1);
        let q = PartialInstance::complete(&[0.0, 0.9]);
        assert_eq!(friedman_counts(&f, &q), vec![20, 0]);
    }

    fn mixed_train() -> Dataset {
        let schema = Arc::new(Schema::from_kinds(&[FeatureKind::Categorical(2), FeatureKind::Continuous], 2).unwrap());
        Dataset::from_rows(
            schema,
            &[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 3.0], vec![0.0, 2.0]],
            vec![0, 1, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn mean_imputer_tie_goes_low() {
        let imp = MeanImputer::fit(&mixed_train()).unwrap();
        assert_eq!(imp.fill_values(), &[0.0, 1.5]);
        let q = PartialInstance::new(vec![None, Some(7.0)]);
        assert_eq!(imp.impute(&q), vec![0.0, 7.0]);
        let full = PartialInstance::complete(&[1.0, 2.0]);
        assert_eq!(imp.impute(&full), vec![1.0, 2.0]);
    }

    #[test]
    fn knn_distance_formula() {
        let imp = KnnImputer::fit(&mixed_train(), 7).unwrap();
        assert_eq!(imp.distance(&[0.0, 1.0], &[1.0, 0.0]), 2.0);
        assert_eq!(imp.k(), 4);
    }

    #[test]
    fn knn_no_observed_uses_first_rows() {
        let imp = KnnImputer::fit(&mixed_train(), 3).unwrap();
        let q = PartialInstance::all_missing(2);
        assert_eq!(imp.neighbours(&q), vec![0, 1, 2]);
        assert_eq!(imp.impute(&q), vec![1.0, 4.0 / 3.0]);
    }

    #[test]
    fn knn_duplicate_is_nearest() {
        let imp = KnnImputer::fit(&mixed_train(), 1).unwrap();
        let q = PartialInstance::new(vec![Some(1.0), None]);
        // rows 1 and 2 both match; training order picks row 1
        assert_eq!(imp.impute(&q), vec![1.0, 0.0]);
        let q = PartialInstance::new(vec![None, Some(2.9)]);
        assert_eq!(imp.impute(&q), vec![1.0, 2.9]);
    }
}
