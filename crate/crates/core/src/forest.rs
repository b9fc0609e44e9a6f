//! CART-style decision trees (Gini impurity, binary splits) and bagged random
//! forests.
//!
//! Continuous splits send `x <= t` left. Categorical splits send `x ∈ S` left,
//! where `S` is a nonempty proper subset of the categories seen at the node;
//! categories never seen at the node go right. Every leaf keeps its class
//! counts, the indices of the training rows it received and its cell, which is
//! everything the circuit conversion needs.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{bootstrap_indices, Dataset, FeatureKind, PartialInstance, Schema};
use crate::error::{Error, Result};
use crate::util::normalize_counts;

/// Exhaustive subset search is used up to this many categories at a node.
pub const MAX_EXHAUSTIVE_CATEGORIES: usize = 12;
/// Number of surrogate splits kept per decision node.
pub const MAX_SURROGATES: usize = 5;
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitRule {
    Threshold {
        feature: usize,
        #[serde(with = "crate::textfloat")]
        threshold: f64,
    },
    Subset {
        feature: usize,
        /// Sorted category indices that go left.
        left: Vec<usize>,
    },
}

impl SplitRule {
    pub fn feature(&self) -> usize {
        match self {
            SplitRule::Threshold { feature, .. } | SplitRule::Subset { feature, .. } => *feature,
        }
    }

    pub fn goes_left(&self, value: f64) -> bool {
        match self {
            SplitRule::Threshold { threshold, .. } => value <= *threshold,
            SplitRule::Subset { left, .. } => left.binary_search(&(value as usize)).is_ok(),
        }
    }
}

/// One coordinate of a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Side {
    /// Half-open interval `(lo, hi]`; infinite endpoints allowed.
    Interval {
        #[serde(with = "crate::textfloat")]
        lo: f64,
        #[serde(with = "crate::textfloat")]
        hi: f64,
    },
    /// Allowed categories as a membership mask over all `K_i` categories.
    Categories { allowed: Vec<bool> },
}

impl Side {
    pub fn contains(&self, value: f64) -> bool {
        match self {
            Side::Interval { lo, hi } => *lo < value && value <= *hi,
            Side::Categories { allowed } => allowed.get(value as usize).copied().unwrap_or(false),
        }
    }
}

/// Axis-aligned region of feature space owned by a tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub sides: Vec<Side>,
}

impl Cell {
    /// The whole feature space.
    pub fn root(kinds: &[FeatureKind]) -> Self {
        let sides = kinds
            .iter()
            .map(|k| match k {
                FeatureKind::Continuous => Side::Interval {
                    lo: f64::NEG_INFINITY,
                    hi: f64::INFINITY,
                },
                FeatureKind::Categorical(c) => Side::Categories {
                    allowed: vec![true; *c],
                },
            })
            .collect();
        Cell { sides }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.sides.iter().zip(x).all(|(s, &v)| s.contains(v))
    }

    /// Membership check over observed coordinates only.
    pub fn contains_partial(&self, q: &PartialInstance) -> bool {
        self.sides
            .iter()
            .zip(q.values())
            .all(|(s, v)| v.is_none_or(|v| s.contains(v)))
    }

    /// Children cells `(left, right)` produced by `rule`.
    pub fn split(&self, rule: &SplitRule) -> (Cell, Cell) {
        let f = rule.feature();
        let mut left = self.clone();
        let mut right = self.clone();
        match (rule, &self.sides[f]) {
            (SplitRule::Threshold { threshold, .. }, Side::Interval { lo, hi }) => {
                left.sides[f] = Side::Interval {
                    lo: *lo,
                    hi: hi.min(*threshold),
                };
                right.sides[f] = Side::Interval {
                    lo: lo.max(*threshold),
                    hi: *hi,
                };
            }
            (SplitRule::Subset { left: set, .. }, Side::Categories { allowed }) => {
                let l: Vec<bool> = (0..allowed.len())
                    .map(|c| allowed[c] && set.binary_search(&c).is_ok())
                    .collect();
                let r: Vec<bool> = (0..allowed.len()).map(|c| allowed[c] && !l[c]).collect();
                left.sides[f] = Side::Categories { allowed: l };
                right.sides[f] = Side::Categories { allowed: r };
            }
            _ => panic!("split rule kind does not match feature {f}"),
        }
        (left, right)
    }

    /// Largest continuous side length (infinite for unbounded cells).
    pub fn diameter(&self) -> f64 {
        self.sides
            .iter()
            .filter_map(|s| match s {
                Side::Interval { lo, hi } => Some(hi - lo),
                Side::Categories { .. } => None,
            })
            .fold(0.0, f64::max)
    }
}

/// A backup split for when the primary split variable is unobserved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub rule: SplitRule,
    /// When set, the surrogate's left side maps to the primary right side.
    pub inverted: bool,
    /// Fraction of the node's training rows sent the same way as the primary.
    #[serde(with = "crate::textfloat")]
    pub agreement: f64,
}

impl Surrogate {
    pub fn goes_left(&self, value: f64) -> bool {
        self.rule.goes_left(value) != self.inverted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        split: SplitRule,
        left: usize,
        right: usize,
        n_samples: usize,
        surrogates: Vec<Surrogate>,
        /// Branch with more training rows (left on ties).
        majority_left: bool,
    },
    Leaf {
        counts: Vec<usize>,
        rows: Vec<usize>,
        cell: Cell,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Internal { n_samples, .. } => *n_samples,
            TreeNode::Leaf { counts, .. } => counts.iter().sum(),
        }
    }
}

/// Binary decision tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    n_classes: usize,
}

impl DecisionTree {
    /// Assembles a tree from explicit nodes, checking structural invariants.
    pub fn from_nodes(nodes: Vec<TreeNode>, n_classes: usize) -> Result<Self> {
        let tree = DecisionTree { nodes, n_classes };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidData(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Internal {
                    left,
                    right,
                    n_samples,
                    ..
                } => {
                    for &c in [left, right] {
                        if c >= self.nodes.len() || c == 0 {
                            return bad(format!("node {i} has invalid child {c}"));
                        }
                        parents[c] += 1;
                    }
                    let sum = self.nodes[*left].n_samples() + self.nodes[*right].n_samples();
                    if sum != *n_samples {
                        return bad(format!("node {i}: children hold {sum} rows, parent {n_samples}"));
                    }
                }
                TreeNode::Leaf { counts, rows, .. } => {
                    if counts.len() != self.n_classes {
                        return bad(format!("leaf {i} has {} class counts", counts.len()));
                    }
                    if counts.iter().sum::<usize>() != rows.len() {
                        return bad(format!("leaf {i}: counts do not match its rows"));
                    }
                }
            }
        }
        if parents.iter().skip(1).any(|&p| p != 1) {
            return bad("every non-root node needs exactly one parent".into());
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, TreeNode::Leaf { .. }))
            .map(|(i, _)| i)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, id: usize) -> usize {
            match &t.nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Class counts at the root, i.e. of the training data.
    pub fn root_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for id in self.leaf_ids() {
            if let TreeNode::Leaf { counts: c, .. } = &self.nodes[id] {
                for (a, b) in counts.iter_mut().zip(c) {
                    *a += b;
                }
            }
        }
        counts
    }

    /// Id of the leaf whose cell contains `x`.
    pub fn leaf_for(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { .. } => return id,
                TreeNode::Internal {
                    split, left, right, ..
                } => {
                    id = if split.goes_left(x[split.feature()]) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn leaf_counts(&self, id: usize) -> &[usize] {
        match &self.nodes[id] {
            TreeNode::Leaf { counts, .. } => counts,
            TreeNode::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    /// Class proportions of the leaf containing `x`.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        normalize_counts(self.leaf_counts(self.leaf_for(x)))
    }
}

/// How many features each split considers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(m))`
    Sqrt,
    All,
    Count(usize),
    Fraction(#[serde(with = "crate::textfloat")] f64),
}

impl MaxFeatures {
    pub fn resolve(self, m: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (m as f64).sqrt().ceil() as usize,
            MaxFeatures::All => m,
            MaxFeatures::Count(c) => c,
            MaxFeatures::Fraction(p) => (p * m as f64).ceil() as usize,
        };
        k.clamp(1, m.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with fewer than this many rows become leaves.
    pub min_samples: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    /// Record up to [`MAX_SURROGATES`] surrogate splits per node.
    pub surrogates: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples: 1,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            surrogates: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Train each tree on a bootstrap resample (otherwise on the data as is).
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Impurity decrease of splitting `parent` into `left` and `parent - left`.
pub fn gini_gain(parent: &[usize], left: &[usize]) -> f64 {
    let n: usize = parent.iter().sum();
    let nl: usize = left.iter().sum();
    let right: Vec<usize> = parent.iter().zip(left).map(|(p, l)| p - l).collect();
    let nr = n - nl;
    let weighted = (nl as f64 * gini(left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
    gini(parent, n) - weighted
}

struct Candidate {
    rule: SplitRule,
    gain: f64,
}

struct Learner<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    k: usize,
}

impl Learner<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &r in rows {
            c[self.data.label(r)] += 1;
        }
        c
    }

    fn best_threshold(&self, f: usize, rows: &[usize], parent: &[usize]) -> Option<Candidate> {
        let col = self.data.column(f);
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut left = vec![0; self.k];
        let mut best: Option<Candidate> = None;
        for i in 0..sorted.len() - 1 {
            left[self.data.label(sorted[i])] += 1;
            let (a, b) = (col[sorted[i]], col[sorted[i + 1]]);
            if a == b {
                continue;
            }
            let gain = gini_gain(parent, &left);
            if gain > MIN_GAIN && best.as_ref().is_none_or(|c| gain > c.gain) {
                let mut t = a + (b - a) / 2.0;
                if t >= b || t < a {
                    t = a;
                }
                best = Some(Candidate {
                    rule: SplitRule::Threshold {
                        feature: f,
                        threshold: t,
                    },
                    gain,
                });
            }
        }
        best
    }

    fn best_subset(
        &self,
        f: usize,
        n_cats: usize,
        rows: &[usize],
        parent: &[usize],
    ) -> Option<Candidate> {
        let col = self.data.column(f);
        let mut per_cat = vec![vec![0usize; self.k]; n_cats];
        for &r in rows {
            per_cat[col[r] as usize][self.data.label(r)] += 1;
        }
        let present: Vec<usize> = (0..n_cats)
            .filter(|&c| per_cat[c].iter().any(|&x| x > 0))
            .collect();
        let c = present.len();
        if c < 2 {
            return None;
        }
        let mut best: Option<Candidate> = None;
        let consider = |set: Vec<usize>, best: &mut Option<Candidate>| {
            let mut left = vec![0; self.k];
            for &cat in &set {
                for (l, x) in left.iter_mut().zip(&per_cat[cat]) {
                    *l += x;
                }
            }
            let gain = gini_gain(parent, &left);
            if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                *best = Some(Candidate {
                    rule: SplitRule::Subset { feature: f, left: set },
                    gain,
                });
            }
        };
        if c <= MAX_EXHAUSTIVE_CATEGORIES {
            // the last present category always goes right
            for mask in 1u32..(1 << (c - 1)) {
                let set = (0..c - 1)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| present[j])
                    .collect();
                consider(set, &mut best);
            }
        } else {
            let rate = |cat: usize| {
                let n: usize = per_cat[cat].iter().sum();
                per_cat[cat].get(1).copied().unwrap_or(0) as f64 / n as f64
            };
            let mut ordered = present.clone();
            ordered.sort_by(|&a, &b| rate(a).total_cmp(&rate(b)));
            for cat in ordered {
                consider(vec![cat], &mut best);
            }
        }
        best
    }

    fn best_split_on(&self, f: usize, rows: &[usize], parent: &[usize]) -> Option<Candidate> {
        match self.data.schema().feature_kind(f) {
            FeatureKind::Continuous => self.best_threshold(f, rows, parent),
            FeatureKind::Categorical(k) => self.best_subset(f, k, rows, parent),
        }
    }

    fn find_split(&self, rows: &[usize], parent: &[usize], rng: &mut impl RngCore) -> Option<Candidate> {
        let m = self.data.n_features();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let n_try = self.params.max_features.resolve(m);
        let mut best: Option<Candidate> = None;
        for (visited, &f) in order.iter().enumerate() {
            // keep drawing features past the budget only while nothing splits
            if visited >= n_try && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(f, rows, parent) {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn surrogates(&self, primary: &SplitRule, rows: &[usize]) -> Vec<Surrogate> {
        let pf = primary.feature();
        let dir: Vec<bool> = rows
            .iter()
            .map(|&r| primary.goes_left(self.data.value(r, pf)))
            .collect();
        let n = rows.len();
        let n_left = dir.iter().filter(|&&d| d).count();
        let baseline = n_left.max(n - n_left);
        let mut found: Vec<(usize, Surrogate)> = Vec::new();
        for g in (0..self.data.n_features()).filter(|&g| g != pf) {
            let col = self.data.column(g);
            let best = match self.data.schema().feature_kind(g) {
                FeatureKind::Continuous => {
                    let mut idx: Vec<usize> = (0..n).collect();
                    idx.sort_by(|&a, &b| col[rows[a]].total_cmp(&col[rows[b]]));
                    // agreement of "x <= t -> left": primary-left rows at or below t
                    // plus primary-right rows above t
                    let mut agree = n - n_left;
                    let mut best: Option<(usize, bool, f64)> = None;
                    for i in 0..n - 1 {
                        if dir[idx[i]] {
                            agree += 1;
                        } else {
                            agree -= 1;
                        }
                        let (a, b) = (col[rows[idx[i]]], col[rows[idx[i + 1]]]);
                        if a == b {
                            continue;
                        }
                        let mut t = a + (b - a) / 2.0;
                        if t >= b || t < a {
                            t = a;
                        }
                        for (score, inverted) in [(agree, false), (n - agree, true)] {
                            if best.is_none_or(|(s, _, _)| score > s) {
                                best = Some((score, inverted, t));
                            }
                        }
                    }
                    best.map(|(score, inverted, t)| {
                        (
                            score,
                            SplitRule::Threshold {
                                feature: g,
                                threshold: t,
                            },
                            inverted,
                        )
                    })
                }
                FeatureKind::Categorical(k) => {
                    let mut lr = vec![(0usize, 0usize); k];
                    for (i, &r) in rows.iter().enumerate() {
                        let e = &mut lr[col[r] as usize];
                        if dir[i] {
                            e.0 += 1;
                        } else {
                            e.1 += 1;
                        }
                    }
                    let majority_left = 2 * n_left >= n;
                    let present: Vec<usize> = (0..k).filter(|&c| lr[c].0 + lr[c].1 > 0).collect();
                    let left: Vec<usize> = present
                        .iter()
                        .copied()
                        .filter(|&c| lr[c].0 > lr[c].1 || (lr[c].0 == lr[c].1 && majority_left))
                        .collect();
                    if left.is_empty() || left.len() == present.len() {
                        None
                    } else {
                        let score = present.iter().map(|&c| lr[c].0.max(lr[c].1)).sum();
                        Some((score, SplitRule::Subset { feature: g, left }, false))
                    }
                }
            };
            if let Some((score, rule, inverted)) = best {
                if score > baseline {
                    found.push((
                        score,
                        Surrogate {
                            rule,
                            inverted,
                            agreement: score as f64 / n as f64,
                        },
                    ));
                }
            }
        }
        // stable sort keeps feature order among equal agreement
        found.sort_by(|a, b| b.0.cmp(&a.0));
        found
            .into_iter()
            .take(MAX_SURROGATES)
            .map(|(_, s)| s)
            .collect()
    }
}

/// Grows one tree on complete data.
pub fn learn_tree(d: &Dataset, params: &TreeParams, rng: &mut impl RngCore) -> Result<DecisionTree> {
    if d.has_missing() {
        return Err(Error::MaskedTrainingData);
    }
    if params.min_samples == 0 {
        return Err(Error::InvalidParameter("min_samples must be >= 1".into()));
    }
    let learner = Learner {
        data: d,
        params,
        k: d.n_classes(),
    };
    let root_cell = Cell::root(d.schema().feature_kinds());
    let mut nodes: Vec<Option<TreeNode>> = vec![None];
    // (node id, rows, cell, depth)
    let mut stack = vec![(0usize, (0..d.n_rows()).collect::<Vec<_>>(), root_cell, 0usize)];
    while let Some((id, rows, cell, depth)) = stack.pop() {
        let counts = learner.counts(&rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let capped = params.max_depth.is_some_and(|md| depth >= md);
        let split = if pure || rows.len() < params.min_samples || capped || rows.len() < 2 {
            None
        } else {
            learner.find_split(&rows, &counts, rng)
        };
        let Some(cand) = split else {
            nodes[id] = Some(TreeNode::Leaf { counts, rows, cell });
            continue;
        };
        let f = cand.rule.feature();
        let (lrows, rrows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| cand.rule.goes_left(d.value(r, f)));
        let surrogates = if params.surrogates {
            learner.surrogates(&cand.rule, &rows)
        } else {
            Vec::new()
        };
        let (lcell, rcell) = cell.split(&cand.rule);
        let (lid, rid) = (nodes.len(), nodes.len() + 1);
        nodes.push(None);
        nodes.push(None);
        nodes[id] = Some(TreeNode::Internal {
            split: cand.rule,
            left: lid,
            right: rid,
            n_samples: rows.len(),
            surrogates,
            majority_left: lrows.len() >= rrows.len(),
        });
        stack.push((rid, rrows, rcell, depth + 1));
        stack.push((lid, lrows, lcell, depth + 1));
    }
    let nodes = nodes
        .into_iter()
        .map(|n| n.expect("every allocated node is filled"))
        .collect();
    Ok(DecisionTree {
        nodes,
        n_classes: d.n_classes(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    /// Seed of each tree's private RNG (bootstrap draw, then feature sampling).
    tree_seeds: Vec<u64>,
    params: ForestParams,
    n_train: usize,
    schema: Arc<Schema>,
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn tree_seed(&self, t: usize) -> u64 {
        self.tree_seeds[t]
    }

    /// Row indices (into the original training set) tree `t` was grown on.
    pub fn training_rows(&self, t: usize) -> Vec<usize> {
        if self.params.bootstrap {
            let mut rng = ChaCha8Rng::seed_from_u64(self.tree_seeds[t]);
            bootstrap_indices(self.n_train, &mut rng)
        } else {
            (0..self.n_train).collect()
        }
    }

    /// Reconstructs tree `t`'s training sample from the original data.
    pub fn training_sample(&self, t: usize, train: &Dataset) -> Result<Dataset> {
        if train.n_rows() != self.n_train {
            return Err(Error::InvalidData(format!(
                "forest was trained on {} rows, got {}",
                self.n_train,
                train.n_rows()
            )));
        }
        Ok(train.subset(&self.training_rows(t)))
    }

    /// Soft vote: mean of per-tree class proportions.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let k = self.schema.n_classes();
        let mut acc = vec![0.0; k];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.predict_proba(x)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter().map(|a| a / n).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::util::argmax(&self.predict_proba(x))
    }

    /// Training class counts pooled over every tree's sample.
    pub fn class_prior(&self) -> Vec<f64> {
        let k = self.schema.n_classes();
        let mut counts = vec![0usize; k];
        for t in &self.trees {
            for (a, c) in counts.iter_mut().zip(t.root_counts()) {
                *a += c;
            }
        }
        normalize_counts(&counts)
    }
}

/// Wraps already-built trees, e.g. hand-constructed fixtures.
pub fn forest_from_trees(
    trees: Vec<DecisionTree>,
    schema: Arc<Schema>,
    n_train: usize,
) -> Result<RandomForest> {
    if trees.is_empty() {
        return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
    }
    let n = trees.len();
    Ok(RandomForest {
        trees,
        tree_seeds: vec![0; n],
        params: ForestParams {
            n_trees: n,
            bootstrap: false,
            ..ForestParams::default()
        },
        n_train,
        schema,
    })
}

/// Grows `params.n_trees` trees, each on its own bootstrap sample. Per-tree
/// seeds come from a ChaCha stream keyed by `seed`, so the result does not
/// depend on thread scheduling.
pub fn learn_forest(d: &Dataset, params: &ForestParams, seed: u64) -> Result<RandomForest> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
    }
    if d.has_missing() {
        return Err(Error::MaskedTrainingData);
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.next_u64()).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            if params.bootstrap {
                let idx = bootstrap_indices(d.n_rows(), &mut rng);
                learn_tree(&d.subset(&idx), &params.tree, &mut rng)
            } else {
                learn_tree(d, &params.tree, &mut rng)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        tree_seeds,
        params: params.clone(),
        n_train: d.n_rows(),
        schema: Arc::clone(d.schema()),
    })
}
