//! Probabilistic circuits over features `0..m` and the class variable `m`.
//!
//! Nodes live in a flat arena in topological order (children before parents),
//! so a single forward pass evaluates the whole circuit. Everything is in the
//! log domain; `f64::NEG_INFINITY` is the zero-density value and is absorbed
//! by [`log_sum_exp`].
//!
//! Evidence is a slice of length `m + 1`; `None` marks a marginalized
//! variable. An indicator over a marginalized variable evaluates to `log 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::Cell;
use crate::leaves::LeafDensity;
use crate::util::log_sum_exp;

pub type NodeId = usize;

/// Test applied by an indicator node to its variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "arg", rename_all = "snake_case")]
pub enum Predicate {
    Eq(usize),
    /// Sorted set of allowed categories.
    In(Vec<usize>),
    Le(#[serde(with = "crate::textfloat")] f64),
    Gt(#[serde(with = "crate::textfloat")] f64),
}

impl Predicate {
    pub fn holds(&self, v: f64) -> bool {
        match self {
            Predicate::Eq(c) => v as usize == *c && v >= 0.0,
            Predicate::In(set) => v >= 0.0 && set.binary_search(&(v as usize)).is_ok(),
            Predicate::Le(t) => v <= *t,
            Predicate::Gt(t) => v > *t,
        }
    }
}

/// Mixture weights of a sum node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumWeights {
    /// Exact rational weights `counts[i] / sum(counts)`.
    Counts(Vec<u64>),
    Real(#[serde(with = "crate::textfloat::vec")] Vec<f64>),
}

impl SumWeights {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SumWeights::Counts(c) => {
                let total: u64 = c.iter().sum();
                c.iter().map(|&x| x as f64 / total as f64).collect()
            }
            SumWeights::Real(w) => w.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SumWeights::Counts(c) => c.len(),
            SumWeights::Real(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Sum {
        children: Vec<NodeId>,
        weights: SumWeights,
    },
    Product {
        children: Vec<NodeId>,
    },
    Indicator {
        var: usize,
        predicate: Predicate,
    },
    /// Leaf density, optionally restricted to a cell (checked on the observed
    /// features only).
    Leaf {
        density: LeafDensity,
        support: Option<Cell>,
    },
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    n_features: usize,
    root: NodeId,
    nodes: Vec<Node>,
}

/// Counters filled by the short-circuiting evaluator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalTrace {
    /// Leaf nodes whose density was reached.
    pub leaves: usize,
    /// Nodes visited in total.
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitDoc", into = "CircuitDoc")]
pub struct Circuit {
    n_features: usize,
    root: NodeId,
    nodes: Vec<Node>,
    /// Cached `ln w` per sum node (empty for other nodes).
    log_weights: Vec<Vec<f64>>,
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = Error;

    fn try_from(doc: CircuitDoc) -> Result<Self> {
        Circuit::new(doc.nodes, doc.root, doc.n_features)
    }
}

impl From<Circuit> for CircuitDoc {
    fn from(c: Circuit) -> Self {
        CircuitDoc {
            n_features: c.n_features,
            root: c.root,
            nodes: c.nodes,
        }
    }
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl Circuit {
    /// Validates topological order, sum weights and variable ranges.
    pub fn new(nodes: Vec<Node>, root: NodeId, n_features: usize) -> Result<Self> {
        let corrupt = |m: String| Err(Error::InvalidData(m));
        if root >= nodes.len() {
            return corrupt(format!("root {root} out of range"));
        }
        let mut log_weights = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            let mut lw = Vec::new();
            match node {
                Node::Sum { children, weights } => {
                    if children.is_empty() || children.len() != weights.len() {
                        return corrupt(format!("sum {i}: {} children, {} weights", children.len(), weights.len()));
                    }
                    let w = weights.values();
                    if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > WEIGHT_TOLERANCE {
                        return corrupt(format!("sum {i}: weights must be nonnegative and sum to 1"));
                    }
                    lw = w.iter().map(|x| x.ln()).collect();
                    if children.iter().any(|&c| c >= i) {
                        return corrupt(format!("node {i} has a child that does not precede it"));
                    }
                }
                Node::Product { children } => {
                    if children.is_empty() || children.iter().any(|&c| c >= i) {
                        return corrupt(format!("product {i} has invalid children"));
                    }
                }
                Node::Indicator { var, .. } => {
                    if *var > n_features {
                        return corrupt(format!("indicator {i} on unknown variable {var}"));
                    }
                }
                Node::Leaf { support, .. } => {
                    if support.as_ref().is_some_and(|c| c.sides.len() != n_features) {
                        return corrupt(format!("leaf {i} support has wrong dimension"));
                    }
                }
            }
            log_weights.push(lw);
        }
        Ok(Circuit {
            n_features,
            root,
            nodes,
            log_weights,
        })
    }

    /// Circuit consisting of a single leaf.
    pub fn leaf(density: LeafDensity, n_features: usize) -> Self {
        Circuit::new(vec![Node::Leaf { density, support: None }], 0, n_features)
            .expect("a single leaf is always valid")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_var(&self) -> usize {
        self.n_features
    }

    pub fn n_vars(&self) -> usize {
        self.n_features + 1
    }

    pub fn log_weights(&self, id: NodeId) -> &[f64] {
        &self.log_weights[id]
    }

    fn leaf_value(&self, density: &LeafDensity, support: &Option<Cell>, ev: &[Option<f64>]) -> f64 {
        if let Some(cell) = support {
            let outside = cell
                .sides
                .iter()
                .zip(ev)
                .any(|(s, v)| v.is_some_and(|v| !s.contains(v)));
            if outside {
                return f64::NEG_INFINITY;
            }
        }
        density.log_marginal(ev)
    }

    /// Log-value of every node under `ev`, in arena order.
    pub fn forward(&self, ev: &[Option<f64>]) -> Vec<f64> {
        debug_assert_eq!(ev.len(), self.n_vars());
        let mut vals = vec![f64::NEG_INFINITY; self.nodes.len()];
        let mut scratch = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            vals[i] = match node {
                Node::Sum { children, .. } => {
                    scratch.clear();
                    for (&c, &lw) in children.iter().zip(&self.log_weights[i]) {
                        if lw > f64::NEG_INFINITY {
                            scratch.push(lw + vals[c]);
                        }
                    }
                    log_sum_exp(&scratch)
                }
                Node::Product { children } => {
                    let mut acc = 0.0;
                    for &c in children {
                        acc += vals[c];
                        if acc == f64::NEG_INFINITY {
                            break;
                        }
                    }
                    acc
                }
                Node::Indicator { var, predicate } => match ev[*var] {
                    None => 0.0,
                    Some(v) if predicate.holds(v) => 0.0,
                    Some(_) => f64::NEG_INFINITY,
                },
                Node::Leaf { density, support } => self.leaf_value(density, support, ev),
            };
        }
        vals
    }

    /// Log-density of a complete assignment `x` (features then class).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let ev: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
        self.marginal(&ev)
    }

    /// Log-probability of the observed part of `ev`, everything else summed
    /// or integrated out.
    pub fn marginal(&self, ev: &[Option<f64>]) -> f64 {
        self.forward(ev)[self.root]
    }

    /// Top-down evaluation that skips the remaining children of a product as
    /// soon as one of its indicators is zero.
    pub fn marginal_pruned(&self, ev: &[Option<f64>], trace: &mut EvalTrace) -> f64 {
        self.eval_node(self.root, ev, trace)
    }

    fn eval_node(&self, id: NodeId, ev: &[Option<f64>], trace: &mut EvalTrace) -> f64 {
        trace.nodes += 1;
        match &self.nodes[id] {
            Node::Sum { children, .. } => {
                let terms: Vec<f64> = children
                    .iter()
                    .zip(&self.log_weights[id])
                    .filter(|(_, &lw)| lw > f64::NEG_INFINITY)
                    .map(|(&c, &lw)| lw + self.eval_node(c, ev, trace))
                    .collect();
                log_sum_exp(&terms)
            }
            Node::Product { children } => {
                let is_ind = |c: &NodeId| matches!(self.nodes[*c], Node::Indicator { .. });
                let mut acc = 0.0;
                for c in children.iter().filter(|c| is_ind(c)).chain(children.iter().filter(|c| !is_ind(c))) {
                    acc += self.eval_node(*c, ev, trace);
                    if acc == f64::NEG_INFINITY {
                        return acc;
                    }
                }
                acc
            }
            Node::Indicator { var, predicate } => match ev[*var] {
                Some(v) if !predicate.holds(v) => f64::NEG_INFINITY,
                _ => 0.0,
            },
            Node::Leaf { density, support } => {
                trace.leaves += 1;
                self.leaf_value(density, support, ev)
            }
        }
    }

    /// `log p(features, Y = y)` for every class `y`, computed top-down with
    /// the same short-circuiting as [`Circuit::marginal_pruned`].
    pub fn class_log_joint(&self, features: &[Option<f64>], n_classes: usize, trace: &mut EvalTrace) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.n_features);
        let mut ev: Vec<Option<f64>> = features.to_vec();
        ev.push(None);
        self.eval_by_class(self.root, &mut ev, n_classes, trace)
    }

    fn eval_by_class(&self, id: NodeId, ev: &mut Vec<Option<f64>>, k: usize, trace: &mut EvalTrace) -> Vec<f64> {
        trace.nodes += 1;
        let cv = self.class_var();
        match &self.nodes[id] {
            Node::Sum { children, .. } => {
                let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(children.len()); k];
                for (&c, &lw) in children.iter().zip(&self.log_weights[id]) {
                    if lw == f64::NEG_INFINITY {
                        continue;
                    }
                    let v = self.eval_by_class(c, ev, k, trace);
                    for (t, x) in terms.iter_mut().zip(v) {
                        t.push(lw + x);
                    }
                }
                terms.iter().map(|t| log_sum_exp(t)).collect()
            }
            Node::Product { children } => {
                let is_ind = |c: &NodeId| matches!(self.nodes[*c], Node::Indicator { .. });
                let mut acc = vec![0.0; k];
                for c in children.iter().filter(|c| is_ind(c)).chain(children.iter().filter(|c| !is_ind(c))) {
                    let v = self.eval_by_class(*c, ev, k, trace);
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += x;
                    }
                    if acc.iter().all(|&a| a == f64::NEG_INFINITY) {
                        break;
                    }
                }
                acc
            }
            Node::Indicator { var, predicate } => {
                if *var == cv {
                    (0..k)
                        .map(|y| if predicate.holds(y as f64) { 0.0 } else { f64::NEG_INFINITY })
                        .collect()
                } else {
                    let v = match ev[*var] {
                        Some(x) if !predicate.holds(x) => f64::NEG_INFINITY,
                        _ => 0.0,
                    };
                    vec![v; k]
                }
            }
            Node::Leaf { density, support } => {
                trace.leaves += 1;
                if let Some(cell) = support {
                    let outside = cell
                        .sides
                        .iter()
                        .zip(ev.iter())
                        .any(|(s, v)| v.is_some_and(|v| !s.contains(v)));
                    if outside {
                        return vec![f64::NEG_INFINITY; k];
                    }
                }
                density.log_marginal_by_class(ev, k)
            }
        }
    }

    /// Scope of every node as a sorted variable list.
    pub fn scopes(&self) -> Vec<Vec<usize>> {
        let mut scopes: Vec<Vec<usize>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let s = match node {
                Node::Sum { children, .. } | Node::Product { children } => {
                    let mut s: Vec<usize> = children.iter().flat_map(|&c| scopes[c].iter().copied()).collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                }
                Node::Indicator { var, .. } => vec![*var],
                Node::Leaf { density, .. } => density.scope(self.n_features),
            };
            scopes.push(s);
        }
        scopes
    }

    /// Every sum node's children share one scope.
    pub fn check_smooth(&self) -> bool {
        let scopes = self.scopes();
        self.nodes.iter().all(|n| match n {
            Node::Sum { children, .. } => children.iter().all(|&c| scopes[c] == scopes[children[0]]),
            _ => true,
        })
    }

    /// Every product node's children have pairwise disjoint scopes.
    pub fn check_decomposable(&self) -> bool {
        let scopes = self.scopes();
        self.nodes.iter().all(|n| match n {
            Node::Product { children } => {
                let total: usize = children.iter().map(|&c| scopes[c].len()).sum();
                let mut all: Vec<usize> = children.iter().flat_map(|&c| scopes[c].iter().copied()).collect();
                all.sort_unstable();
                all.dedup();
                all.len() == total
            }
            _ => true,
        })
    }

    /// For each complete sample (features then class), every sum node has at
    /// most one child with nonzero value.
    pub fn check_deterministic(&self, samples: &[Vec<f64>]) -> bool {
        samples.iter().all(|x| self.count_determinism_violations(x) == 0)
    }

    /// Number of sum nodes with two or more nonzero children under `x`.
    pub fn count_determinism_violations(&self, x: &[f64]) -> usize {
        let ev: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
        let vals = self.forward(&ev);
        self.nodes
            .iter()
            .filter(|n| match n {
                Node::Sum { children, .. } => {
                    children.iter().filter(|&&c| vals[c] > f64::NEG_INFINITY).count() > 1
                }
                _ => false,
            })
            .count()
    }

    /// Sum of `exp(evaluate)` over every joint state. Only for circuits whose
    /// variables are all categorical; `cards[v]` is the cardinality of `v`.
    pub fn total_mass(&self, cards: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut state = vec![0usize; cards.len()];
        loop {
            let x: Vec<f64> = state.iter().map(|&s| s as f64).collect();
            total += self.evaluate(&x).exp();
            let mut i = 0;
            loop {
                if i == cards.len() {
                    return total;
                }
                state[i] += 1;
                if state[i] < cards[i] {
                    break;
                }
                state[i] = 0;
                i += 1;
            }
        }
    }
}

/// Incremental arena builder; nodes must be added children-first.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, density: LeafDensity) -> NodeId {
        self.add(Node::Leaf { density, support: None })
    }

    pub fn indicator(&mut self, var: usize, predicate: Predicate) -> NodeId {
        self.add(Node::Indicator { var, predicate })
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.add(Node::Product { children })
    }

    pub fn sum(&mut self, children: Vec<NodeId>, weights: SumWeights) -> NodeId {
        self.add(Node::Sum { children, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Finishes with the last added node as root.
    pub fn build(self, n_features: usize) -> Result<Circuit> {
        let root = self
            .nodes
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidData("empty circuit".into()))?;
        Circuit::new(self.nodes, root, n_features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureKind;
    use crate::leaves::{Factor, LeafDensity};
    use approx::assert_abs_diff_eq;

    fn uniform_binary_leaf() -> LeafDensity {
        LeafDensity::ClassFactorized {
            factors: vec![Factor::Categorical { probs: vec![0.5, 0.5] }],
            class: vec![0.5, 0.5],
        }
    }

    #[test]
    fn single_uniform_leaf() {
        let c = Circuit::leaf(uniform_binary_leaf(), 1);
        for x in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
            assert_abs_diff_eq!(c.evaluate(&x), 0.25f64.ln(), epsilon = 1e-15);
        }
        assert_eq!(c.marginal(&[None, None]), 0.0);
        assert!(c.check_smooth() && c.check_decomposable());
        assert!(c.check_deterministic(&[]));
    }

    #[test]
    fn zero_weight_child_is_inert() {
        let mut b = CircuitBuilder::new();
        let a = b.leaf(uniform_binary_leaf());
        let z = b.leaf(LeafDensity::ClassFactorized {
            factors: vec![Factor::Categorical { probs: vec![0.9, 0.1] }],
            class: vec![0.2, 0.8],
        });
        b.sum(vec![a, z], SumWeights::Real(vec![1.0, 0.0]));
        let with_zero = b.build(1).unwrap();
        let alone = Circuit::leaf(uniform_binary_leaf(), 1);
        for x in [[0.0, 1.0], [1.0, 0.0]] {
            assert_eq!(with_zero.evaluate(&x), alone.evaluate(&x));
        }
    }

    #[test]
    fn overlapping_mixture_is_not_deterministic() {
        let mut b = CircuitBuilder::new();
        let a = b.leaf(uniform_binary_leaf());
        let c = b.leaf(uniform_binary_leaf());
        b.sum(vec![a, c], SumWeights::Counts(vec![1, 1]));
        let circ = b.build(1).unwrap();
        assert!(!circ.check_deterministic(&[vec![0.0, 0.0]]));
        assert!(circ.check_deterministic(&[]));
    }

    #[test]
    fn invalid_weights_rejected() {
        let mut b = CircuitBuilder::new();
        let a = b.leaf(uniform_binary_leaf());
        b.sum(vec![a], SumWeights::Real(vec![0.7]));
        assert!(b.build(1).is_err());
    }

    #[test]
    fn indicator_missing_is_one() {
        let mut b = CircuitBuilder::new();
        let i = b.indicator(0, Predicate::Le(0.5));
        let l = b.leaf(LeafDensity::ClassFactorized {
            factors: vec![Factor::Constant],
            class: vec![0.5, 0.5],
        });
        b.product(vec![i, l]);
        let c = b.build(1).unwrap();
        assert_eq!(c.marginal(&[None, Some(0.0)]), 0.5f64.ln());
        assert_eq!(c.marginal(&[Some(0.7), Some(0.0)]), f64::NEG_INFINITY);
        let mut t = EvalTrace::default();
        assert_eq!(c.marginal_pruned(&[Some(0.7), Some(0.0)], &mut t), f64::NEG_INFINITY);
        assert_eq!(t.leaves, 0);
        assert!(c.check_decomposable());
    }

    #[test]
    fn leaf_support_restricts_observed_only() {
        let cell = crate::forest::Cell::root(&[FeatureKind::Continuous])
            .split(&crate::forest::SplitRule::Threshold { feature: 0, threshold: 0.0 })
            .0;
        let c = Circuit::new(
            vec![Node::Leaf {
                density: LeafDensity::ClassFactorized {
                    factors: vec![Factor::Gaussian { mean: 0.0, std: 1.0 }],
                    class: vec![1.0, 0.0],
                },
                support: Some(cell),
            }],
            0,
            1,
        )
        .unwrap();
        assert_eq!(c.marginal(&[Some(1.0), None]), f64::NEG_INFINITY);
        assert_eq!(c.marginal(&[None, Some(0.0)]), 0.0);
        assert_eq!(c.marginal(&[None, Some(1.0)]), f64::NEG_INFINITY);
    }

    #[test]
    fn serde_round_trip_keeps_exact_weights() {
        let mut b = CircuitBuilder::new();
        let a = b.leaf(uniform_binary_leaf());
        let c = b.leaf(uniform_binary_leaf());
        b.sum(vec![a, c], SumWeights::Counts(vec![1, 2]));
        let circ = b.build(1).unwrap();
        let text = serde_json::to_string(&circ).unwrap();
        let back: Circuit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, circ);
        assert_eq!(back.log_weights(2)[1], (2.0f64 / 3.0).ln());
    }
}
