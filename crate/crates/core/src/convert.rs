//! Conversion of trained trees and forests into generative circuits.
//!
//! Each decision node becomes a sum node whose weights are the fractions of
//! training rows routed to each child, and each leaf becomes a joint density
//! over `(X, Y)` supported on the leaf cell. The result is kept in two forms:
//! the sum-only tree circuit, and a compiled copy where every branch carries
//! an indicator next to the subtree so evaluation can skip branches whose
//! path constraint fails.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitBuilder, Node, NodeId, Predicate, SumWeights};
use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::forest::{Cell, DecisionTree, RandomForest, SplitRule, TreeNode};
use crate::leaves::LeafModel;

/// How the trees of a generative forest are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    /// Mean of the per-tree class posteriors.
    AverageConditionals,
    /// Uniform mixture of the per-tree joint densities.
    UniformMixture,
}

impl CombineMode {
    pub fn name(self) -> &'static str {
        match self {
            CombineMode::AverageConditionals => "gef",
            CombineMode::UniformMixture => "gefplus",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GeDTDoc {
    tree_index: usize,
    n_classes: usize,
    circuit: Circuit,
    decisions: Vec<Option<SplitRule>>,
    routed: Vec<u64>,
    kinds: Vec<FeatureKind>,
}

/// Generative decision tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeDTDoc", into = "GeDTDoc")]
pub struct GeDT {
    tree_index: usize,
    n_classes: usize,
    circuit: Circuit,
    /// Split rule of every sum node, indexed by circuit node.
    decisions: Vec<Option<SplitRule>>,
    /// Number of training rows routed to every circuit node.
    routed: Vec<u64>,
    kinds: Vec<FeatureKind>,
    compiled: Circuit,
    root_prior: Vec<f64>,
}

impl TryFrom<GeDTDoc> for GeDT {
    type Error = Error;

    fn try_from(doc: GeDTDoc) -> Result<Self> {
        GeDT::assemble(doc.tree_index, doc.n_classes, doc.circuit, doc.decisions, doc.routed, doc.kinds)
    }
}

impl From<GeDT> for GeDTDoc {
    fn from(g: GeDT) -> Self {
        GeDTDoc {
            tree_index: g.tree_index,
            n_classes: g.n_classes,
            circuit: g.circuit,
            decisions: g.decisions,
            routed: g.routed,
            kinds: g.kinds,
        }
    }
}

impl GeDT {
    fn assemble(
        tree_index: usize,
        n_classes: usize,
        circuit: Circuit,
        decisions: Vec<Option<SplitRule>>,
        routed: Vec<u64>,
        kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        let n = circuit.nodes().len();
        if decisions.len() != n || routed.len() != n || kinds.len() != circuit.n_features() {
            return Err(Error::NotGeDT("node annotations do not match the circuit".into()));
        }
        let compiled = compile_pullup_parts(&circuit, &decisions, &kinds)?;
        let root_prior = root_class_prior(&circuit, n_classes)?;
        Ok(GeDT {
            tree_index,
            n_classes,
            circuit,
            decisions,
            routed,
            kinds,
            compiled,
            root_prior,
        })
    }

    /// Sum-only circuit: one sum per decision node, one leaf per tree leaf.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Indicator pull-up form used for prediction.
    pub fn compiled(&self) -> &Circuit {
        &self.compiled
    }

    /// Index of the source tree within its forest.
    pub fn tree_index(&self) -> usize {
        self.tree_index
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.circuit.n_features()
    }

    pub fn decision(&self, id: NodeId) -> Option<&SplitRule> {
        self.decisions[id].as_ref()
    }

    pub fn routed(&self) -> &[u64] {
        &self.routed
    }

    /// Class fractions of the whole training sample.
    pub fn root_prior(&self) -> &[f64] {
        &self.root_prior
    }

    /// Support cells of the leaves, in circuit order.
    pub fn leaf_cells(&self) -> Vec<&Cell> {
        self.circuit
            .nodes()
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { support, .. } => support.as_ref(),
                _ => None,
            })
            .collect()
    }

    /// At every sum, weight times the parent's routed count gives the child's
    /// routed count, in exact integer arithmetic.
    pub fn check_counts(&self) -> bool {
        self.circuit.nodes().iter().enumerate().all(|(i, n)| match n {
            Node::Sum {
                children,
                weights: SumWeights::Counts(c),
            } => {
                c.iter().sum::<u64>() == self.routed[i]
                    && children.iter().zip(c).all(|(&ch, &w)| self.routed[ch] == w)
            }
            Node::Sum { .. } => false,
            _ => true,
        })
    }
}

/// Class distribution of the whole tree: `p(Y)` with every feature
/// marginalized, read off the sum-only circuit.
fn root_class_prior(circuit: &Circuit, k: usize) -> Result<Vec<f64>> {
    let m = circuit.n_features();
    let mut ev = vec![None; m + 1];
    let prior: Vec<f64> = (0..k)
        .map(|y| {
            ev[m] = Some(y as f64);
            circuit.marginal(&ev).exp()
        })
        .collect();
    let total: f64 = prior.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NotGeDT("class marginal has no mass".into()));
    }
    Ok(prior.iter().map(|p| p / total).collect())
}

/// Converts `tree` into a generative tree. `train` must be the exact sample
/// the tree was grown on (after bootstrapping); routing is recomputed from the
/// split rules so a mismatch surfaces as an error instead of silently wrong
/// weights.
pub fn dt_to_gedt(tree: &DecisionTree, train: &Dataset, leaf_model: &LeafModel, tree_index: usize) -> Result<GeDT> {
    let kinds = train.schema().feature_kinds().to_vec();
    let mut builder = CircuitBuilder::new();
    let mut decisions = Vec::new();
    let mut routed = Vec::new();
    let all: Vec<usize> = (0..train.n_rows()).collect();
    let root_cell = Cell::root(&kinds);
    build_node(
        tree,
        0,
        train,
        &all,
        root_cell,
        leaf_model,
        &mut builder,
        &mut decisions,
        &mut routed,
    )?;
    let circuit = builder.build(train.n_features())?;
    GeDT::assemble(tree_index, tree.n_classes(), circuit, decisions, routed, kinds)
}

#[allow(clippy::too_many_arguments)]
fn build_node(
    tree: &DecisionTree,
    id: usize,
    train: &Dataset,
    rows: &[usize],
    cell: Cell,
    leaf_model: &LeafModel,
    builder: &mut CircuitBuilder,
    decisions: &mut Vec<Option<SplitRule>>,
    routed: &mut Vec<u64>,
) -> Result<NodeId> {
    match tree.node(id) {
        TreeNode::Leaf { .. } => {
            let density = leaf_model.fit(train, rows, &cell)?;
            decisions.push(None);
            routed.push(rows.len() as u64);
            Ok(builder.add(Node::Leaf {
                density,
                support: Some(cell),
            }))
        }
        TreeNode::Internal { split, left, right, .. } => {
            if rows.is_empty() {
                return Err(Error::ZeroRouted { node: id });
            }
            let f = split.feature();
            let (lrows, rrows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| split.goes_left(train.value(r, f)));
            let (lcell, rcell) = cell.split(split);
            for (child, child_rows) in [(*left, &lrows), (*right, &rrows)] {
                if child_rows.is_empty() {
                    return Err(Error::ZeroRouted { node: child });
                }
            }
            let l = build_node(tree, *left, train, &lrows, lcell, leaf_model, builder, decisions, routed)?;
            let r = build_node(tree, *right, train, &rrows, rcell, leaf_model, builder, decisions, routed)?;
            decisions.push(Some(split.clone()));
            routed.push(rows.len() as u64);
            Ok(builder.sum(
                vec![l, r],
                SumWeights::Counts(vec![lrows.len() as u64, rrows.len() as u64]),
            ))
        }
    }
}

fn branch_predicates(rule: &SplitRule, kinds: &[FeatureKind]) -> Result<(Predicate, Predicate)> {
    let set_pred = |set: Vec<usize>| {
        if set.len() == 1 {
            Predicate::Eq(set[0])
        } else {
            Predicate::In(set)
        }
    };
    match rule {
        SplitRule::Threshold { threshold, .. } => Ok((Predicate::Le(*threshold), Predicate::Gt(*threshold))),
        SplitRule::Subset { feature, left } => {
            let k = kinds[*feature]
                .cardinality()
                .ok_or_else(|| Error::NotGeDT(format!("subset split on continuous feature {feature}")))?;
            let right: Vec<usize> = (0..k).filter(|c| left.binary_search(c).is_err()).collect();
            Ok((set_pred(left.clone()), set_pred(right)))
        }
    }
}

fn compile_pullup_parts(circuit: &Circuit, decisions: &[Option<SplitRule>], kinds: &[FeatureKind]) -> Result<Circuit> {
    let mut b = CircuitBuilder::new();
    let mut map = vec![usize::MAX; circuit.nodes().len()];
    for (i, node) in circuit.nodes().iter().enumerate() {
        map[i] = match node {
            Node::Leaf { density, support } => {
                let density = match support {
                    Some(cell) => density.without_pinned_factors(cell),
                    None => density.clone(),
                };
                b.leaf(density)
            }
            Node::Sum { children, weights } => {
                let rule = decisions[i]
                    .as_ref()
                    .ok_or_else(|| Error::NotGeDT(format!("sum {i} has no decision rule")))?;
                if children.len() != 2 {
                    return Err(Error::NotGeDT(format!("sum {i} is not binary")));
                }
                let (pl, pr) = branch_predicates(rule, kinds)?;
                let var = rule.feature();
                let il = b.indicator(var, pl);
                let ll = b.product(vec![il, map[children[0]]]);
                let ir = b.indicator(var, pr);
                let rr = b.product(vec![ir, map[children[1]]]);
                b.sum(vec![ll, rr], weights.clone())
            }
            Node::Product { .. } | Node::Indicator { .. } => {
                return Err(Error::NotGeDT(format!("node {i} is not a sum or a leaf")));
            }
        };
    }
    if map[circuit.root()] != b.len() - 1 {
        return Err(Error::NotGeDT("root is not the last node".into()));
    }
    b.build(circuit.n_features())
}

/// Indicator pull-up: every sum child `c` under decision `v` becomes
/// `1{x passes v towards c} × c`, and leaf factors pinned by the path are
/// dropped. Represents the same distribution as the sum-only circuit.
pub fn compile_pullup(gedt: &GeDT) -> Result<Circuit> {
    compile_pullup_parts(&gedt.circuit, &gedt.decisions, &gedt.kinds)
}

/// Generative forest: one generative tree per source tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeF {
    gedts: Vec<GeDT>,
    mode: CombineMode,
    leaf_model: String,
}

impl GeF {
    pub fn new(gedts: Vec<GeDT>, mode: CombineMode, leaf_model: &str) -> Result<Self> {
        if gedts.is_empty() {
            return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
        }
        Ok(GeF {
            gedts,
            mode,
            leaf_model: leaf_model.to_string(),
        })
    }

    pub fn gedts(&self) -> &[GeDT] {
        &self.gedts
    }

    pub fn n_trees(&self) -> usize {
        self.gedts.len()
    }

    pub fn mode(&self) -> CombineMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: CombineMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn leaf_model(&self) -> &str {
        &self.leaf_model
    }

    pub fn n_classes(&self) -> usize {
        self.gedts[0].n_classes
    }

    pub fn n_features(&self) -> usize {
        self.gedts[0].n_features()
    }

    /// Class fractions pooled over every tree's training sample.
    pub fn class_prior(&self) -> Vec<f64> {
        let k = self.n_classes();
        let total: f64 = self.gedts.iter().map(|g| g.routed[g.circuit.root()] as f64).sum();
        (0..k)
            .map(|y| {
                self.gedts
                    .iter()
                    .map(|g| g.root_prior[y] * g.routed[g.circuit.root()] as f64)
                    .sum::<f64>()
                    / total
            })
            .collect()
    }
}

/// Converts every tree of `forest`, each on its own reconstructed bootstrap
/// sample of `train`.
pub fn rf_to_gef(forest: &RandomForest, train: &Dataset, leaf_model: &LeafModel, mode: CombineMode) -> Result<GeF> {
    let gedts = (0..forest.n_trees())
        .into_par_iter()
        .map(|t| {
            let sample = forest.training_sample(t, train)?;
            dt_to_gedt(&forest.trees()[t], &sample, leaf_model, t)
        })
        .collect::<Result<Vec<_>>>()?;
    GeF::new(gedts, mode, leaf_model.name())
}
