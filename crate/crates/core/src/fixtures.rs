//! Small hand-built models used by tests, examples and the Python smoke test.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, FeatureKind, Schema};
use crate::forest::{learn_forest, Cell, DecisionTree, ForestParams, MaxFeatures, RandomForest, SplitRule, TreeNode, TreeParams};

/// Schema of the three-leaf example: `x1 ∈ {0, 1}`, continuous `x2`, binary
/// class.
pub fn f1_schema() -> Arc<Schema> {
    Arc::new(Schema::from_kinds(&[FeatureKind::Categorical(2), FeatureKind::Continuous], 2).expect("valid schema"))
}

/// 100 rows laid out so that the tree of [`f1_tree`] routes 80 rows left of
/// `x2 <= 0.5` (40 with `x1 = 0`, all class 1; 40 with `x1 = 1`, 10 class 0
/// and 30 class 1) and 20 rows right (all class 0).
pub fn f1_dataset() -> Dataset {
    let mut rows = Vec::with_capacity(100);
    let mut labels = Vec::with_capacity(100);
    for i in 0..40 {
        rows.push(vec![0.0, 0.05 + 0.01 * i as f64]);
        labels.push(1);
    }
    for i in 0..40 {
        rows.push(vec![1.0, 0.05 + 0.01 * i as f64]);
        labels.push(usize::from(i >= 10));
    }
    for i in 0..20 {
        rows.push(vec![(i % 2) as f64, 0.6 + 0.01 * i as f64]);
        labels.push(0);
    }
    Dataset::from_rows(f1_schema(), &rows, labels).expect("valid rows")
}

/// Root `x2 <= 0.5`; its left child splits `x1 ∈ {0}`. Leaves hold class
/// counts (0, 40), (10, 30) and (20, 0).
pub fn f1_tree() -> DecisionTree {
    let kinds = [FeatureKind::Categorical(2), FeatureKind::Continuous];
    let root_split = SplitRule::Threshold {
        feature: 1,
        threshold: 0.5,
    };
    let inner_split = SplitRule::Subset {
        feature: 0,
        left: vec![0],
    };
    let (lcell, rcell) = Cell::root(&kinds).split(&root_split);
    let (llcell, lrcell) = lcell.split(&inner_split);
    let nodes = vec![
        TreeNode::Internal {
            split: root_split,
            left: 1,
            right: 2,
            n_samples: 100,
            surrogates: Vec::new(),
            majority_left: true,
        },
        TreeNode::Internal {
            split: inner_split,
            left: 3,
            right: 4,
            n_samples: 80,
            surrogates: Vec::new(),
            majority_left: true,
        },
        TreeNode::Leaf {
            counts: vec![20, 0],
            rows: (80..100).collect(),
            cell: rcell,
        },
        TreeNode::Leaf {
            counts: vec![0, 40],
            rows: (0..40).collect(),
            cell: llcell,
        },
        TreeNode::Leaf {
            counts: vec![10, 30],
            rows: (40..80).collect(),
            cell: lrcell,
        },
    ];
    DecisionTree::from_nodes(nodes, 2).expect("valid tree")
}

/// Single-tree forest around [`f1_tree`], trained (without bootstrap) on
/// [`f1_dataset`].
pub fn f1_forest() -> RandomForest {
    crate::forest::forest_from_trees(vec![f1_tree()], f1_schema(), 100).expect("one tree")
}

/// Random all-binary classification problem: `m` binary features, binary
/// class given by a noisy parity of the first two features plus a vote of
/// the rest.
pub fn random_binary_dataset(m: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Arc::new(Schema::from_kinds(&vec![FeatureKind::Categorical(2); m], 2).expect("valid schema"));
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..m).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let score: f64 = x.iter().enumerate().map(|(i, v)| v * (1.0 + i as f64 * 0.3)).sum();
        let noisy = rng.random_bool(0.15);
        let y = usize::from((score > m as f64 * 0.6) != noisy);
        rows.push(x);
        labels.push(y);
    }
    Dataset::from_rows(schema, &rows, labels).expect("valid rows")
}

/// Small forest of shallow trees on [`random_binary_dataset`].
pub fn random_binary_forest(m: usize, n: usize, n_trees: usize, max_depth: usize, seed: u64) -> (Dataset, RandomForest) {
    let d = random_binary_dataset(m, n, seed);
    let params = ForestParams {
        n_trees,
        tree: TreeParams {
            max_depth: Some(max_depth),
            max_features: MaxFeatures::Sqrt,
            ..TreeParams::default()
        },
        bootstrap: true,
    };
    let forest = learn_forest(&d, &params, seed ^ 0x5eed).expect("learnable data");
    (d, forest)
}
