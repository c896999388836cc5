//! Gradient-boosted regression trees: stagewise squared-error boosting with
//! greedy variance-reduction splits and L2-damped leaf values.
//!
//! Fitting is fully deterministic: no row or column subsampling, ties broken
//! by lowest feature index then lowest threshold, and all reductions run in
//! a canonical row order so shuffling the training rows cannot change the
//! fitted model.

mod split;

pub use split::{best_split, SplitCandidate};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Hyperparameters for [`fit_forest`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Per-tree scaling factor in (0, 1].
    pub shrinkage: f64,
    /// L2 regularization on leaf values.
    pub lambda: f64,
    pub min_samples_leaf: usize,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 500,
            max_depth: 4,
            shrinkage: 0.1,
            lambda: 1.0,
            min_samples_leaf: 1,
        }
    }
}

impl ForestHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::Config {
                reason: format!("shrinkage must lie in (0, 1], got {}", self.shrinkage),
            });
        }
        if self.lambda < 0.0 {
            return Err(Error::Config {
                reason: format!("lambda must be non-negative, got {}", self.lambda),
            });
        }
        Ok(())
    }
}

/// Node of a binary regression tree. Rows with `x[feature] <= threshold`
/// route left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree stored as a node array; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Number of split levels on the deepest path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Additive ensemble: prediction = base score + shrinkage * sum of trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoostedForest {
    pub trees: Vec<RegressionTree>,
    pub shrinkage: f64,
    pub base_score: f64,
    pub n_features: usize,
}

impl GradientBoostedForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                context: "forest predict",
                unit: "features",
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut acc = self.base_score;
        for tree in &self.trees {
            acc += self.shrinkage * tree.predict(x);
        }
        Ok(acc)
    }
}

/// Deterministic prediction: base score plus the shrunken tree sum.
pub fn predict_forest(forest: &GradientBoostedForest, x: &[f64]) -> Result<f64> {
    forest.predict(x)
}

/// Canonical row order: rows sorted lexicographically by feature values,
/// then by target. All sums during fitting run in this order, which makes
/// the fitted forest invariant under any permutation of the input rows
/// (duplicate rows with equal targets are interchangeable).
fn canonical_order(features: &Matrix, targets: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..features.n_rows()).collect();
    order.sort_by(|&a, &b| {
        for j in 0..features.n_cols() {
            match features.get(a, j).total_cmp(&features.get(b, j)) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        targets[a].total_cmp(&targets[b])
    });
    order
}

/// Stagewise least-squares boosting. The `_seed` parameter is reserved for
/// stochastic variants; fitting is deterministic.
pub fn fit_forest(
    features: &Matrix,
    targets: &[f64],
    hyper: &ForestHyper,
    _seed: u64,
) -> Result<GradientBoostedForest> {
    hyper.validate()?;
    let n = features.n_rows();
    if n == 0 || targets.is_empty() {
        return Err(Error::EmptyInput {
            context: "fit_forest",
        });
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            context: "fit_forest",
            unit: "targets",
            expected: n,
            got: targets.len(),
        });
    }
    if let Some(row) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteTarget { row });
    }

    let order = canonical_order(features, targets);
    let base_score = order.iter().map(|&i| targets[i]).sum::<f64>() / n as f64;

    let mut residuals: Vec<f64> = targets.iter().map(|&t| t - base_score).collect();
    let mut trees = Vec::with_capacity(hyper.n_trees);

    for _ in 0..hyper.n_trees {
        let tree = fit_tree(features, &residuals, &order, hyper);
        for &i in &order {
            residuals[i] -= hyper.shrinkage * tree.predict(features.row(i));
        }
        trees.push(tree);
    }

    Ok(GradientBoostedForest {
        trees,
        shrinkage: hyper.shrinkage,
        base_score,
        n_features: features.n_cols(),
    })
}

/// Fits one tree to the current residuals. `rows` must already be in
/// canonical order; partitioning preserves relative order on both sides.
fn fit_tree(features: &Matrix, residuals: &[f64], rows: &[usize], hyper: &ForestHyper) -> RegressionTree {
    let mut nodes = Vec::new();
    grow(features, residuals, rows, hyper, 0, &mut nodes);
    RegressionTree {
        nodes,
        max_depth: hyper.max_depth,
    }
}

fn leaf_value(rows: &[usize], residuals: &[f64], lambda: f64) -> f64 {
    let sum: f64 = rows.iter().map(|&r| residuals[r]).sum();
    sum / (rows.len() as f64 + lambda)
}

fn grow(
    features: &Matrix,
    residuals: &[f64],
    rows: &[usize],
    hyper: &ForestHyper,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let index = nodes.len();
    if depth >= hyper.max_depth {
        nodes.push(TreeNode::Leaf {
            value: leaf_value(rows, residuals, hyper.lambda),
        });
        return index;
    }
    let Some(split) = best_split(rows, features, residuals, hyper) else {
        nodes.push(TreeNode::Leaf {
            value: leaf_value(rows, residuals, hyper.lambda),
        });
        return index;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| features.get(r, split.feature) <= split.threshold);

    // Placeholder is patched once both subtrees are laid out.
    nodes.push(TreeNode::Leaf { value: 0.0 });
    let left = grow(features, residuals, &left_rows, hyper, depth + 1, nodes);
    let right = grow(features, residuals, &right_rows, hyper, depth + 1, nodes);
    nodes[index] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    index
}
