//! Single classification tree grown by greedy Gini-impurity reduction.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, TreeNode};
use super::{Dataset, ModelError};
use crate::scalar::Scalar;

/// Smallest weighted impurity decrease that still counts as a split.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CartModel<T> {
    pub max_depth: usize,
    pub n_features: usize,
    pub tree: TreeNode<T>,
}

impl<T: Scalar> CartModel<T> {
    /// Fraction of class 1 in the leaf the row falls into.
    pub fn probability(&self, row: &[T]) -> Result<T, ModelError> {
        if row.len() != self.n_features {
            return Err(ModelError::Arity {
                expected: self.n_features,
                found: row.len(),
            });
        }
        Ok(self.tree.evaluate(row))
    }
}

/// Trains a CART tree. Single-class input is allowed and yields one leaf.
pub fn train_cart<T: Scalar>(data: &Dataset<T>, max_depth: usize) -> Result<CartModel<T>, ModelError> {
    data.check_values()?;
    let rows: Vec<usize> = (0..data.len()).collect();
    Ok(CartModel {
        max_depth,
        n_features: data.n_features(),
        tree: grow(data, rows, max_depth),
    })
}

/// `n * gini` for a node with `pos` positives out of `n`.
fn weighted_gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    n * 2.0 * p * (1.0 - p)
}

fn grow<T: Scalar>(data: &Dataset<T>, rows: Vec<usize>, depth_left: usize) -> TreeNode<T> {
    let n = rows.len() as f64;
    let pos = rows.iter().filter(|&&r| data.labels()[r] == 1).count() as f64;
    let leaf = TreeNode::leaf(T::of(pos / n));
    if depth_left == 0 || pos == 0.0 || pos == n {
        return leaf;
    }

    let parent = weighted_gini(pos, n);
    let mut best: Option<(usize, T, f64)> = None;
    let mut sorted = rows.clone();
    for feature in 0..data.n_features() {
        sorted.sort_by(|&a, &b| {
            data.value(a, feature)
                .partial_cmp(&data.value(b, feature))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut left_pos = 0.0;
        for (i, pair) in sorted.windows(2).enumerate() {
            left_pos += f64::from(data.labels()[pair[0]]);
            let (lo, hi) = (data.value(pair[0], feature), data.value(pair[1], feature));
            if hi <= lo {
                continue;
            }
            let left_n = (i + 1) as f64;
            let decrease = parent - weighted_gini(left_pos, left_n) - weighted_gini(pos - left_pos, n - left_n);
            if decrease > MIN_DECREASE && best.map_or(true, |(_, _, d)| decrease > d) {
                best = Some((feature, midpoint(lo, hi), decrease));
            }
        }
    }

    let Some((feature, threshold, _)) = best else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| data.value(r, feature) < threshold);
    TreeNode::Split {
        feature,
        threshold,
        missing_goes_left: true,
        left: Box::new(grow(data, left, depth_left - 1)),
        right: Box::new(grow(data, right, depth_left - 1)),
    }
}
