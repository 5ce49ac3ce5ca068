use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A binary decision tree. Rows with `value < threshold` go left; missing
/// (NaN) values follow `missing_goes_left`. The pipeline never produces
/// missing values, so that flag is always `true` in trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum TreeNode<T> {
    Leaf {
        weight: T,
    },
    Split {
        feature: usize,
        threshold: T,
        missing_goes_left: bool,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
}

impl<T: Scalar> TreeNode<T> {
    pub fn leaf(weight: T) -> Self {
        TreeNode::Leaf { weight }
    }

    pub fn evaluate(&self, row: &[T]) -> T {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_goes_left,
                    left,
                    right,
                } => {
                    let x = row[*feature];
                    let go_left = if x.is_nan() {
                        *missing_goes_left
                    } else {
                        x < *threshold
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn internal_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.internal_nodes() + right.internal_nodes(),
        }
    }

    /// Calls `visit(feature)` for each internal node.
    pub fn for_each_split(&self, visit: &mut impl FnMut(usize)) {
        if let TreeNode::Split {
            feature, left, right, ..
        } = self
        {
            visit(*feature);
            left.for_each_split(visit);
            right.for_each_split(visit);
        }
    }
}

/// Threshold between two consecutive distinct sorted values such that
/// `lo < threshold <= hi`.
pub(crate) fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let mid = lo + (hi - lo) * T::HALF;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}
