//! Classifiers and their evaluation: second-order gradient-boosted trees with
//! logistic loss, a single CART baseline, rank-based AUC, k-fold
//! cross-validation and split-count importance.

mod auc;
mod cart;
mod cv;
mod dataset;
mod gbdt;
mod importance;
mod io;
mod tree;

pub use auc::auc;
pub use cart::{train_cart, CartModel};
pub use cv::{fold_assignment, kfold_cv, kfold_cv_with, CvOptions, EvalReport, Learner};
pub use dataset::Dataset;
pub use gbdt::{predict, train, GbdtEnsemble, GbdtParams};
pub use importance::{feature_importance, ImportanceTable};
pub use io::{load_model, save_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use tree::TreeNode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data is empty")]
    Empty,
    #[error("training labels contain a single class ({0})")]
    SingleClass(u8),
    #[error("label {label} at row {row} is not 0 or 1")]
    BadLabel { row: usize, label: u8 },
    #[error("non-finite value at row {row}, column {column} ({name})")]
    NonFinite { row: usize, column: usize, name: String },
    #[error("row has {found} features, model expects {expected}")]
    Arity { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("AUC needs at least one positive and one negative label")]
    AucSingleClass,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} is not a number")]
    NanScore(usize),
    #[error("fold {fold} lacks one of the classes; retry with stratified folds (--stratified)")]
    FoldSingleClass { fold: usize },
    #[error("need k >= 2 and at least k rows (k = {k}, rows = {rows})")]
    BadFolds { k: usize, rows: usize },
    #[error("model format: {0}")]
    Format(String),
    #[error("model format version {found} not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
