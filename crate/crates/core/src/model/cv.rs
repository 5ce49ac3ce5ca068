use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{auc, gbdt, train_cart, Dataset, GbdtParams, ModelError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Learner {
    Gbdt(GbdtParams),
    Cart { max_depth: usize },
}

impl Learner {
    pub fn name(&self) -> &'static str {
        match self {
            Learner::Gbdt(_) => "gbdt",
            Learner::Cart { .. } => "cart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 10,
            seed: 42,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learner: String,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
    pub fold_sizes: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl EvalReport {
    pub fn k(&self) -> usize {
        self.fold_aucs.len()
    }

    /// `fold,size,auc` rows.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(["fold", "size", "auc"])?;
        for (i, (size, auc)) in self.fold_sizes.iter().zip(&self.fold_aucs).enumerate() {
            out.write_record([i.to_string(), size.to_string(), auc.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}-fold cross-validation ({}, seed {}{})",
            self.k(),
            self.learner,
            self.seed,
            if self.stratified { ", stratified" } else { "" }
        )?;
        for (i, (size, auc)) in self.fold_sizes.iter().zip(&self.fold_aucs).enumerate() {
            writeln!(f, "  fold {i:>2}  n={size:<8} AUC {auc:.4}")?;
        }
        write!(f, "mean AUC {:.4}", self.mean_auc)
    }
}

/// Test-fold membership: row indices per fold, each sorted ascending.
///
/// Rows are permuted by a seeded generator and dealt round-robin, so fold
/// sizes differ by at most one. Stratified assignment permutes each class
/// separately and deals positives first.
pub fn fold_assignment(labels: &[u8], k: usize, seed: u64, stratified: bool) -> Result<Vec<Vec<usize>>, ModelError> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(ModelError::BadFolds { k, rows: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = if stratified {
        let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] == 1);
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        pos.into_iter().chain(neg).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (i, row) in order.into_iter().enumerate() {
        folds[i % k].push(row);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// k-fold cross-validated AUC of the boosted model, seeded by `params.seed`.
pub fn kfold_cv<T: Scalar>(data: &Dataset<T>, params: &GbdtParams, k: usize) -> Result<EvalReport, ModelError> {
    let options = CvOptions {
        k,
        seed: params.seed,
        stratified: false,
    };
    kfold_cv_with(data, &Learner::Gbdt(*params), &options)
}

pub fn kfold_cv_with<T: Scalar>(data: &Dataset<T>, learner: &Learner, options: &CvOptions) -> Result<EvalReport, ModelError> {
    if let Learner::Gbdt(params) = learner {
        params.validate()?;
    }
    data.check_values()?;
    let folds = fold_assignment(data.labels(), options.k, options.seed, options.stratified)?;
    let total_pos = data.labels().iter().filter(|&&y| y == 1).count();
    for (fold, rows) in folds.iter().enumerate() {
        // Both the test fold and the remaining training rows need both classes.
        let pos = rows.iter().filter(|&&r| data.labels()[r] == 1).count();
        let (train_pos, train_n) = (total_pos - pos, data.len() - rows.len());
        if pos == 0 || pos == rows.len() || train_pos == 0 || train_pos == train_n {
            return Err(ModelError::FoldSingleClass { fold });
        }
    }

    let mut in_test = vec![usize::MAX; data.len()];
    for (fold, rows) in folds.iter().enumerate() {
        for &r in rows {
            in_test[r] = fold;
        }
    }
    let mut fold_aucs = Vec::with_capacity(options.k);
    for (fold, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = (0..data.len()).filter(|&r| in_test[r] != fold).collect();
        let train = data.subset(&train_rows);
        let test = data.subset(test_rows);
        let scores: Vec<T> = match learner {
            Learner::Gbdt(params) => {
                let model = gbdt::train(&train, params)?;
                (0..test.len()).map(|i| model.margin(test.row(i))).collect()
            }
            Learner::Cart { max_depth } => {
                let model = train_cart(&train, *max_depth)?;
                (0..test.len()).map(|i| model.tree.evaluate(test.row(i))).collect()
            }
        };
        let value = auc(&scores, test.labels())?;
        log::info!("fold {fold}: n={} AUC {value:.4}", test.len());
        fold_aucs.push(value);
    }
    let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    Ok(EvalReport {
        learner: learner.name().to_string(),
        fold_aucs,
        mean_auc,
        fold_sizes: folds.iter().map(Vec::len).collect(),
        seed: options.seed,
        stratified: options.stratified,
    })
}
