use std::io::Write;

use serde::Serialize;

use super::GbdtEnsemble;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Importance {
    pub feature: String,
    pub index: usize,
    pub count: u64,
}

/// Split counts per feature, descending, ties by feature index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportanceTable {
    pub entries: Vec<Importance>,
}

impl ImportanceTable {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn top(&self, n: usize) -> &[Importance] {
        &self.entries[..n.min(self.entries.len())]
    }

    pub fn count_of(&self, feature: &str) -> Option<u64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.count)
    }

    /// `rank,feature,count` rows, rank starting at 1.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(["rank", "feature", "count"])?;
        for (i, e) in self.entries.iter().enumerate() {
            out.write_record([(i + 1).to_string(), e.feature.clone(), e.count.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn feature_importance<T: Scalar>(ensemble: &GbdtEnsemble<T>) -> ImportanceTable {
    let mut counts = vec![0u64; ensemble.n_features()];
    for tree in ensemble.trees() {
        tree.for_each_split(&mut |f| counts[f] += 1);
    }
    let mut entries: Vec<Importance> = counts
        .into_iter()
        .enumerate()
        .map(|(index, count)| Importance {
            feature: ensemble.feature_names[index].clone(),
            index,
            count,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then(a.index.cmp(&b.index)));
    ImportanceTable { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GbdtParams, TreeNode};

    fn ensemble(trees: Vec<TreeNode<f64>>) -> GbdtEnsemble<f64> {
        GbdtEnsemble {
            params: GbdtParams::default(),
            feature_names: (0..5).map(|i| format!("f{i}")).collect(),
            base_score: 0.0,
            eta: 0.5,
            rounds: vec![trees],
            model_version: String::new(),
        }
    }

    fn split(feature: usize, left: TreeNode<f64>, right: TreeNode<f64>) -> TreeNode<f64> {
        TreeNode::Split {
            feature,
            threshold: 1.0,
            missing_goes_left: true,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    #[test]
    fn stump_on_feature_three() {
        let table = feature_importance(&ensemble(vec![split(3, TreeNode::leaf(0.1), TreeNode::leaf(0.2))]));
        assert_eq!(table.entries[0].feature, "f3");
        assert_eq!(table.entries[0].count, 1);
        assert!(table.entries[1..].iter().all(|e| e.count == 0));
        assert_eq!(table.entries[1..].iter().map(|e| e.index).collect::<Vec<_>>(), vec![0, 1, 2, 4]);
    }

    #[test]
    fn all_leaves_is_all_zero() {
        let table = feature_importance(&ensemble(vec![TreeNode::leaf(0.3), TreeNode::leaf(0.1)]));
        assert_eq!(table.total(), 0);
        assert_eq!(table.entries.len(), 5);
    }

    #[test]
    fn counts_sum_to_internal_nodes() {
        let deep = split(1, split(2, TreeNode::leaf(0.0), TreeNode::leaf(1.0)), split(1, TreeNode::leaf(0.0), TreeNode::leaf(1.0)));
        let model = ensemble(vec![deep, split(4, TreeNode::leaf(0.0), TreeNode::leaf(1.0))]);
        let table = feature_importance(&model);
        let nodes: usize = model.trees().map(TreeNode::internal_nodes).sum();
        assert_eq!(table.total(), nodes as u64);
        assert_eq!(table.count_of("f1"), Some(2));
        assert_eq!(table.top(1)[0].feature, "f1");
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("rank,feature,count\n1,f1,2\n"));
    }
}
