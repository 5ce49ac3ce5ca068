use super::ModelError;
use crate::scalar::Scalar;

/// Area under the ROC curve by the rank-sum statistic, with tied scores
/// given their average rank (a tie between a positive and a negative counts
/// one half).
pub fn auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, ModelError> {
    if scores.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(at) = scores.iter().position(|s| s.is_nan()) {
        return Err(ModelError::NanScore(at));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ModelError::AucSingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("NaN excluded above"));

    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (1-based start+1..=end) share their mean.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        positive_rank_sum += mean_rank * tied_pos as f64;
        start = end;
    }
    let (pos, neg) = (pos as f64, neg as f64);
    Ok((positive_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}
