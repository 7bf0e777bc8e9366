//! Ranking metrics for binary link labels.

use super::TrainError;

fn check_labels(labels: &[f64], need_negative: bool) -> Result<(usize, usize), TrainError> {
    let p = labels.iter().filter(|&&y| y > 0.5).count();
    let n = labels.len() - p;
    if p == 0 || (need_negative && n == 0) {
        return Err(TrainError::DegenerateLabels {
            positives: p,
            negatives: n,
        });
    }
    Ok((p, n))
}

/// ROC AUC in Mann-Whitney form with midranks for tied scores.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let (p, n) = check_labels(labels, true)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] > 0.5).count() as f64;
        i = j + 1;
    }
    let (p, n) = (p as f64, n as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision over the descending-score ranking; equal scores keep
/// ascending index order.
pub fn average_precision(scores: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let (p, _) = check_labels(labels, false)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (r, &k) in order.iter().enumerate() {
        if labels[k] > 0.5 {
            hits += 1;
            total += hits as f64 / (r + 1) as f64;
        }
    }
    Ok(total / p as f64)
}

/// Fraction of predictions `sigmoid(z) >= 0.5` that match the label.
pub fn accuracy(probs: &[f64], labels: &[f64]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let right = probs
        .iter()
        .zip(labels)
        .filter(|(p, y)| (**p >= 0.5) == (**y > 0.5))
        .count();
    right as f64 / probs.len() as f64
}

/// One query's candidates: scores and binary relevance.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuery {
    pub scores: Vec<f64>,
    pub relevant: Vec<bool>,
}

impl RankedQuery {
    /// Candidate indices by descending score, ties by index.
    fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }

    fn num_relevant(&self) -> usize {
        self.relevant.iter().filter(|&&r| r).count()
    }
}

/// Mean Recall@K over queries with at least one relevant candidate.
pub fn recall_at_k(queries: &[RankedQuery], k: usize) -> f64 {
    mean_over_relevant(queries, |q| {
        let hits = q
            .ranking()
            .into_iter()
            .take(k)
            .filter(|&i| q.relevant[i])
            .count();
        hits as f64 / q.num_relevant() as f64
    })
}

/// Mean NDCG@K with binary gains and `1/log2(rank + 1)` discounts.
pub fn ndcg_at_k(queries: &[RankedQuery], k: usize) -> f64 {
    let discount = |r: usize| 1.0 / ((r + 2) as f64).log2();
    mean_over_relevant(queries, |q| {
        let dcg: f64 = q
            .ranking()
            .into_iter()
            .take(k)
            .enumerate()
            .filter(|&(_, i)| q.relevant[i])
            .map(|(r, _)| discount(r))
            .sum();
        let ideal: f64 = (0..q.num_relevant().min(k)).map(discount).sum();
        dcg / ideal
    })
}

fn mean_over_relevant(queries: &[RankedQuery], f: impl Fn(&RankedQuery) -> f64) -> f64 {
    let vals: Vec<f64> = queries
        .iter()
        .filter(|q| q.num_relevant() > 0)
        .map(f)
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}
