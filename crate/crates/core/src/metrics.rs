//! Ranking metrics. Scores are on a higher-is-more-relevant scale; `-inf`
//! is a legal score (trivial pairs) and ties are resolved by mean rank.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite {
            context: "ranking scores",
            pair: None,
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// 1-based ascending ranks; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j
        let mean = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = mean;
        }
        i = j;
    }
    ranks
}

/// Mann-Whitney ROC-AUC; a tied positive/negative pair counts one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(format!("ROC-AUC needs both classes ({pos} positive, {neg} negative)")));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Average precision: precision summed over recall increments, sweeping
/// thresholds from the highest score down with each tie block as one step.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::Metric("AUPRC needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(core::cmp::Ordering::Equal));
    let (mut tp, mut seen, mut area, mut last_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            tp += usize::from(labels[order[j]]);
            j += 1;
        }
        seen += j - i;
        let recall = tp as f64 / pos as f64;
        area += (recall - last_recall) * (tp as f64 / seen as f64);
        last_recall = recall;
        i = j;
    }
    Ok(area)
}

/// Mean rank (1 = best) of the single positive.
pub fn relevant_rank(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos != 1 {
        return Err(Error::Metric(format!(
            "reciprocal rank needs exactly one relevant pair, found {pos}; use ROC-AUC or AUPRC"
        )));
    }
    let i = labels.iter().position(|&l| l).unwrap();
    let x = scores[i];
    let above = scores.iter().filter(|&&s| s > x).count();
    let tied = scores.iter().filter(|&&s| s == x).count();
    Ok(above as f64 + (1 + tied) as f64 / 2.0)
}

pub fn reciprocal_rank(scores: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(1.0 / relevant_rank(scores, labels)?)
}

/// Mean of reciprocal ranks.
pub fn mrr(ranks: &[f64]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("no ranks"));
    }
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

/// Averaging scheme across sub-tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Unweighted.
    Uniform,
    /// Weighted by relevant-pair count.
    Relevant,
    /// Weighted by candidate-pair count.
    Total,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Uniform, Scheme::Relevant, Scheme::Total];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Uniform => "uni",
            Scheme::Relevant => "rel",
            Scheme::Total => "tot",
        }
    }
}

/// Weighted mean of per-sub-task values. `relevant` and `total` give each
/// sub-task's pair counts. Computed around the first value, so identical
/// inputs average to exactly that value.
pub fn aggregate(values: &[f64], relevant: &[usize], total: &[usize], scheme: Scheme) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("no sub-tasks to aggregate"));
    }
    if relevant.len() != values.len() || total.len() != values.len() {
        return Err(Error::Dimension("aggregate inputs differ in length".into()));
    }
    let weights: Vec<f64> = match scheme {
        Scheme::Uniform => vec![1.0; values.len()],
        Scheme::Relevant => relevant.iter().map(|&r| r as f64).collect(),
        Scheme::Total => total.iter().map(|&t| t as f64).collect(),
    };
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::Metric("aggregation weights sum to zero".into()));
    }
    let v0 = values[0];
    Ok(v0 + values.iter().zip(&weights).map(|(v, w)| (v - v0) * w).sum::<f64>() / wsum)
}

/// Spearman rank correlation with mean ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Dimension("spearman needs two equal-length samples of size >= 2".into()));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Metric("spearman undefined for a constant sample".into()));
    }
    Ok(sab / sqrt(saa * sbb))
}
