//! K-fold cross-validation, ROC curves, AUC, and best-threshold accuracy.
//!
//! Thresholds select on training folds only; the held-out fold sees the
//! frozen threshold. Accuracies are reported in percent.

use crate::error::{Error, Result};
use crate::pairs::{Dataset, PairSet};
use crate::parallel::ordered_map;
use crate::scoring::{score_pairs, ScoredPair};
use crate::wccn::{fit_pipeline, Method, PipelineConfig};

/// One point of the ROC curve; prediction rule is `score >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve with trapezoidal AUC and the accuracy-maximizing threshold.
#[derive(Debug, Clone)]
pub struct RocCurve {
    /// Ordered by descending threshold, from (0,0) to (1,1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub best_threshold: f64,
    /// Accuracy at `best_threshold`, as a fraction in [0, 1].
    pub best_accuracy: f64,
}

/// Per-fold evaluation outcome.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: u32,
    /// Held-out accuracy in percent.
    pub accuracy: f64,
    /// Threshold chosen on the training folds.
    pub threshold: f64,
    /// ROC over the held-out fold's scores.
    pub roc: RocCurve,
    pub test_scores: Vec<ScoredPair>,
}

/// Cross-validation report for one method.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub method: Method,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of the per-fold accuracies, in percent.
    pub mean_accuracy: f64,
}

fn class_counts(scored: &[ScoredPair]) -> Result<(usize, usize)> {
    let pos = scored.iter().filter(|s| s.label).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Builds the ROC curve: thresholds are the distinct score values plus a
/// leading sentinel; tied scores collapse into one step; AUC by the
/// trapezoidal rule.
pub fn roc_curve(scored: &[ScoredPair]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(scored)?;
    let mut order: Vec<&ScoredPair> = scored.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = order[i].score;
        while i < order.len() && order[i].score == score {
            if order[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: score,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5;
    }

    let (best_threshold, best_accuracy) = best_threshold_accuracy(scored)?;
    Ok(RocCurve {
        points,
        auc,
        best_threshold,
        best_accuracy,
    })
}

/// Maximizes (TP+TN)/total over candidate thresholds: midpoints between
/// adjacent distinct scores plus the two infinities, prediction rule
/// `score >= threshold`. Ties pick the smallest threshold. Returns
/// `(threshold, accuracy)` with accuracy as a fraction.
pub fn best_threshold_accuracy(scored: &[ScoredPair]) -> Result<(f64, f64)> {
    let (pos, _neg) = class_counts(scored)?;
    let total = scored.len() as f64;
    let mut order: Vec<&ScoredPair> = scored.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score));

    // ascending candidates; replace only on strictly better accuracy so
    // ties keep the smallest threshold
    let mut best_t = f64::NEG_INFINITY;
    let mut best_correct = pos; // everything predicted positive
    let mut neg_below = 0usize;
    let mut pos_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = order[i].score;
        while i < order.len() && order[i].score == score {
            if order[i].label {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let t = if i < order.len() {
            (score + order[i].score) / 2.0
        } else {
            f64::INFINITY
        };
        // predicted positive iff score >= t: everything after index i
        let correct = neg_below + (pos - pos_below);
        if correct > best_correct {
            best_correct = correct;
            best_t = t;
        }
    }
    Ok((best_t, best_correct as f64 / total))
}

/// Accuracy (fraction) of the rule `score >= threshold` on a scored set.
pub fn accuracy_at(scored: &[ScoredPair], threshold: f64) -> f64 {
    let correct = scored
        .iter()
        .filter(|s| (s.score >= threshold) == s.label)
        .count();
    correct as f64 / scored.len() as f64
}

/// Runs K-fold cross-validation for one method: fit on the pairs outside
/// fold f, select the threshold on the training scores, report held-out
/// accuracy; folds evaluate independently (in parallel when enabled).
pub fn kfold_evaluate(
    ds: &Dataset,
    pairs: &PairSet,
    method: Method,
    cfg: &PipelineConfig,
    k: u32,
) -> Result<CvReport> {
    pairs.validate_folds(k)?;
    let fold_ids: Vec<u32> = (1..=k).collect();
    let folds: Vec<FoldResult> = ordered_map(&fold_ids, |&fold| -> Result<FoldResult> {
        let (train_pos, train_neg) = pairs.training_split(fold);
        let model = fit_pipeline(method, ds, &train_pos, &train_neg, cfg)?;
        let scored = score_pairs(&model, ds, pairs)?;
        let train: Vec<ScoredPair> = scored.iter().filter(|s| s.fold != fold).cloned().collect();
        let test: Vec<ScoredPair> = scored.into_iter().filter(|s| s.fold == fold).collect();
        let (threshold, _) = best_threshold_accuracy(&train)?;
        let accuracy = accuracy_at(&test, threshold) * 100.0;
        let roc = roc_curve(&test)?;
        Ok(FoldResult {
            fold,
            accuracy,
            threshold,
            roc,
            test_scores: test,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mean_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        method,
        folds,
        mean_accuracy,
    })
}
