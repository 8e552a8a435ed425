//! Classification and acquisition metrics.
//!
//! Class-averaged metrics (balanced accuracy, balanced MAE) average over
//! the classes actually present in the evaluation set; absent classes are
//! dropped from the average and reported so downstream consumers can flag
//! them rather than silently diluting the score.

use serde::{Deserialize, Serialize};

use crate::study::Label;

/// Metrics of one labeled prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub n: usize,
    pub accuracy: f64,
    /// Mean per-class recall over present classes.
    pub balanced_accuracy: f64,
    /// Support-weighted mean of per-class F1 scores.
    pub f1_weighted: f64,
    /// Mean per-class mean absolute label error over present classes.
    pub balanced_mae: f64,
    /// Recall per class; `None` for absent classes.
    pub per_class_recall: Vec<Option<f64>>,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    /// Classes with zero support, excluded from the class averages.
    pub absent_classes: Vec<usize>,
}

pub fn classification_metrics(
    y_true: &[Label],
    y_pred: &[Label],
    n_classes: usize,
) -> ClassificationMetrics {
    assert_eq!(y_true.len(), y_pred.len());
    assert!(!y_true.is_empty(), "metrics of an empty prediction set");
    let n = y_true.len();
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut abs_err_sum = vec![0.0f64; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let (t, p) = (t as usize, p as usize);
        assert!(t < n_classes && p < n_classes, "label out of range");
        confusion[t][p] += 1;
        abs_err_sum[t] += (p as f64 - t as f64).abs();
    }

    let mut correct = 0usize;
    let mut recall_sum = 0.0;
    let mut mae_sum = 0.0;
    let mut f1_weighted = 0.0;
    let mut present = 0usize;
    let mut per_class_recall = Vec::with_capacity(n_classes);
    let mut absent_classes = Vec::new();
    for c in 0..n_classes {
        let support: usize = confusion[c].iter().sum();
        let tp = confusion[c][c];
        correct += tp;
        if support == 0 {
            absent_classes.push(c);
            per_class_recall.push(None);
            continue;
        }
        present += 1;
        let fp: usize = (0..n_classes).filter(|&t| t != c).map(|t| confusion[t][c]).sum();
        let fn_ = support - tp;
        let recall = tp as f64 / support as f64;
        per_class_recall.push(Some(recall));
        recall_sum += recall;
        mae_sum += abs_err_sum[c] / support as f64;
        let f1 = 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64);
        f1_weighted += support as f64 / n as f64 * f1;
    }

    ClassificationMetrics {
        n,
        accuracy: correct as f64 / n as f64,
        balanced_accuracy: recall_sum / present as f64,
        f1_weighted,
        balanced_mae: mae_sum / present as f64,
        per_class_recall,
        confusion,
        absent_classes,
    }
}

/// Convenience wrapper when only the headline number is needed.
pub fn balanced_accuracy(y_true: &[Label], y_pred: &[Label], n_classes: usize) -> f64 {
    classification_metrics(y_true, y_pred, n_classes).balanced_accuracy
}

/// How many slots a policy acquired, summarized over episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionStats {
    pub n_episodes: usize,
    pub n_slots: usize,
    /// Mean number of acquired slots per episode.
    pub mean_count: f64,
    /// `mean_count` divided by the number of slots.
    pub mean_ratio: f64,
    /// `histogram[k]` counts episodes that acquired exactly `k` slots.
    pub histogram: Vec<usize>,
}

pub fn acquisition_stats(counts: &[usize], n_slots: usize) -> AcquisitionStats {
    assert!(!counts.is_empty(), "stats of an empty episode set");
    let mut histogram = vec![0usize; n_slots + 1];
    let mut sum = 0usize;
    for &c in counts {
        assert!(c <= n_slots, "acquired {c} of {n_slots} slots");
        histogram[c] += 1;
        sum += c;
    }
    let mean_count = sum as f64 / counts.len() as f64;
    AcquisitionStats {
        n_episodes: counts.len(),
        n_slots,
        mean_count,
        mean_ratio: mean_count / n_slots as f64,
        histogram,
    }
}

/// Mean and (population) standard deviation of a sample.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_match_hand_computed_case() {
        // Worked example, all values derived by hand from the confusion
        // matrix: recalls 1/2, 2/3, 1; every F1 equals 2/3; per-class MAEs
        // are 1/2, 1/3, 0.
        let y_true = [0, 0, 1, 1, 1, 2];
        let y_pred = [0, 1, 1, 1, 2, 2];
        let m = classification_metrics(&y_true, &y_pred, 3);
        assert_eq!(m.n, 6);
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-12);
        assert!((m.balanced_accuracy - 13.0 / 18.0).abs() < 1e-12);
        assert!((m.f1_weighted - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.balanced_mae - 5.0 / 18.0).abs() < 1e-12);
        assert_eq!(m.confusion, vec![vec![1, 1, 0], vec![0, 2, 1], vec![0, 0, 1]]);
        assert_eq!(m.per_class_recall[0], Some(0.5));
        assert!(m.absent_classes.is_empty());
    }

    #[test]
    fn absent_classes_are_dropped_and_reported() {
        let y_true = [0, 0, 2];
        let y_pred = [0, 2, 2];
        let m = classification_metrics(&y_true, &y_pred, 3);
        assert_eq!(m.absent_classes, vec![1]);
        assert_eq!(m.per_class_recall[1], None);
        assert!((m.balanced_accuracy - 0.75).abs() < 1e-12);
        assert!((m.balanced_mae - 0.5).abs() < 1e-12);
        assert!((m.f1_weighted - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let y = [0, 1, 2, 1, 0];
        let m = classification_metrics(&y, &y, 3);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.balanced_accuracy, 1.0);
        assert_eq!(m.f1_weighted, 1.0);
        assert_eq!(m.balanced_mae, 0.0);
    }

    #[test]
    fn balanced_accuracy_ignores_class_imbalance() {
        // 90 of class 0 all correct, 10 of class 1 all wrong: plain
        // accuracy 0.9 but balanced accuracy 0.5.
        let mut y_true = vec![0u8; 90];
        y_true.extend(vec![1u8; 10]);
        let y_pred = vec![0u8; 100];
        let m = classification_metrics(&y_true, &y_pred, 3);
        assert!((m.accuracy - 0.9).abs() < 1e-12);
        assert!((m.balanced_accuracy - 0.5).abs() < 1e-12);
        assert_eq!(m.absent_classes, vec![2]);
    }

    #[test]
    fn acquisition_stats_match_hand_computation() {
        let stats = acquisition_stats(&[0, 4, 2, 2], 4);
        assert_eq!(stats.mean_count, 2.0);
        assert_eq!(stats.mean_ratio, 0.5);
        assert_eq!(stats.histogram, vec![1, 0, 2, 0, 1]);
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let (mean, std) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((mean - 2.5).abs() < 1e-12);
        assert!((std - 1.25f64.sqrt()).abs() < 1e-12);
        let (m1, s1) = mean_std(&[7.0]);
        assert_eq!((m1, s1), (7.0, 0.0));
    }
}
