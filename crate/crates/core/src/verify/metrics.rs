//! Confusion-matrix bookkeeping for the genuine-vs-forged decision.
//!
//! The positive class is "genuine". A model output of at least 0.5 counts as
//! a genuine prediction.

/// Decision threshold on the logistic output.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Confusion counts plus the derived rates. Rates with an empty denominator
/// are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Metrics {
        Metrics {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
        }
    }

    /// Tallies predictions against labels; `probs[i] >= 0.5` predicts genuine.
    pub fn from_predictions(labels: &[bool], probs: &[f64]) -> Metrics {
        assert_eq!(labels.len(), probs.len(), "label/probability length mismatch");
        let mut m = Metrics::from_counts(0, 0, 0, 0);
        for (&genuine, &p) in labels.iter().zip(probs) {
            let predicted_genuine = p >= DECISION_THRESHOLD;
            match (genuine, predicted_genuine) {
                (true, true) => m.true_positives += 1,
                (false, true) => m.false_positives += 1,
                (true, false) => m.false_negatives += 1,
                (false, false) => m.true_negatives += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.true_positives + self.true_negatives) as f64 / total as f64
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            return 0.0;
        }
        2.0 * p * r / (p + r)
    }

    /// Merges counts from another batch.
    pub fn add(&mut self, other: &Metrics) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.true_negatives += other.true_negatives;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_arithmetic() {
        let m = Metrics::from_counts(3, 1, 1, 5);
        assert_eq!(m.total(), 10);
        assert!((m.accuracy() - 0.8).abs() < 1e-15);
        assert!((m.precision() - 0.75).abs() < 1e-15);
        assert!((m.recall() - 0.75).abs() < 1e-15);
        assert!((m.f1() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn f1_is_the_harmonic_mean_of_precision_and_recall() {
        for (tp, fp, fn_, tn) in [(3, 1, 1, 5), (10, 0, 0, 10), (1, 2, 3, 4), (7, 3, 2, 0)] {
            let m = Metrics::from_counts(tp, fp, fn_, tn);
            let (p, r) = (m.precision(), m.recall());
            let harmonic = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            assert!((m.f1() - harmonic).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_denominators_give_zero_not_nan() {
        // No genuine predictions at all: precision denominator is 0.
        let m = Metrics::from_counts(0, 0, 2, 3);
        assert_eq!(m.precision(), 0.0);
        assert_eq!(m.f1(), 0.0);
        assert!((m.recall() - 0.0).abs() < 1e-15);
        // No samples at all.
        let empty = Metrics::from_counts(0, 0, 0, 0);
        assert_eq!(empty.accuracy(), 0.0);
    }

    #[test]
    fn threshold_is_inclusive_at_half() {
        let m = Metrics::from_predictions(&[true, false], &[0.5, 0.4999]);
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.true_negatives, 1);
    }

    #[test]
    fn prediction_tally() {
        let labels = [true, true, false, false, true];
        let probs = [0.9, 0.2, 0.7, 0.1, 0.6];
        let m = Metrics::from_predictions(&labels, &probs);
        assert_eq!(
            (m.true_positives, m.false_positives, m.false_negatives, m.true_negatives),
            (2, 1, 1, 1)
        );
    }

    #[test]
    fn batch_merge_matches_single_pass() {
        let labels = [true, false, true, false, false, true];
        let probs = [0.8, 0.3, 0.45, 0.55, 0.2, 0.9];
        let whole = Metrics::from_predictions(&labels, &probs);
        let mut merged = Metrics::from_predictions(&labels[..3], &probs[..3]);
        merged.add(&Metrics::from_predictions(&labels[3..], &probs[3..]));
        assert_eq!(whole, merged);
    }
}
