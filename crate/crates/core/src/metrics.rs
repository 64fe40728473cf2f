//! Confusion matrices and per-class precision / recall / F1 reports.
//!
//! Per class `c`, counts are one-vs-rest: `TP = cm[c][c]`, `FP` is the rest
//! of column `c`, `FN` the rest of row `c`. Any ratio whose denominator is
//! zero is reported as 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rows are ground truth, columns are predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) -> Result<()> {
        let n = self.n_classes;
        if truth >= n || pred >= n {
            return Err(Error::Argument(format!(
                "label pair ({truth}, {pred}) out of range for {n} classes"
            )));
        }
        self.counts[truth * n + pred] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, c)).sum()
    }

    /// Integer CSV, one row per ground-truth class, with a header naming
    /// the predicted classes.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut s = String::from("truth\\pred");
        for name in class_names {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for t in 0..self.n_classes {
            s.push_str(class_names.get(t).map(String::as_str).unwrap_or(""));
            for p in 0..self.n_classes {
                let _ = write!(s, ",{}", self.get(t, p));
            }
            s.push('\n');
        }
        s
    }
}

/// Tallies `(ground_truth, prediction)` pairs.
pub fn confusion_matrix(ground_truths: &[usize], predictions: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if ground_truths.len() != predictions.len() {
        return Err(Error::Argument(format!(
            "{} ground truths but {} predictions",
            ground_truths.len(),
            predictions.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(n_classes);
    for (&t, &p) in ground_truths.iter().zip(predictions) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth count.
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassScores>,
    pub accuracy: f64,
    pub macro_avg: ClassScores,
    pub weighted_avg: ClassScores,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument("classification report of an empty confusion matrix".into()));
    }
    let per_class: Vec<ClassScores> = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            ClassScores {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();
    let n = per_class.len() as f64;
    let avg = |weight: &dyn Fn(&ClassScores) -> f64, norm: f64| ClassScores {
        precision: per_class.iter().map(|s| weight(s) * s.precision).sum::<f64>() / norm,
        recall: per_class.iter().map(|s| weight(s) * s.recall).sum::<f64>() / norm,
        f1: per_class.iter().map(|s| weight(s) * s.f1).sum::<f64>() / norm,
        support: total,
    };
    let macro_avg = avg(&|_| 1.0, n);
    let weighted_avg = avg(&|s| s.support as f64, total as f64);
    Ok(ClassificationReport {
        accuracy: ratio(cm.trace(), total),
        per_class,
        macro_avg,
        weighted_avg,
    })
}

impl ClassificationReport {
    /// Full-precision CSV: one row per class, then accuracy, macro and
    /// weighted rows.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut s = String::from("class,precision,recall,f1_score,support\n");
        for (i, c) in self.per_class.iter().enumerate() {
            let name = class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
            let _ = writeln!(s, "{name},{},{},{},{}", c.precision, c.recall, c.f1, c.support);
        }
        let total = self.macro_avg.support;
        let _ = writeln!(s, "accuracy,,,{},{total}", self.accuracy);
        for (label, a) in [("macro_avg", &self.macro_avg), ("weighted_avg", &self.weighted_avg)] {
            let _ = writeln!(s, "{label},{},{},{},{}", a.precision, a.recall, a.f1, a.support);
        }
        s
    }

    /// Aligned text table with two decimals.
    pub fn to_text(&self, class_names: &[String]) -> String {
        let width = class_names
            .iter()
            .map(|n| n.len())
            .chain([12])
            .max()
            .unwrap_or(12);
        let mut s = String::new();
        let _ = writeln!(s, "{:>width$} {:>9} {:>9} {:>9} {:>9}", "", "Precision", "Recall", "F1 Score", "Support");
        let _ = writeln!(s);
        for (i, c) in self.per_class.iter().enumerate() {
            let name = class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
            let _ = writeln!(
                s,
                "{name:>width$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                c.precision, c.recall, c.f1, c.support
            );
        }
        let _ = writeln!(s);
        let total = self.macro_avg.support;
        let _ = writeln!(s, "{:>width$} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, total);
        for (label, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{label:>width$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                a.precision, a.recall, a.f1, a.support
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn diagonal_when_all_correct() {
        let labels = [0, 1, 2, 2, 1];
        let cm = confusion_matrix(&labels, &labels, 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                if t != p {
                    assert_eq!(cm.get(t, p), 0);
                }
            }
        }
        assert_eq!(cm.trace(), 5);
    }

    #[test]
    fn hand_counted_example() {
        let cm = confusion_matrix(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!((cm.get(0, 0), cm.get(0, 1), cm.get(1, 0), cm.get(1, 1)), (1, 1, 0, 1));
    }

    #[test]
    fn empty_and_bad_inputs() {
        let cm = confusion_matrix(&[], &[], 4).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(report(&cm), Err(Error::Argument(_))));
        assert!(matches!(confusion_matrix(&[0], &[], 2), Err(Error::Argument(_))));
        assert!(matches!(confusion_matrix(&[0], &[2], 2), Err(Error::Argument(_))));
    }

    #[test]
    fn single_class_perfect() {
        let r = report(&confusion_matrix(&[0, 0, 0], &[0, 0, 0], 1).unwrap()).unwrap();
        let c = r.per_class[0];
        assert_eq!((c.precision, c.recall, c.f1, r.accuracy), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn binary_worked_example() {
        // class 0: TP = 1, FP = 1, FN = 0
        let r = report(&confusion_matrix(&[0, 1], &[0, 0], 2).unwrap()).unwrap();
        let c = r.per_class[0];
        assert_abs_diff_eq!(c.precision, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.recall, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.f1, 2.0 * 0.5 / 1.5, epsilon = 1e-12);
        // class 1 is never predicted: zero-division gives 0
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.per_class[1].f1, 0.0);
    }

    #[test]
    fn coarse_layout_text() {
        let names: Vec<String> = ["Vegetation", "Urban", "WaterBodies"].map(String::from).to_vec();
        let r = report(&confusion_matrix(&[0, 1, 2, 2], &[0, 1, 2, 1], 3).unwrap()).unwrap();
        let text = r.to_text(&names);
        let header = text.lines().next().unwrap();
        let (p, rc, f) = (
            header.find("Precision").unwrap(),
            header.find("Recall").unwrap(),
            header.find("F1 Score").unwrap(),
        );
        assert!(p < rc && rc < f);
        assert!(text.contains("macro avg") && text.contains("weighted avg") && text.contains("accuracy"));
        let csv = r.to_csv(&names);
        assert_eq!(csv.lines().count(), 1 + 3 + 3);
        assert!(csv.contains("WaterBodies,1,0.5,"));
    }

    #[test]
    fn weighted_average_uses_support() {
        let r = report(&confusion_matrix(&[0, 0, 0, 1], &[0, 0, 0, 0], 2).unwrap()).unwrap();
        let expected = (3.0 * r.per_class[0].recall + r.per_class[1].recall) / 4.0;
        assert_abs_diff_eq!(r.weighted_avg.recall, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(r.macro_avg.recall, 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn f1_between_precision_and_recall(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200)) {
            let (t, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&t, &p, 4).unwrap();
            let r = report(&cm).unwrap();
            prop_assert!((r.accuracy - cm.trace() as f64 / cm.total() as f64).abs() < 1e-15);
            for c in &r.per_class {
                for v in [c.precision, c.recall, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                let (lo, hi) = (c.precision.min(c.recall), c.precision.max(c.recall));
                if lo > 0.0 {
                    prop_assert!(c.f1 >= lo - 1e-15 && c.f1 <= hi + 1e-15);
                }
                if c.precision == c.recall {
                    prop_assert!((c.f1 - c.precision).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn permuting_classes_permutes_rows(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..100)) {
            let perm = [2usize, 0, 1];
            let (t, p): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let (tp, pp): (Vec<_>, Vec<_>) = pairs.iter().map(|&(a, b)| (perm[a], perm[b])).unzip();
            let r = report(&confusion_matrix(&t, &p, 3).unwrap()).unwrap();
            let rp = report(&confusion_matrix(&tp, &pp, 3).unwrap()).unwrap();
            for c in 0..3 {
                prop_assert_eq!(r.per_class[c], rp.per_class[perm[c]]);
            }
            prop_assert_eq!(r.accuracy, rp.accuracy);
        }
    }
}
