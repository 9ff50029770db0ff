//! Confusion matrix and classification metrics: accuracy, per-class and
//! aggregated precision/recall/F1.

use std::error::Error;
use std::fmt;

use serde::Serialize;

/// K×K counts; entry `(i, j)` is the number of samples with true class `i`
/// predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

/// Errors from metric computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// A prediction or label is outside `[0, K)`.
    IdOutOfRange { id: usize, k: usize },
    /// Metrics requested over zero samples.
    EmptyMatrix,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::IdOutOfRange { id, k } => {
                write!(f, "class id {id} out of range for {k} classes")
            }
            EvalError::EmptyMatrix => write!(f, "metrics over an empty confusion matrix"),
        }
    }
}

impl Error for EvalError {}

impl ConfusionMatrix {
    /// Accumulate `(predicted, true)` pairs. An empty input yields the zero
    /// matrix.
    pub fn from_pairs(pairs: &[(usize, usize)], k: usize) -> Result<ConfusionMatrix, EvalError> {
        let mut counts = vec![0u64; k * k];
        for &(pred, truth) in pairs {
            if pred >= k {
                return Err(EvalError::IdOutOfRange { id: pred, k });
            }
            if truth >= k {
                return Err(EvalError::IdOutOfRange { id: truth, k });
            }
            counts[truth * k + pred] += 1;
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Count of true class `i` predicted as `j`.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.k + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        (0..self.k).map(|j| self.get(i, j)).sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, j)).sum()
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "true\\pred")?;
        for j in 0..self.k {
            write!(f, "\t{j}")?;
        }
        writeln!(f)?;
        for i in 0..self.k {
            write!(f, "{i}")?;
            for j in 0..self.k {
                write!(f, "\t{}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-class metric triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Full metrics view. Per-class metrics with an undefined denominator are 0
/// by convention, so aggregates are always defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

/// Compute all metrics from a confusion matrix.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = cm.k();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.get(c, c);
        let col = cm.col_sum(c);
        let row = cm.row_sum(c);
        let precision = if col > 0 { tp as f64 / col as f64 } else { 0.0 };
        let recall = if row > 0 { tp as f64 / row as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: row,
        });
    }

    let kf = k as f64;
    let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / kf;
    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / kf;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / kf;

    let weighted = |get: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| get(m) * m.support as f64)
            .sum::<f64>()
            / total as f64
    };
    let weighted_precision = weighted(|m| m.precision);
    let weighted_recall = weighted(|m| m.recall);
    let weighted_f1 = weighted(|m| m.f1);

    let trace: u64 = (0..k).map(|c| cm.get(c, c)).sum();
    Ok(MetricsReport {
        accuracy: trace as f64 / total as f64,
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_precision,
        weighted_recall,
        weighted_f1,
    })
}

/// Expected accuracy of uniform random guessing over `k` classes.
pub fn random_baseline(k: usize) -> f64 {
    assert!(k >= 2, "baseline needs at least two classes");
    1.0 / k as f64
}

/// Render named reports as a fixed-width text table: macro precision,
/// recall, and F1 in whole percent, accuracy in percent with one decimal.
/// The averaging-mode ambiguity is called out in a footnote; the JSON report
/// carries both macro and weighted aggregates at full precision.
pub fn format_table(reports: &[(String, MetricsReport)]) -> String {
    assert!(
        !reports.is_empty(),
        "format_table needs at least one report"
    );
    let name_width = reports
        .iter()
        .map(|(name, _)| name.len())
        .chain(["Model".len()])
        .max()
        .unwrap();
    let mut out = String::new();
    out.push_str(&format!(
        "{:<name_width$}  {:>12}  {:>9}  {:>6}  {:>11}\n",
        "Model", "Precision(%)", "Recall(%)", "F1(%)", "Accuracy(%)"
    ));
    for (name, report) in reports {
        out.push_str(&format!(
            "{:<name_width$}  {:>12.0}  {:>9.0}  {:>6.0}  {:>11.1}\n",
            name,
            report.macro_precision * 100.0,
            report.macro_recall * 100.0,
            report.macro_f1 * 100.0,
            report.accuracy * 100.0
        ));
    }
    out.push_str(
        "Precision/recall/F1 are macro-averaged; weighted averages are in the JSON report.\n",
    );
    out
}

/// Serialize named reports as a JSON document with full precision.
pub fn reports_to_json(reports: &[(String, MetricsReport)]) -> String {
    #[derive(Serialize)]
    struct Entry<'a> {
        model: &'a str,
        metrics: &'a MetricsReport,
    }
    let entries: Vec<Entry> = reports
        .iter()
        .map(|(name, metrics)| Entry {
            model: name.as_str(),
            metrics,
        })
        .collect();
    let mut json = serde_json::to_string_pretty(&entries).expect("metrics serialize");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pairs_build_diagonal_matrix() {
        let pairs = vec![(0, 0), (1, 1), (2, 2), (1, 1)];
        let cm = ConfusionMatrix::from_pairs(&pairs, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(cm.get(i, j), 0);
                }
            }
        }
        assert_eq!(cm.get(1, 1), 2);
    }

    #[test]
    fn single_off_diagonal_entry() {
        let cm = ConfusionMatrix::from_pairs(&[(1, 0)], 2).unwrap();
        assert_eq!(cm.get(0, 1), 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(cm.get(0, 0) + cm.get(1, 0) + cm.get(1, 1), 0);
    }

    #[test]
    fn empty_input_is_the_zero_matrix() {
        let cm = ConfusionMatrix::from_pairs(&[], 4).unwrap();
        assert_eq!(cm.total(), 0);
    }

    #[test]
    fn out_of_range_ids_rejected() {
        assert_eq!(
            ConfusionMatrix::from_pairs(&[(2, 0)], 2).unwrap_err(),
            EvalError::IdOutOfRange { id: 2, k: 2 }
        );
    }

    #[test]
    fn worked_two_class_example() {
        // cm = [[2,0],[1,1]]: accuracy 0.75; class0 P=2/3 R=1 F1=0.8;
        // class1 P=1 R=0.5 F1=2/3; macro-F1 = 11/15.
        let pairs = vec![(0, 0), (0, 0), (0, 1), (1, 1)];
        let cm = ConfusionMatrix::from_pairs(&pairs, 2).unwrap();
        assert_eq!(cm.get(0, 0), 2);
        assert_eq!(cm.get(1, 0), 1);
        assert_eq!(cm.get(1, 1), 1);
        let m = compute_metrics(&cm).unwrap();
        assert!((m.accuracy - 0.75).abs() < 1e-12);
        assert!((m.per_class[0].precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.per_class[0].recall - 1.0).abs() < 1e-12);
        assert!((m.per_class[0].f1 - 0.8).abs() < 1e-12);
        assert!((m.per_class[1].precision - 1.0).abs() < 1e-12);
        assert!((m.per_class[1].recall - 0.5).abs() < 1e-12);
        assert!((m.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let pairs: Vec<(usize, usize)> = (0..4).map(|c| (c, c)).collect();
        let cm = ConfusionMatrix::from_pairs(&pairs, 4).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.weighted_f1, 1.0);
    }

    #[test]
    fn absent_class_scores_zero_by_convention() {
        // Class 2 never appears as truth or prediction among K=3.
        let pairs = vec![(0, 0), (1, 1), (0, 1)];
        let cm = ConfusionMatrix::from_pairs(&pairs, 3).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.per_class[2].precision, 0.0);
        assert_eq!(m.per_class[2].recall, 0.0);
        assert_eq!(m.per_class[2].f1, 0.0);
        assert!(m.macro_f1 < m.weighted_f1);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let cm = ConfusionMatrix::from_pairs(&[], 2).unwrap();
        assert_eq!(compute_metrics(&cm).unwrap_err(), EvalError::EmptyMatrix);
    }

    #[test]
    fn baseline_values() {
        assert!((random_baseline(7) - 0.142857).abs() < 5e-7);
        assert_eq!(random_baseline(2), 0.5);
        assert_eq!(random_baseline(100), 0.01);
    }

    #[test]
    fn table_row_matches_reference_formatting() {
        let report = MetricsReport {
            accuracy: 0.832,
            per_class: vec![],
            macro_precision: 0.84,
            macro_recall: 0.83,
            macro_f1: 0.83,
            weighted_precision: 0.84,
            weighted_recall: 0.83,
            weighted_f1: 0.83,
        };
        let table = format_table(&[("srnn".to_string(), report)]);
        let row = table.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(fields, vec!["srnn", "84", "83", "83", "83.2"]);
    }

    #[test]
    fn perfect_table_row() {
        let report = MetricsReport {
            accuracy: 1.0,
            per_class: vec![],
            macro_precision: 1.0,
            macro_recall: 1.0,
            macro_f1: 1.0,
            weighted_precision: 1.0,
            weighted_recall: 1.0,
            weighted_f1: 1.0,
        };
        let table = format_table(&[("m".to_string(), report)]);
        let fields: Vec<&str> = table.lines().nth(1).unwrap().split_whitespace().collect();
        assert_eq!(fields, vec!["m", "100", "100", "100", "100.0"]);
    }

    #[test]
    fn models_render_in_insertion_order() {
        let mk = |acc: f64| MetricsReport {
            accuracy: acc,
            per_class: vec![],
            macro_precision: acc,
            macro_recall: acc,
            macro_f1: acc,
            weighted_precision: acc,
            weighted_recall: acc,
            weighted_f1: acc,
        };
        let table = format_table(&[
            ("zeta".to_string(), mk(0.5)),
            ("alpha".to_string(), mk(0.6)),
        ]);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[1].starts_with("zeta"));
        assert!(lines[2].starts_with("alpha"));
    }

    #[test]
    fn macro_metrics_invariant_under_relabeling() {
        let pairs = vec![(0, 0), (1, 2), (2, 2), (0, 1), (1, 1), (2, 0)];
        let cm = ConfusionMatrix::from_pairs(&pairs, 3).unwrap();
        let m = compute_metrics(&cm).unwrap();
        // Relabel classes by the permutation 0→2, 1→0, 2→1.
        let perm = [2usize, 0, 1];
        let permuted: Vec<(usize, usize)> =
            pairs.iter().map(|&(p, t)| (perm[p], perm[t])).collect();
        let pm = compute_metrics(&ConfusionMatrix::from_pairs(&permuted, 3).unwrap()).unwrap();
        assert!((m.macro_precision - pm.macro_precision).abs() < 1e-15);
        assert!((m.macro_recall - pm.macro_recall).abs() < 1e-15);
        assert!((m.macro_f1 - pm.macro_f1).abs() < 1e-15);
        assert!((m.accuracy - pm.accuracy).abs() < 1e-15);
    }
}
