//! Confusion matrices, accuracy, per-class and averaged F1, and
//! model-by-variant comparison reports.
//!
//! Undefined precision, recall, or F1 (zero denominator) is reported as 0.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{class_labels, label_sets, DatasetVariant, LabeledInstance};
use crate::solvers::SolverId;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("predictions do not match the {0:?} layout")]
    VariantMismatch(DatasetVariant),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    /// True instances of class `c`.
    pub fn support(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.get(c, p)).sum()
    }

    pub fn predicted(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.classes.max(1)).map(<[u64]>::to_vec).collect()
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= classes {
                return Err(MetricsError::LabelOutOfRange { label, classes });
            }
        }
        cm.counts[t * classes + p] += 1;
    }
    Ok(cm)
}

fn ratio<T: Scalar>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num as usize) / T::from_count(den as usize)
    }
}

fn nonempty(cm: &ConfusionMatrix) -> Result<(), MetricsError> {
    if cm.total() == 0 {
        Err(MetricsError::EmptyMatrix)
    } else {
        Ok(())
    }
}

pub fn accuracy<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, MetricsError> {
    nonempty(cm)?;
    Ok(ratio(cm.trace(), cm.total()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

pub fn per_class_f1<T: Scalar>(cm: &ConfusionMatrix) -> Result<Vec<ClassScores<T>>, MetricsError> {
    nonempty(cm)?;
    Ok((0..cm.classes)
        .map(|c| {
            let tp = cm.get(c, c);
            let precision: T = ratio(tp, cm.predicted(c));
            let recall: T = ratio(tp, cm.support(c));
            let sum = precision + recall;
            let f1 = if sum == T::zero() {
                T::zero()
            } else {
                T::lit(2.0) * precision * recall / sum
            };
            ClassScores { precision, recall, f1 }
        })
        .collect())
}

pub fn macro_f1<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, MetricsError> {
    let scores = per_class_f1::<T>(cm)?;
    Ok(scores.iter().map(|s| s.f1).sum::<T>() / T::from_count(cm.classes))
}

/// Support-weighted mean of per-class F1. With equal supports this is the
/// macro average, returned as the identical value.
pub fn weighted_f1<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, MetricsError> {
    let scores = per_class_f1::<T>(cm)?;
    let supports: Vec<u64> = (0..cm.classes).map(|c| cm.support(c)).collect();
    if supports.windows(2).all(|w| w[0] == w[1]) {
        return macro_f1(cm);
    }
    let total = T::from_count(cm.total() as usize);
    Ok(scores
        .iter()
        .zip(&supports)
        .map(|(s, &n)| T::from_count(n as usize) * s.f1)
        .sum::<T>()
        / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MetricReport<T> {
    pub accuracy: T,
    pub per_class: Vec<ClassScores<T>>,
    pub macro_f1: T,
    pub weighted_f1: T,
    pub support: Vec<u64>,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

impl<T: Scalar> MetricReport<T> {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self, MetricsError> {
        Ok(Self {
            accuracy: accuracy(&cm)?,
            per_class: per_class_f1(&cm)?,
            macro_f1: macro_f1(&cm)?,
            weighted_f1: weighted_f1(&cm)?,
            support: (0..cm.classes).map(|c| cm.support(c)).collect(),
            total: cm.total(),
            confusion: cm,
        })
    }

    pub fn from_labels(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Self, MetricsError> {
        Self::from_confusion(confusion(y_true, y_pred, classes)?)
    }
}

/// Ground truth or predictions in the layout of a dataset variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// One solver index per row (Method1, Method2).
    Single(Vec<usize>),
    /// Solver membership per row (Method3).
    Sets(Vec<[bool; 4]>),
}

impl Labels {
    /// Ground truth of labeled instances: the first winner for single-label
    /// variants, the winner set for Method3.
    pub fn truth<T: Scalar>(data: &[LabeledInstance<T>], variant: DatasetVariant) -> Self {
        match variant {
            DatasetVariant::Method3 => Labels::Sets(label_sets(data)),
            _ => Labels::Single(class_labels(data)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Single(v) => v.len(),
            Labels::Sets(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Headline metrics for one model on one variant's test split.
///
/// Method3 headline: accuracy is exact set match, macro F1 averages the
/// positive-class F1 of the four labels, weighted F1 weights them by
/// positive support. `per_label` holds the four binary reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VariantReport<T> {
    pub model: String,
    pub variant: DatasetVariant,
    pub accuracy: T,
    pub macro_f1: T,
    pub weighted_f1: T,
    pub multiclass: Option<MetricReport<T>>,
    pub per_label: Vec<MetricReport<T>>,
}

pub fn evaluate_variant<T: Scalar>(
    model: &str,
    variant: DatasetVariant,
    truth: &Labels,
    pred: &Labels,
) -> Result<VariantReport<T>, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    match (variant, truth, pred) {
        (DatasetVariant::Method1 | DatasetVariant::Method2, Labels::Single(t), Labels::Single(p)) => {
            let r = MetricReport::from_labels(t, p, SolverId::ALL.len())?;
            Ok(VariantReport {
                model: model.to_owned(),
                variant,
                accuracy: r.accuracy,
                macro_f1: r.macro_f1,
                weighted_f1: r.weighted_f1,
                multiclass: Some(r),
                per_label: Vec::new(),
            })
        }
        (DatasetVariant::Method3, Labels::Sets(t), Labels::Sets(p)) => {
            if t.is_empty() {
                return Err(MetricsError::EmptyMatrix);
            }
            let per_label = (0..4)
                .map(|l| {
                    let bt: Vec<usize> = t.iter().map(|s| s[l] as usize).collect();
                    let bp: Vec<usize> = p.iter().map(|s| s[l] as usize).collect();
                    MetricReport::from_labels(&bt, &bp, 2)
                })
                .collect::<Result<Vec<MetricReport<T>>, _>>()?;
            let exact = t.iter().zip(p).filter(|(a, b)| a == b).count();
            let f1: Vec<T> = per_label.iter().map(|r| r.per_class[1].f1).collect();
            let pos: Vec<u64> = per_label.iter().map(|r| r.support[1]).collect();
            let macro_f1 = f1.iter().copied().sum::<T>() / T::from_count(4);
            let pos_total: u64 = pos.iter().sum();
            let weighted_f1 = if pos.windows(2).all(|w| w[0] == w[1]) {
                macro_f1
            } else {
                f1.iter().zip(&pos).map(|(&f, &n)| T::from_count(n as usize) * f).sum::<T>()
                    / T::from_count(pos_total as usize)
            };
            Ok(VariantReport {
                model: model.to_owned(),
                variant,
                accuracy: ratio(exact as u64, t.len() as u64),
                macro_f1,
                weighted_f1,
                multiclass: None,
                per_label,
            })
        }
        _ => Err(MetricsError::VariantMismatch(variant)),
    }
}

pub const REPORT_HEADER: [&str; 5] = ["model", "variant", "accuracy", "macro_f1", "weighted_f1"];

/// Comparison table, one row per (model, variant).
pub fn write_report_csv<T: Scalar, W: io::Write>(w: W, reports: &[VariantReport<T>]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in reports {
        out.write_record([
            r.model.clone(),
            r.variant.short().to_owned(),
            format!("{:.6}", r.accuracy),
            format!("{:.6}", r.macro_f1),
            format!("{:.6}", r.weighted_f1),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub model: String,
    pub variant: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub metrics: Vec<String>,
    pub series: Vec<PlotSeries>,
    pub notes: Vec<String>,
}

/// Bar-chart data: one metric triple per (model, variant).
pub fn plot_data<T: Scalar>(reports: &[VariantReport<T>]) -> PlotData {
    let mut notes = vec!["undefined precision, recall or F1 is reported as 0".to_owned()];
    if reports.iter().any(|r| r.variant == DatasetVariant::Method1) {
        notes.push("method1: each duplicated row is scored on its own label".to_owned());
    }
    if reports.iter().any(|r| r.variant == DatasetVariant::Method3) {
        notes.push("method3: accuracy is exact set match; F1 averages the four per-solver positive classes".to_owned());
    }
    PlotData {
        metrics: REPORT_HEADER[2..].iter().map(|s| s.to_string()).collect(),
        series: reports
            .iter()
            .map(|r| PlotSeries {
                model: r.model.clone(),
                variant: r.variant.short().to_owned(),
                accuracy: r.accuracy.as_f64(),
                macro_f1: r.macro_f1.as_f64(),
                weighted_f1: r.weighted_f1.as_f64(),
            })
            .collect(),
        notes,
    }
}

/// Accuracy of always predicting the most frequent training class.
pub fn majority_baseline<T: Scalar>(train: &[usize], test: &[usize], classes: usize) -> Result<T, MetricsError> {
    let mut counts = vec![0usize; classes];
    for &y in train {
        if y >= classes {
            return Err(MetricsError::LabelOutOfRange { label: y, classes });
        }
        counts[y] += 1;
    }
    let majority = (0..classes).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
    accuracy(&confusion(test, &vec![majority; test.len()], classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm_from(rows: &[&[u64]]) -> ConfusionMatrix {
        let classes = rows.len();
        ConfusionMatrix {
            classes,
            counts: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[0, 1], &[0, 1], 2).unwrap().rows(), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(confusion(&[0], &[1], 2).unwrap().rows(), vec![vec![0, 1], vec![0, 0]]);
        assert_eq!(confusion(&[], &[], 3).unwrap(), ConfusionMatrix::zeros(3));
        assert!(matches!(confusion(&[0], &[], 2), Err(MetricsError::LengthMismatch { .. })));
        assert!(matches!(confusion(&[2], &[0], 2), Err(MetricsError::LabelOutOfRange { .. })));
    }

    #[test]
    fn accuracy_examples() {
        // TN=5 FP=1 / FN=1 TP=3
        let cm = cm_from(&[&[5, 1], &[1, 3]]);
        assert!((accuracy::<f64>(&cm).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(accuracy::<f64>(&cm_from(&[&[2, 0], &[0, 3]])).unwrap(), 1.0);
        assert_eq!(accuracy::<f64>(&cm_from(&[&[0, 2], &[3, 0]])).unwrap(), 0.0);
        assert_eq!(accuracy::<f64>(&ConfusionMatrix::zeros(2)), Err(MetricsError::EmptyMatrix));
    }

    #[test]
    fn f1_examples() {
        let cm = cm_from(&[&[1, 1], &[0, 2]]);
        let s = per_class_f1::<f64>(&cm).unwrap();
        assert_eq!((s[0].precision, s[0].recall), (1.0, 0.5));
        assert!((s[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1].f1 - 0.8).abs() < 1e-15);
        let m = macro_f1::<f64>(&cm).unwrap();
        assert!((m - 0.733333).abs() < 1e-6);
        assert_eq!(weighted_f1::<f64>(&cm).unwrap(), m);
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = cm_from(&[&[3, 0], &[0, 0]]);
        let s = per_class_f1::<f64>(&cm).unwrap();
        assert_eq!(s[1].f1, 0.0);
        assert_eq!(macro_f1::<f64>(&cm).unwrap(), 0.5);
    }

    #[test]
    fn weighted_uses_supports() {
        // supports 9 and 1, class 1 never predicted correctly
        let cm = cm_from(&[&[9, 0], &[1, 0]]);
        let s = per_class_f1::<f64>(&cm).unwrap();
        let expect = 0.9 * s[0].f1;
        assert!((weighted_f1::<f64>(&cm).unwrap() - expect).abs() < 1e-15);
        let perfect = cm_from(&[&[9, 0], &[0, 1]]);
        assert_eq!(weighted_f1::<f64>(&perfect).unwrap(), 1.0);
    }

    #[test]
    fn variant_reports() {
        let t = Labels::Single(vec![0, 0, 0, 1]);
        let r = evaluate_variant::<f64>("maj", DatasetVariant::Method2, &t, &Labels::Single(vec![0; 4])).unwrap();
        assert_eq!(r.accuracy, 0.75);
        let perfect = evaluate_variant::<f64>("p", DatasetVariant::Method1, &t, &t).unwrap();
        assert_eq!((perfect.accuracy, perfect.weighted_f1), (1.0, 1.0));
        // equal positive supports across labels
        let sets = Labels::Sets(vec![[true, false, true, false], [false, true, false, true]]);
        let pred = Labels::Sets(vec![[true, true, false, false], [false, true, false, true]]);
        let r = evaluate_variant::<f64>("m3", DatasetVariant::Method3, &sets, &pred).unwrap();
        assert_eq!(r.macro_f1, r.weighted_f1);
        assert_eq!(r.per_label.len(), 4);
        assert_eq!(r.accuracy, 0.5);
        assert!(matches!(
            evaluate_variant::<f64>("x", DatasetVariant::Method3, &t, &t),
            Err(MetricsError::VariantMismatch(_))
        ));
    }

    #[test]
    fn report_outputs() {
        let t = Labels::Single(vec![0, 1, 2, 3]);
        let r = evaluate_variant::<f64>("rf", DatasetVariant::Method2, &t, &t).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[r.clone(), r.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("rf,m2,1.000000,1.000000,1.000000"));
        let plot = plot_data(&[r]);
        assert_eq!(plot.series.len(), 1);
    }

    #[test]
    fn baseline_picks_lowest_majority() {
        let b: f64 = majority_baseline(&[1, 1, 0, 0], &[0, 1, 0], 2).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
    }
}
