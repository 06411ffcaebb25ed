//! Confusion matrix, one-vs-rest class metrics and macro averages.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::QualityClass;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }
}

pub fn confusion_matrix(y_true: &[QualityClass], y_pred: &[QualityClass]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// 0/0 is taken as 0.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: QualityClass,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    /// Binary accuracy of this class's one-vs-rest reduction.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }
}

pub fn class_metrics(cm: &ConfusionMatrix, class: QualityClass) -> ClassMetrics {
    let c = class.index();
    let tp = cm.counts[c][c];
    let fp = (0..3).filter(|&r| r != c).map(|r| cm.counts[r][c]).sum();
    let fn_ = (0..3).filter(|&p| p != c).map(|p| cm.counts[c][p]).sum();
    let tn = cm.total() - tp - fp - fn_;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics {
        class,
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
    }
}

pub fn all_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    QualityClass::ALL.iter().map(|&c| class_metrics(cm, c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy is trace / total; the rest are unweighted means over the three classes.
pub fn macro_summary(cm: &ConfusionMatrix) -> Result<MacroSummary> {
    if cm.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    let per = all_class_metrics(cm);
    let mean = |f: fn(&ClassMetrics) -> f64| per.iter().map(f).sum::<f64>() / 3.0;
    Ok(MacroSummary {
        accuracy: cm.accuracy(),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    })
}
