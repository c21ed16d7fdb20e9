use serde::{Deserialize, Serialize};

use super::data::LabeledSet;
use super::model::PaCBMModel;
use crate::concepts::CONCEPT_COUNT;
use crate::par::Exec;
use crate::{Error, Result};

/// Head whose argmax is reported as the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionHead {
    Direct,
    ConceptPath,
}

/// Agreement statistics of a confusion matrix (rows are true classes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub confusion: Vec<Vec<u64>>,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub per_class_accuracy: Vec<f64>,
}

impl ConfusionMetrics {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<Self> {
        let c = confusion.len();
        if confusion.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidConfig("confusion matrix must be square".into()));
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::EmptyData);
        }
        let n = total as f64;
        let diag: u64 = (0..c).map(|k| confusion[k][k]).sum();
        let oa = diag as f64 / n;
        let rows: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<u64> = (0..c).map(|k| confusion.iter().map(|r| r[k]).sum()).collect();
        let per_class_accuracy: Vec<f64> = (0..c)
            .map(|k| {
                if rows[k] == 0 {
                    0.0
                } else {
                    confusion[k][k] as f64 / rows[k] as f64
                }
            })
            .collect();
        let present: Vec<f64> = (0..c).filter(|&k| rows[k] > 0).map(|k| per_class_accuracy[k]).collect();
        let aa = present.iter().sum::<f64>() / present.len() as f64;
        let pe = (0..c).map(|k| rows[k] as f64 * cols[k] as f64).sum::<f64>() / (n * n);
        let kappa = if pe < 1.0 { (oa - pe) / (1.0 - pe) } else { 1.0 };
        Ok(Self {
            confusion,
            oa,
            aa,
            kappa,
            per_class_accuracy,
        })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        let mut confusion = vec![vec![0u64; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes {
                return Err(Error::UnknownClass(t));
            }
            if p >= classes {
                return Err(Error::UnknownClass(p));
            }
            confusion[t][p] += 1;
        }
        Self::from_confusion(confusion)
    }
}

/// Rank-based area under the ROC curve with average ranks for ties. `None`
/// when the labels contain only one class.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if positive[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub decision_head: DecisionHead,
    pub samples: usize,
    pub concept_path: ConfusionMetrics,
    pub direct: ConfusionMetrics,
    /// Accuracy of each concept at threshold 0.5.
    pub concept_accuracy: Vec<f64>,
    /// `None` for concepts whose ground truth is constant over the data.
    pub concept_auc: Vec<Option<f64>>,
    /// Mean over concepts with a defined AUC.
    pub mean_concept_auc: Option<f64>,
}

impl EvalReport {
    /// Metrics of the decision head.
    pub fn decision(&self) -> &ConfusionMetrics {
        match self.decision_head {
            DecisionHead::Direct => &self.direct,
            DecisionHead::ConceptPath => &self.concept_path,
        }
    }
}

pub fn evaluate(model: &PaCBMModel, set: &LabeledSet, exec: Exec) -> Result<EvalReport> {
    if set.is_empty() {
        return Err(Error::EmptyData);
    }
    let classes = model.class_count();
    let outputs = exec
        .map(&set.stats, |s| model.forward_stats(s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let path: Vec<usize> = outputs.iter().map(|o| o.label).collect();
    let direct: Vec<usize> = outputs.iter().map(|o| o.direct_label).collect();
    let truth: Vec<Vec<f64>> = set
        .labels
        .iter()
        .map(|&y| model.class_table.concepts_for_class(y).map(|c| c.values().to_vec()))
        .collect::<Result<_>>()?;
    let mut concept_accuracy = Vec::with_capacity(CONCEPT_COUNT);
    let mut concept_auc = Vec::with_capacity(CONCEPT_COUNT);
    for k in 0..CONCEPT_COUNT {
        let scores: Vec<f64> = outputs.iter().map(|o| o.concept_probs[k]).collect();
        let positive: Vec<bool> = truth.iter().map(|t| t[k] >= 0.5).collect();
        let correct = scores.iter().zip(&positive).filter(|(s, p)| (**s >= 0.5) == **p).count();
        concept_accuracy.push(correct as f64 / set.len() as f64);
        concept_auc.push(auc(&scores, &positive));
    }
    let defined: Vec<f64> = concept_auc.iter().flatten().copied().collect();
    let mean_concept_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(EvalReport {
        decision_head: DecisionHead::ConceptPath,
        samples: set.len(),
        concept_path: ConfusionMetrics::from_predictions(&set.labels, &path, classes)?,
        direct: ConfusionMetrics::from_predictions(&set.labels, &direct, classes)?,
        concept_accuracy,
        concept_auc,
        mean_concept_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let m = ConfusionMetrics::from_confusion(vec![vec![50, 0], vec![0, 50]]).unwrap();
        assert_eq!((m.oa, m.aa, m.kappa), (1.0, 1.0, 1.0));
        let m = ConfusionMetrics::from_confusion(vec![vec![25, 25], vec![25, 25]]).unwrap();
        assert_eq!((m.oa, m.kappa), (0.5, 0.0));
        let m = ConfusionMetrics::from_confusion(vec![vec![40, 10], vec![20, 30]]).unwrap();
        assert!((m.oa - 0.7).abs() < 1e-12);
        assert!((m.kappa - 0.4).abs() < 1e-12);
        assert!((m.aa - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_confusion_is_an_error() {
        assert!(ConfusionMetrics::from_confusion(vec![vec![0, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn auc_handles_ties_and_degenerate_labels() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]), Some(0.75));
        assert_eq!(auc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(auc(&[0.1, 0.2], &[true, true]), None);
    }
}
