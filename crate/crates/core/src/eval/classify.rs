use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_ids, TripleScorer};
use crate::error::{Error, Result};
use crate::model::Kg2eModel;
use crate::rdf::{Triple, TripleIds};

/// Per-relation decision thresholds; a triple is valid iff its score is at
/// least the threshold of its relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub per_relation: BTreeMap<usize, f64>,
    /// Used for relations that had no validation triples.
    pub fallback: f64,
}

impl ThresholdTable {
    pub fn uniform(threshold: f64) -> Self {
        Self {
            per_relation: BTreeMap::new(),
            fallback: threshold,
        }
    }

    pub fn threshold_for(&self, relation: usize) -> f64 {
        self.per_relation
            .get(&relation)
            .copied()
            .unwrap_or(self.fallback)
    }
}

/// Accuracy-maximising threshold over labelled scores.
///
/// Candidates are the midpoints between adjacent distinct scores plus one
/// point below the minimum and one above the maximum (each at distance 1).
/// Ties go to the lowest candidate. Returns `(threshold, correct_count)`.
pub fn best_threshold(pos: &[f64], neg: &[f64]) -> (f64, usize) {
    let mut labelled: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    if labelled.is_empty() {
        return (0.0, 0);
    }
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Threshold below everything: all predicted valid.
    let mut correct = pos.len();
    let mut best = (labelled[0].0 - 1.0, correct);
    let mut i = 0;
    while i < labelled.len() {
        let value = labelled[i].0;
        // Move every item with this score below the threshold.
        while i < labelled.len() && labelled[i].0 == value {
            if labelled[i].1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        let candidate = match labelled.get(i) {
            Some(&(next, _)) => value + (next - value) / 2.0,
            None => value + 1.0,
        };
        if correct > best.1 {
            best = (candidate, correct);
        }
    }
    best
}

/// Picks one threshold per relation seen in validation, plus a global
/// fallback over all pairs.
pub fn select_thresholds<S: TripleScorer + ?Sized>(
    scorer: &S,
    valid_pos: &[TripleIds],
    valid_neg: &[TripleIds],
) -> Result<ThresholdTable> {
    if valid_pos.is_empty() || valid_neg.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let mut by_relation: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let (mut all_pos, mut all_neg) = (Vec::new(), Vec::new());
    for (set, positive) in [(valid_pos, true), (valid_neg, false)] {
        for &ids in set {
            check_ids(scorer, ids)?;
            let s = scorer.score_ids(ids);
            let entry = by_relation.entry(ids.relation).or_default();
            if positive {
                entry.0.push(s);
                all_pos.push(s);
            } else {
                entry.1.push(s);
                all_neg.push(s);
            }
        }
    }
    let per_relation = by_relation
        .into_iter()
        .map(|(r, (p, n))| (r, best_threshold(&p, &n).0))
        .collect();
    Ok(ThresholdTable {
        per_relation,
        fallback: best_threshold(&all_pos, &all_neg).0,
    })
}

pub(crate) fn classify_ids<S: TripleScorer + ?Sized>(
    scorer: &S,
    ids: TripleIds,
    thresholds: &ThresholdTable,
) -> Result<(bool, f64)> {
    check_ids(scorer, ids)?;
    let s = scorer.score_ids(ids);
    Ok((s >= thresholds.threshold_for(ids.relation), s))
}

/// Triple classification against the model vocabulary.
pub fn classify(model: &Kg2eModel, triple: &Triple, thresholds: &ThresholdTable) -> Result<bool> {
    if triple.has_placeholder() {
        return Err(Error::PlaceholderPresent);
    }
    let ids = model.vocab.encode(triple)?;
    classify_ids(model, ids, thresholds).map(|(valid, _)| valid)
}

/// Confusion counts and derived rates. A rate whose denominator is zero is
/// `None` (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ClassificationMetrics {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Self {
            tp,
            tn,
            fp,
            fn_,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision,
            recall,
            f1,
            tpr: recall,
            tnr: ratio(tn, tn + fp),
            fpr: ratio(fp, tn + fp),
            fnr: ratio(fn_, tp + fn_),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Positives classified valid are true positives; negatives classified
/// invalid are true negatives.
pub fn evaluate_classification<S: TripleScorer + ?Sized>(
    scorer: &S,
    test_pos: &[TripleIds],
    test_neg: &[TripleIds],
    thresholds: &ThresholdTable,
) -> Result<ClassificationMetrics> {
    if test_pos.is_empty() || test_neg.is_empty() {
        return Err(Error::EmptyInput("classification test set"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for &ids in test_pos {
        if classify_ids(scorer, ids, thresholds)?.0 {
            tp += 1;
        } else {
            fn_ += 1;
        }
    }
    for &ids in test_neg {
        if classify_ids(scorer, ids, thresholds)?.0 {
            fp += 1;
        } else {
            tn += 1;
        }
    }
    Ok(ClassificationMetrics::from_counts(tp, tn, fp, fn_))
}
