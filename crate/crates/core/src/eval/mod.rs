//! Link-prediction ranking and triple-classification evaluation.

mod classify;
mod rank;

pub use classify::{
    best_threshold, classify, evaluate_classification, select_thresholds, ClassificationMetrics,
    ThresholdTable,
};
pub(crate) use classify::classify_ids;
pub use rank::{evaluate_ranks, rank_triple, KnownTriples, RankMetrics, Side, SideSelection};

use crate::model::Kg2eModel;
use crate::rdf::TripleIds;

/// Anything that can score encoded triples. Implemented by [`Kg2eModel`];
/// tests plug in stub scorers.
pub trait TripleScorer {
    fn num_entities(&self) -> usize;
    fn num_relations(&self) -> usize;
    /// Indices are validated by the caller.
    fn score_ids(&self, ids: TripleIds) -> f64;
}

impl TripleScorer for Kg2eModel {
    fn num_entities(&self) -> usize {
        self.entities.len()
    }

    fn num_relations(&self) -> usize {
        self.relations.len()
    }

    fn score_ids(&self, ids: TripleIds) -> f64 {
        self.score_unchecked(ids)
    }
}

pub(crate) fn check_ids<S: TripleScorer + ?Sized>(scorer: &S, ids: TripleIds) -> crate::Result<()> {
    let ne = scorer.num_entities();
    for i in [ids.head, ids.tail] {
        if i >= ne {
            return Err(crate::Error::IndexOutOfRange {
                kind: "entity",
                index: i,
                len: ne,
            });
        }
    }
    if ids.relation >= scorer.num_relations() {
        return Err(crate::Error::IndexOutOfRange {
            kind: "relation",
            index: ids.relation,
            len: scorer.num_relations(),
        });
    }
    Ok(())
}
