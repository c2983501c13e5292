use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_ids, TripleScorer};
use crate::error::{Error, Result};
use crate::rdf::{Graph, TripleIds, Vocab};

/// Which element of the triple is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(h, r, ?)`
    Right,
    /// `(?, r, t)`
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSelection {
    Right,
    Left,
    Both,
}

impl SideSelection {
    fn sides(self) -> &'static [Side] {
        match self {
            SideSelection::Right => &[Side::Right],
            SideSelection::Left => &[Side::Left],
            SideSelection::Both => &[Side::Right, Side::Left],
        }
    }
}

/// Encoded set of true triples used to filter competing completions.
#[derive(Debug, Clone, Default)]
pub struct KnownTriples(HashSet<TripleIds>);

impl KnownTriples {
    /// Triples mentioning terms outside `vocab` can never be candidates and
    /// are skipped.
    pub fn from_graph(vocab: &Vocab, graph: &Graph) -> Self {
        Self(graph.iter().filter_map(|t| vocab.encode(t).ok()).collect())
    }

    pub fn from_ids(ids: impl IntoIterator<Item = TripleIds>) -> Self {
        Self(ids.into_iter().collect())
    }

    pub fn contains(&self, ids: &TripleIds) -> bool {
        self.0.contains(ids)
    }
}

fn with_candidate(ids: TripleIds, side: Side, c: usize) -> TripleIds {
    match side {
        Side::Right => TripleIds { tail: c, ..ids },
        Side::Left => TripleIds { head: c, ..ids },
    }
}

/// Rank of the true entity among all `|E|` completions, scores sorted
/// descending. Ties share the mean of their positions. With `filtered`,
/// other completions present in `known` are dropped first.
pub fn rank_triple<S: TripleScorer + ?Sized>(
    scorer: &S,
    ids: TripleIds,
    side: Side,
    known: &KnownTriples,
    filtered: bool,
) -> Result<f64> {
    check_ids(scorer, ids)?;
    let truth = match side {
        Side::Right => ids.tail,
        Side::Left => ids.head,
    };
    let true_score = scorer.score_ids(ids);
    let (mut greater, mut equal) = (0usize, 0usize);
    for c in 0..scorer.num_entities() {
        if c == truth {
            continue;
        }
        let cand = with_candidate(ids, side, c);
        if filtered && known.contains(&cand) {
            continue;
        }
        let s = scorer.score_ids(cand);
        if s > true_score {
            greater += 1;
        } else if s == true_score {
            equal += 1;
        }
    }
    Ok(1.0 + greater as f64 + equal as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mean_rank: f64,
    /// p → fraction of ranks ≤ p.
    pub hits: BTreeMap<usize, f64>,
    pub side: SideSelection,
    pub filtered: bool,
    /// Number of ranking queries aggregated.
    pub queries: usize,
}

impl RankMetrics {
    pub fn from_ranks(ranks: &[f64], hits_ps: &[usize], side: SideSelection, filtered: bool) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyInput("no ranks to aggregate"));
        }
        let n = ranks.len() as f64;
        let hits = hits_ps
            .iter()
            .map(|&p| (p, ranks.iter().filter(|&&r| r <= p as f64).count() as f64 / n))
            .collect();
        Ok(Self {
            mean_rank: ranks.iter().sum::<f64>() / n,
            hits,
            side,
            filtered,
            queries: ranks.len(),
        })
    }

    pub fn hits_at(&self, p: usize) -> Option<f64> {
        self.hits.get(&p).copied()
    }
}

/// Ranks every test triple on the selected sides and aggregates.
pub fn evaluate_ranks<S: TripleScorer + ?Sized>(
    scorer: &S,
    test: &[TripleIds],
    known: &KnownTriples,
    filtered: bool,
    side: SideSelection,
    hits_ps: &[usize],
) -> Result<RankMetrics> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let mut ranks = Vec::with_capacity(test.len() * 2);
    for &ids in test {
        for &s in side.sides() {
            ranks.push(rank_triple(scorer, ids, s, known, filtered)?);
        }
    }
    RankMetrics::from_ranks(&ranks, hits_ps, side, filtered)
}
