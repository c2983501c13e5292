//! Fitting a [`Kg2eModel`] with open-world negative sampling, a margin
//! ranking loss and RMSProp updates.

mod optimizer;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{select_thresholds, KnownTriples};
use crate::model::{init_model, score, Kg2eModel, ModelConfig, ParamGradient, ScoreKind};
use crate::rdf::{build_vocab, Graph, TripleIds, Vocab};

pub use optimizer::RmsProp;

/// Relative loss improvement below which an epoch counts as flat.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;
/// Consecutive flat epochs that mark convergence.
pub const CONVERGENCE_WINDOW: usize = 3;
/// Rejection-sampling budget for one negative.
pub const MAX_NEGATIVE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidConfig(format!("split fractions must lie in (0,1): {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split fractions must sum to 1: {parts:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub margin: f64,
    /// Zero disables the loss entirely.
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub split: SplitFractions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.01,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            margin: 1.0,
            negatives_per_positive: 1,
            batch_size: 64,
            seed: 42,
            split: SplitFractions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return bad("rms_decay must lie in (0,1)");
        }
        if !(self.rms_epsilon > 0.0 && self.rms_epsilon.is_finite()) {
            return bad("rms_epsilon must be positive");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        self.split.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    /// 1-based epoch at which the loss had been flat for
    /// [`CONVERGENCE_WINDOW`] consecutive epochs.
    pub convergence_epoch: Option<usize>,
    pub constraint_violations: usize,
    pub seed: u64,
    pub train_triples: usize,
}

/// Train/valid/test partition sharing one vocabulary built from the full
/// graph.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub full: Graph,
    pub train: Graph,
    pub valid: Graph,
    pub test: Graph,
    pub vocab: Vocab,
}

impl DatasetSplit {
    pub fn known(&self) -> KnownTriples {
        KnownTriples::from_graph(&self.vocab, &self.full)
    }
}

/// Seeded shuffle, then `floor(n·valid)` and `floor(n·test)` triples for
/// validation and test; the remainder trains.
pub fn split_dataset(graph: &Graph, fractions: SplitFractions, seed: u64) -> Result<DatasetSplit> {
    fractions.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyInput("graph to split"));
    }
    let vocab = build_vocab(graph)?;
    let n = graph.len();
    let n_valid = (n as f64 * fractions.valid).floor() as usize;
    let n_test = (n as f64 * fractions.test).floor() as usize;
    let n_train = n - n_valid - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let part = |range: std::ops::Range<usize>| {
        let mut g = Graph::with_prefixes(graph.prefixes().clone());
        g.extend(order[range].iter().map(|&i| graph.triples()[i].clone()));
        g
    };
    Ok(DatasetSplit {
        full: graph.clone(),
        train: part(0..n_train),
        valid: part(n_train..n_train + n_valid),
        test: part(n_train + n_valid..n),
        vocab,
    })
}

/// Corrupts the head or the tail (probability ½ each) with a different,
/// uniformly drawn entity, retrying while the result is a known triple. After
/// [`MAX_NEGATIVE_ATTEMPTS`] the last draw is accepted. The relation is never
/// corrupted.
pub fn sample_negative<R: Rng + ?Sized>(
    positive: TripleIds,
    num_entities: usize,
    known: &KnownTriples,
    rng: &mut R,
) -> TripleIds {
    assert!(num_entities >= 2, "negative sampling needs at least two entities");
    let corrupt_head = rng.random_bool(0.5);
    let original = if corrupt_head { positive.head } else { positive.tail };
    let mut candidate = positive;
    for _ in 0..MAX_NEGATIVE_ATTEMPTS {
        let mut e = rng.random_range(0..num_entities - 1);
        if e >= original {
            e += 1;
        }
        candidate = if corrupt_head {
            TripleIds { head: e, ..positive }
        } else {
            TripleIds { tail: e, ..positive }
        };
        if !known.contains(&candidate) {
            break;
        }
    }
    candidate
}

/// One corrupted negative per validation triple, then one per test triple,
/// from a single generator seeded with `seed` and filtered against the full
/// graph. Shared by threshold selection and test-set classification so that
/// every caller evaluates on the same negatives.
pub fn evaluation_negatives(split: &DatasetSplit, seed: u64) -> Result<(Vec<TripleIds>, Vec<TripleIds>)> {
    let known = split.known();
    let n = split.vocab.num_entities();
    if n < 2 {
        return Err(Error::InvalidConfig("negative sampling needs at least two entities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupt = |g: &Graph| -> Result<Vec<TripleIds>> {
        Ok(split
            .vocab
            .encode_graph(g)?
            .into_iter()
            .map(|p| sample_negative(p, n, &known, &mut rng))
            .collect())
    };
    let valid = corrupt(&split.valid)?;
    let test = corrupt(&split.test)?;
    Ok((valid, test))
}

/// Salt separating the evaluation-negative stream from the training seed.
pub const EVAL_SEED_SALT: u64 = 0x5eed;

/// A trained model with thresholds, the split it was trained on and the
/// training report.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Kg2eModel,
    pub split: DatasetSplit,
    pub report: TrainReport,
    /// Validation and test negatives used for thresholds and evaluation.
    pub valid_neg: Vec<TripleIds>,
    pub test_neg: Vec<TripleIds>,
}

/// Split `graph`, initialise and train a model, then select per-relation
/// thresholds on the validation split. Every random draw derives from
/// `config.seed`.
pub fn fit(graph: &Graph, model_config: ModelConfig, config: &TrainConfig) -> Result<Fitted> {
    config.validate()?;
    let split = split_dataset(graph, config.split, config.seed)?;
    let mut model = init_model(split.vocab.clone(), model_config, config.seed)?;
    let report = train(&mut model, &split, config)?;
    let (valid_neg, test_neg) = evaluation_negatives(&split, config.seed ^ EVAL_SEED_SALT)?;
    let valid_pos = split.vocab.encode_graph(&split.valid)?;
    model.thresholds = Some(select_thresholds(&model, &valid_pos, &valid_neg)?);
    Ok(Fitted {
        model,
        split,
        report,
        valid_neg,
        test_neg,
    })
}

/// `max(0, margin − pos + neg)` for higher-is-better scores.
pub fn margin_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin - pos_score + neg_score).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ParamKey {
    Entity(usize),
    Relation(usize),
}

/// Per-batch loss gradients, applied in key order so updates are
/// deterministic.
#[derive(Default)]
struct GradientBuffer(BTreeMap<ParamKey, ParamGradient>);

impl GradientBuffer {
    fn add(&mut self, key: ParamKey, g: &ParamGradient, sign: f64) {
        let entry = self.0.entry(key).or_insert_with(|| ParamGradient {
            mean: vec![0.0; g.mean.len()],
            cov: vec![0.0; g.cov.len()],
        });
        for (a, b) in entry.mean.iter_mut().zip(&g.mean) {
            *a += sign * b;
        }
        for (a, b) in entry.cov.iter_mut().zip(&g.cov) {
            *a += sign * b;
        }
    }

    /// `sign` is +1 to push the score of `ids` down, −1 to push it up.
    fn add_triple(&mut self, model: &Kg2eModel, ids: TripleIds, sign: f64) {
        let (h, r, t) = (
            &model.entities[ids.head],
            &model.relations[ids.relation],
            &model.entities[ids.tail],
        );
        let g = match model.config.score_kind {
            ScoreKind::ExpectedLikelihood => score::expected_likelihood_gradient(h, r, t),
            ScoreKind::KlDivergence => score::kl_gradient(h, r, t),
        };
        self.add(ParamKey::Entity(ids.head), &g.head, sign);
        self.add(ParamKey::Relation(ids.relation), &g.relation, sign);
        self.add(ParamKey::Entity(ids.tail), &g.tail, sign);
    }
}

/// RMSProp accumulators for one Gaussian.
#[derive(Clone)]
struct Accumulator {
    mean: Vec<f64>,
    cov: Vec<f64>,
}

/// Accumulators shaped like the model. Only parameters touched by a batch
/// are stepped, so untouched accumulators do not decay.
struct OptimizerState {
    entities: Vec<Accumulator>,
    relations: Vec<Accumulator>,
}

impl OptimizerState {
    fn new(model: &Kg2eModel) -> Self {
        let zeros = |n: usize| {
            vec![
                Accumulator {
                    mean: vec![0.0; model.dim()],
                    cov: vec![0.0; model.dim()],
                };
                n
            ]
        };
        Self {
            entities: zeros(model.num_entities()),
            relations: zeros(model.num_relations()),
        }
    }
}

/// First epoch (1-based) that starts a run of `CONVERGENCE_WINDOW`
/// consecutive epochs whose relative improvement over the previous epoch is
/// below the tolerance. Epoch 1 has no previous epoch and never counts.
pub fn convergence_epoch(losses: &[f64]) -> Option<usize> {
    let mut flat = 0;
    for e in 1..losses.len() {
        let (prev, cur) = (losses[e - 1], losses[e]);
        let improvement = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        if improvement < CONVERGENCE_TOLERANCE {
            flat += 1;
            if flat >= CONVERGENCE_WINDOW {
                return Some(e + 2 - CONVERGENCE_WINDOW);
            }
        } else {
            flat = 0;
        }
    }
    None
}

/// Trains on `split.train`; negatives are rejected against the full graph.
pub fn train(model: &mut Kg2eModel, split: &DatasetSplit, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if model.vocab != split.vocab {
        return Err(Error::VocabMismatch);
    }
    let positives = split.vocab.encode_graph(&split.train)?;
    let known = split.known();
    let num_entities = model.num_entities();
    if num_entities < 2 && config.negatives_per_positive > 0 {
        return Err(Error::InvalidConfig("negative sampling needs at least two entities".into()));
    }

    let optimizer = RmsProp::new(config.learning_rate, config.rms_decay, config.rms_epsilon);
    let mut state = OptimizerState::new(model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = positives.clone();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut pairs) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut grads = GradientBuffer::default();
            for &pos in batch {
                for _ in 0..config.negatives_per_positive {
                    let neg = sample_negative(pos, num_entities, &known, &mut rng);
                    let loss = margin_loss(
                        model.score_unchecked(pos),
                        model.score_unchecked(neg),
                        config.margin,
                    );
                    if !loss.is_finite() {
                        return Err(Error::Diverged {
                            epoch,
                            detail: format!("non-finite loss on positive {pos:?} / negative {neg:?}"),
                        });
                    }
                    total += loss;
                    pairs += 1;
                    if loss > 0.0 {
                        grads.add_triple(model, pos, -1.0);
                        grads.add_triple(model, neg, 1.0);
                    }
                }
            }
            for (key, g) in grads.0 {
                let (params, acc) = match key {
                    ParamKey::Entity(i) => (&mut model.entities[i], &mut state.entities[i]),
                    ParamKey::Relation(i) => (&mut model.relations[i], &mut state.relations[i]),
                };
                optimizer.step(&mut params.mean, &mut acc.mean, &g.mean);
                optimizer.step(&mut params.cov, &mut acc.cov, &g.cov);
            }
            model.apply_constraints();
        }
        let mean = if pairs > 0 { total / pairs as f64 } else { 0.0 };
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("mean loss {mean}"),
            });
        }
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        epoch_losses.push(mean);
    }

    Ok(TrainReport {
        convergence_epoch: convergence_epoch(&epoch_losses),
        epoch_losses,
        constraint_violations: model.constraint_violations(),
        seed: config.seed,
        train_triples: positives.len(),
    })
}
