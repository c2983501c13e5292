//! KG2E model: every entity and relation is a diagonal Gaussian.

mod persist;
pub mod score;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ThresholdTable;
use crate::rdf::{TripleIds, Vocab};

pub use persist::{load_model, save_model, FORMAT_VERSION};
pub use score::{ParamGradient, TripleGradient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    ExpectedLikelihood,
    #[default]
    KlDivergence,
}

/// Mean vector and diagonal covariance of one Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl GaussianParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects the mean into the unit ball and clamps the covariance.
    pub fn constrain(&mut self, c_min: f64, c_max: f64) {
        let norm = |m: &[f64]| m.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = norm(&self.mean);
        if n > 1.0 {
            self.mean.iter_mut().for_each(|x| *x /= n);
            // rounding can leave the norm a few ulps above 1
            while norm(&self.mean) > 1.0 {
                self.mean.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
            }
        }
        self.cov.iter_mut().for_each(|c| *c = c.clamp(c_min, c_max));
    }

    pub fn satisfies(&self, c_min: f64, c_max: f64) -> bool {
        let norm = self.mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        norm <= 1.0
            && self.cov.iter().all(|&c| c >= c_min && c <= c_max)
            && self.mean.iter().chain(&self.cov).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub score_kind: ScoreKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            c_min: 0.05,
            c_max: 5.0,
            score_kind: ScoreKind::KlDivergence,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be at least 1".into()));
        }
        if !(self.c_min > 0.0 && self.c_min < self.c_max && self.c_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "covariance bounds must satisfy 0 < c_min < c_max, got [{}, {}]",
                self.c_min, self.c_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kg2eModel {
    pub vocab: Vocab,
    pub entities: Vec<GaussianParams>,
    pub relations: Vec<GaussianParams>,
    pub config: ModelConfig,
    pub thresholds: Option<ThresholdTable>,
}

/// Means uniform in ±6/√d per coordinate, covariances 1.0, then constrained.
pub fn init_model(vocab: Vocab, config: ModelConfig, seed: u64) -> Result<Kg2eModel> {
    config.validate()?;
    if vocab.num_entities() == 0 || vocab.num_relations() == 0 {
        return Err(Error::EmptyVocab);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 6.0 / (config.dim as f64).sqrt();
    let draw = |rng: &mut ChaCha8Rng| {
        let mut p = GaussianParams {
            mean: (0..config.dim).map(|_| rng.random_range(-bound..=bound)).collect(),
            cov: vec![1.0; config.dim],
        };
        p.constrain(config.c_min, config.c_max);
        p
    };
    let entities = (0..vocab.num_entities()).map(|_| draw(&mut rng)).collect();
    let relations = (0..vocab.num_relations()).map(|_| draw(&mut rng)).collect();
    Ok(Kg2eModel {
        vocab,
        entities,
        relations,
        config,
        thresholds: None,
    })
}

impl Kg2eModel {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    fn check(&self, ids: TripleIds) -> Result<()> {
        let ne = self.num_entities();
        for i in [ids.head, ids.tail] {
            if i >= ne {
                return Err(Error::IndexOutOfRange {
                    kind: "entity",
                    index: i,
                    len: ne,
                });
            }
        }
        if ids.relation >= self.num_relations() {
            return Err(Error::IndexOutOfRange {
                kind: "relation",
                index: ids.relation,
                len: self.num_relations(),
            });
        }
        Ok(())
    }

    fn params(&self, ids: TripleIds) -> (&GaussianParams, &GaussianParams, &GaussianParams) {
        (
            &self.entities[ids.head],
            &self.relations[ids.relation],
            &self.entities[ids.tail],
        )
    }

    pub fn score_el(&self, ids: TripleIds) -> Result<f64> {
        self.check(ids)?;
        let (h, r, t) = self.params(ids);
        Ok(score::expected_likelihood(h, r, t))
    }

    pub fn score_kl(&self, ids: TripleIds) -> Result<f64> {
        self.check(ids)?;
        let (h, r, t) = self.params(ids);
        Ok(score::kl_score(h, r, t))
    }

    /// Score under the model's configured kind.
    pub fn score(&self, ids: TripleIds) -> Result<f64> {
        self.check(ids)?;
        Ok(self.score_unchecked(ids))
    }

    pub(crate) fn score_unchecked(&self, ids: TripleIds) -> f64 {
        let (h, r, t) = self.params(ids);
        match self.config.score_kind {
            ScoreKind::ExpectedLikelihood => score::expected_likelihood(h, r, t),
            ScoreKind::KlDivergence => score::kl_score(h, r, t),
        }
    }

    pub fn score_grad(&self, ids: TripleIds, kind: ScoreKind) -> Result<TripleGradient> {
        self.check(ids)?;
        let (h, r, t) = self.params(ids);
        Ok(match kind {
            ScoreKind::ExpectedLikelihood => score::expected_likelihood_gradient(h, r, t),
            ScoreKind::KlDivergence => score::kl_gradient(h, r, t),
        })
    }

    /// Unit-ball projection of every mean and covariance clamping. Idempotent.
    pub fn apply_constraints(&mut self) {
        let (lo, hi) = (self.config.c_min, self.config.c_max);
        for p in self.entities.iter_mut().chain(self.relations.iter_mut()) {
            p.constrain(lo, hi);
        }
    }

    pub fn constraint_violations(&self) -> usize {
        let (lo, hi) = (self.config.c_min, self.config.c_max);
        self.entities
            .iter()
            .chain(&self.relations)
            .filter(|p| !p.satisfies(lo, hi))
            .count()
    }
}
