//! Versioned JSON model document. Floats are written in shortest
//! round-trip form and parsed exactly, so a reloaded model scores
//! bit-identically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GaussianParams, Kg2eModel, ModelConfig, ScoreKind};
use crate::error::{Error, Result};
use crate::eval::ThresholdTable;
use crate::rdf::{parse_term, Vocab};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "ikg-kg2e-model";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    version: u32,
    dim: usize,
    score_kind: ScoreKind,
    c_min: f64,
    c_max: f64,
    entities: Vec<String>,
    relations: Vec<String>,
    entity_means: Vec<Vec<f64>>,
    entity_covs: Vec<Vec<f64>>,
    relation_means: Vec<Vec<f64>>,
    relation_covs: Vec<Vec<f64>>,
    thresholds: Option<ThresholdDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdDocument {
    per_relation: BTreeMap<String, f64>,
    fallback: f64,
}

pub fn save_model(model: &Kg2eModel) -> Result<String> {
    let all_finite = |ps: &[GaussianParams]| {
        ps.iter()
            .all(|p| p.mean.iter().chain(&p.cov).all(|x| x.is_finite()))
    };
    if !all_finite(&model.entities) || !all_finite(&model.relations) {
        return Err(Error::ModelFormat("non-finite parameter".into()));
    }
    let thresholds = match &model.thresholds {
        None => None,
        Some(table) => {
            let mut per_relation = BTreeMap::new();
            for (&r, &th) in &table.per_relation {
                let iri = model.vocab.relation(r).ok_or(Error::IndexOutOfRange {
                    kind: "relation",
                    index: r,
                    len: model.vocab.num_relations(),
                })?;
                per_relation.insert(iri.to_owned(), th);
            }
            if per_relation.values().chain([&table.fallback]).any(|t| !t.is_finite()) {
                return Err(Error::ModelFormat("thresholds must be finite to be saved".into()));
            }
            Some(ThresholdDocument {
                per_relation,
                fallback: table.fallback,
            })
        }
    };
    let split = |ps: &[GaussianParams]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        ps.iter().map(|p| (p.mean.clone(), p.cov.clone())).unzip()
    };
    let (entity_means, entity_covs) = split(&model.entities);
    let (relation_means, relation_covs) = split(&model.relations);
    let doc = ModelDocument {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        dim: model.config.dim,
        score_kind: model.config.score_kind,
        c_min: model.config.c_min,
        c_max: model.config.c_max,
        entities: model.vocab.entities().iter().map(|t| t.to_string()).collect(),
        relations: model.vocab.relations().to_vec(),
        entity_means,
        entity_covs,
        relation_means,
        relation_covs,
        thresholds,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn load_model(text: &str) -> Result<Kg2eModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.format != FORMAT_NAME {
        return Err(Error::ModelFormat(format!("unknown format `{}`", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            doc.version
        )));
    }
    let config = ModelConfig {
        dim: doc.dim,
        c_min: doc.c_min,
        c_max: doc.c_max,
        score_kind: doc.score_kind,
    };
    config.validate()?;
    let entities = doc
        .entities
        .iter()
        .map(|s| parse_term(s))
        .collect::<Result<Vec<_>>>()?;
    let vocab = Vocab::from_parts(entities, doc.relations)?;

    let zip = |means: Vec<Vec<f64>>, covs: Vec<Vec<f64>>, n: usize, what: &str| {
        if means.len() != n || covs.len() != n {
            return Err(Error::ModelFormat(format!("{what} parameter count does not match vocabulary")));
        }
        means
            .into_iter()
            .zip(covs)
            .map(|(mean, cov)| {
                if mean.len() != config.dim || cov.len() != config.dim {
                    return Err(Error::ModelFormat(format!("{what} vector has wrong dimension")));
                }
                Ok(GaussianParams { mean, cov })
            })
            .collect::<Result<Vec<_>>>()
    };
    let entity_params = zip(doc.entity_means, doc.entity_covs, vocab.num_entities(), "entity")?;
    let relation_params = zip(doc.relation_means, doc.relation_covs, vocab.num_relations(), "relation")?;

    let thresholds = match doc.thresholds {
        None => None,
        Some(t) => {
            let mut per_relation = BTreeMap::new();
            for (iri, th) in t.per_relation {
                let r = vocab
                    .relation_id(&iri)
                    .ok_or_else(|| Error::UnknownRelation(format!("<{iri}>")))?;
                per_relation.insert(r, th);
            }
            Some(ThresholdTable {
                per_relation,
                fallback: t.fallback,
            })
        }
    };
    let model = Kg2eModel {
        vocab,
        entities: entity_params,
        relations: relation_params,
        config,
        thresholds,
    };
    if model.constraint_violations() > 0 {
        return Err(Error::ModelFormat("parameters violate the model constraints".into()));
    }
    Ok(model)
}
