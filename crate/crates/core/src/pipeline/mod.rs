//! Intent translation: keyword recognition (A), template instantiation (B),
//! slot discovery (C), link prediction (D), ontology-checked completion (E)
//! and verification by triple classification (F).

mod corpus;
mod ontology;
mod template;

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::eval::{classify_ids, ThresholdTable, TripleScorer};
use crate::model::Kg2eModel;
use crate::ns;
use crate::rdf::{Graph, Term, Triple, TripleIds};

pub use corpus::{extract_keywords, Hint, KeywordCorpus, KeywordMatch};
pub use ontology::Ontology;
pub use template::{build_template, find_incomplete, slot_reference, IntentTemplate, Role, RoleMap, SlottedTriple};

/// Default number of predictions inspected per slot.
pub const DEFAULT_K: usize = 10;

pub(crate) fn term_string<T: std::fmt::Display, S: Serializer>(t: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(t)
}

/// The IKG together with the derived class structure and slot roles.
#[derive(Debug, Clone)]
pub struct Knowledge<'a> {
    pub ikg: &'a Graph,
    pub ontology: Ontology,
    pub roles: RoleMap,
}

impl<'a> Knowledge<'a> {
    pub fn new(ikg: &'a Graph) -> Self {
        Self::with_roles(ikg, RoleMap::default())
    }

    pub fn with_roles(ikg: &'a Graph, roles: RoleMap) -> Self {
        Self {
            ikg,
            ontology: Ontology::from_graph(ikg),
            roles,
        }
    }

    /// Whether `term` may fill a slot of `role`.
    pub fn admissible(&self, term: &Term, role: Role) -> bool {
        match role {
            Role::Value => term.is_literal(),
            _ => {
                term.is_iri()
                    && self
                        .roles
                        .classes
                        .get(&role)
                        .is_some_and(|class| self.ontology.is_a(term, class))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    #[serde(serialize_with = "term_string")]
    pub candidate: Term,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

fn single_placeholder(triple: &Triple) -> Result<bool> {
    match (triple.head.is_placeholder(), triple.tail.is_placeholder()) {
        (false, true) => Ok(true),
        (true, false) => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "link prediction needs exactly one `???` in {triple}"
        ))),
    }
}

/// Every candidate for the open position, best first. Ties keep vocabulary
/// order.
fn rank_all(model: &Kg2eModel, ikg: &Graph, triple: &Triple, role: Role) -> Result<Vec<Prediction>> {
    let predict_tail = single_placeholder(triple)?;
    let vocab = &model.vocab;
    let relation = vocab
        .relation_id(triple.relation_iri())
        .ok_or_else(|| Error::UnknownRelation(triple.relation.to_string()))?;
    let known_term = if predict_tail { &triple.head } else { &triple.tail };
    let known = vocab
        .entity_id(known_term)
        .ok_or_else(|| Error::UnknownEntity(known_term.to_string()))?;

    let candidates: Vec<usize> = if role == Role::Value {
        let mut seen: Vec<usize> = ikg
            .iter()
            .filter(|t| t.relation_iri() == triple.relation_iri() && t.tail.is_literal())
            .filter_map(|t| vocab.entity_id(&t.tail))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    } else {
        (0..vocab.num_entities())
            .filter(|&i| !vocab.entities()[i].is_literal())
            .collect()
    };

    let mut scored: Vec<(usize, f64)> = candidates
        .into_iter()
        .map(|c| {
            let ids = if predict_tail {
                TripleIds::new(known, relation, c)
            } else {
                TripleIds::new(c, relation, known)
            };
            (c, model.score_ids(ids))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (c, score))| Prediction {
            candidate: vocab.entities()[c].clone(),
            score,
            rank: i + 1,
        })
        .collect())
}

/// Step D: the `k` best completions of the open position of `triple`.
/// Literal candidates are offered only for [`Role::Value`], and then only
/// those observed with the relation in the IKG.
pub fn predict_candidates(
    model: &Kg2eModel,
    ikg: &Graph,
    triple: &Triple,
    role: Role,
    k: usize,
) -> Result<Vec<Prediction>> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut all = rank_all(model, ikg, triple, role)?;
    all.truncate(k);
    Ok(all)
}

/// A completed slot with the provenance of its filler and, after
/// verification, its classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotFill {
    pub slot: u32,
    pub role: Role,
    #[serde(serialize_with = "term_string")]
    pub triple: Triple,
    #[serde(serialize_with = "term_string")]
    pub chosen: Term,
    pub rank: usize,
    pub score: f64,
    pub threshold: Option<f64>,
    pub classified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkIntent {
    pub intent_id: String,
    pub keywords: Vec<String>,
    #[serde(serialize_with = "triple_strings")]
    pub complete: Vec<Triple>,
    pub slots: Vec<SlotFill>,
    pub verified: bool,
}

fn triple_strings<S: Serializer>(ts: &[Triple], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(|t| t.to_string()))
}

impl NetworkIntent {
    /// Template triples followed by completed slot triples in slot order.
    pub fn triples(&self) -> Vec<Triple> {
        self.complete
            .iter()
            .cloned()
            .chain(self.slots.iter().map(|s| s.triple.clone()))
            .collect()
    }

    /// Slots whose triple was classified invalid.
    pub fn failing(&self) -> Vec<&SlotFill> {
        self.slots.iter().filter(|s| s.classified == Some(false)).collect()
    }

    pub fn to_graph(&self, prefixes: &BTreeMap<String, String>) -> Graph {
        let mut merged = ns::standard_prefixes();
        merged.extend(prefixes.clone());
        let mut g = Graph::with_prefixes(merged);
        g.extend(self.triples());
        g
    }

    /// Pretty JSON verification report.
    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn substitute(term: &Term, chosen: &BTreeMap<u32, Term>) -> Result<Term> {
    match slot_reference(term) {
        Some(r) => chosen
            .get(&r)
            .cloned()
            .ok_or_else(|| Error::Blueprint(format!("slot:{r} referenced before it was filled"))),
        None => Ok(term.clone()),
    }
}

/// Step E. For each slot, in slot order, walks the top-`k` predictions and
/// keeps the first candidate that is admissible for the slot role and
/// consistent with every hint for that role. Hints that no admissible
/// candidate can satisfy are dropped with a warning.
pub fn complete_template(
    template: &IntentTemplate,
    model: &Kg2eModel,
    knowledge: &Knowledge<'_>,
    hints: &[Hint],
    k: usize,
) -> Result<NetworkIntent> {
    let mut chosen: BTreeMap<u32, Term> = BTreeMap::new();
    let mut slots = Vec::new();
    for s in find_incomplete(template) {
        let open = Triple {
            head: substitute(&s.triple.head, &chosen)?,
            relation: s.triple.relation.clone(),
            tail: substitute(&s.triple.tail, &chosen)?,
        };
        let all = rank_all(model, knowledge.ikg, &open, s.role)?;
        let role_hints: Vec<&Term> = hints.iter().filter(|h| h.role == s.role).map(|h| &h.term).collect();
        let fits_hints = |c: &Term| role_hints.iter().all(|h| knowledge.ontology.consistent_with(c, h));
        let admissible = |p: &&Prediction| knowledge.admissible(&p.candidate, s.role);

        // Decided over the whole candidate list so that the choice does not
        // depend on k.
        let use_hints = if role_hints.is_empty() {
            false
        } else if all.iter().filter(admissible).any(|p| fits_hints(&p.candidate)) {
            true
        } else {
            log::warn!(
                "slot {}: no admissible candidate matches hints {:?}; ignoring them",
                s.slot,
                role_hints.iter().map(|h| h.to_string()).collect::<Vec<_>>()
            );
            false
        };

        let pick = all
            .iter()
            .take(k)
            .filter(admissible)
            .find(|p| !use_hints || fits_hints(&p.candidate))
            .ok_or(Error::UnresolvedSlot { slot: s.slot, k })?;
        if pick.rank > 1 {
            log::info!(
                "slot {}: rank-1 candidate {} rejected, using rank {} {}",
                s.slot,
                all[0].candidate,
                pick.rank,
                pick.candidate
            );
        }
        let filled = Triple {
            head: if open.head.is_placeholder() { pick.candidate.clone() } else { open.head.clone() },
            relation: open.relation.clone(),
            tail: if open.tail.is_placeholder() { pick.candidate.clone() } else { open.tail.clone() },
        };
        chosen.insert(s.slot, pick.candidate.clone());
        slots.push(SlotFill {
            slot: s.slot,
            role: s.role,
            triple: filled,
            chosen: pick.candidate.clone(),
            rank: pick.rank,
            score: pick.score,
            threshold: None,
            classified: None,
        });
    }
    let complete = template
        .complete
        .iter()
        .map(|t| {
            Ok(Triple {
                head: substitute(&t.head, &chosen)?,
                relation: t.relation.clone(),
                tail: substitute(&t.tail, &chosen)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NetworkIntent {
        intent_id: template.intent_id.clone(),
        keywords: Vec::new(),
        complete,
        slots,
        verified: false,
    })
}

/// Classification outcome for one triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    #[serde(serialize_with = "term_string")]
    pub triple: Triple,
    pub score: f64,
    pub threshold: f64,
    pub valid: bool,
}

fn verdict(model: &Kg2eModel, triple: &Triple, thresholds: &ThresholdTable) -> Result<Verdict> {
    if triple.has_placeholder() {
        return Err(Error::PlaceholderPresent);
    }
    let ids = model.vocab.encode(triple)?;
    let (valid, score) = classify_ids(model, ids, thresholds)?;
    Ok(Verdict {
        triple: triple.clone(),
        score,
        threshold: thresholds.threshold_for(ids.relation),
        valid,
    })
}

/// Classifies every triple of a graph.
pub fn verify_triples(graph: &Graph, model: &Kg2eModel, thresholds: &ThresholdTable) -> Result<Vec<Verdict>> {
    graph.iter().map(|t| verdict(model, t, thresholds)).collect()
}

/// Step F: classifies every formerly slotted triple; the intent is verified
/// iff all of them are valid.
pub fn verify_intent(
    mut candidate: NetworkIntent,
    model: &Kg2eModel,
    thresholds: &ThresholdTable,
) -> Result<NetworkIntent> {
    if candidate.complete.iter().any(Triple::has_placeholder) {
        return Err(Error::PlaceholderPresent);
    }
    for s in &mut candidate.slots {
        let v = verdict(model, &s.triple, thresholds)?;
        s.threshold = Some(v.threshold);
        s.classified = Some(v.valid);
    }
    candidate.verified = candidate.slots.iter().all(|s| s.classified == Some(true));
    Ok(candidate)
}

/// Everything [`translate`] needs besides the request text.
#[derive(Debug, Clone)]
pub struct Translator<'a> {
    pub model: &'a Kg2eModel,
    pub knowledge: Knowledge<'a>,
    pub corpus: &'a KeywordCorpus,
    pub blueprint: &'a Graph,
    pub thresholds: &'a ThresholdTable,
    pub k: usize,
}

impl Translator<'_> {
    pub fn translate(&self, text: &str) -> Result<NetworkIntent> {
        translate(text, self)
    }
}

/// Steps A to F. A verified intent is returned as `Ok`; one that fails
/// verification comes back inside [`Error::NotVerified`].
pub fn translate(text: &str, t: &Translator<'_>) -> Result<NetworkIntent> {
    let matches = extract_keywords(text, t.corpus);
    let keywords: Vec<String> = matches.iter().map(|m| m.keyword.clone()).collect();
    log::info!("step A: keywords {keywords:?}");
    let hints: Vec<Hint> = matches.into_iter().flat_map(|m| m.hints).collect();

    let template = build_template(t.blueprint, &keywords, &t.knowledge.roles)?;
    log::info!(
        "step B/C: {} complete triple(s), {} slot(s)",
        template.complete.len(),
        template.slotted.len()
    );
    let mut candidate = complete_template(&template, t.model, &t.knowledge, &hints, t.k)?;
    candidate.keywords = keywords;
    let intent = verify_intent(candidate, t.model, t.thresholds)?;
    if intent.verified {
        Ok(intent)
    } else {
        Err(Error::NotVerified(Box::new(intent)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, ModelConfig};
    use crate::rdf::{build_vocab, parse, Format};

    const IKG: &str = "\
@prefix icm: <http://ikg.example.org/icm#> .
@prefix service: <http://ikg.example.org/service#> .
@prefix kpi: <http://ikg.example.org/kpi#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
service:Service rdfs:subclass service:VideoService .
service:VideoService rdfs:subclass service:ConvVideo , service:Stream .
service:Resource rdfs:subclass service:GBR .
service:GBR rdfs:subclass service:GbrA , service:GbrB .
service:ConvVideo icm:targetResource service:GbrA .
service:Stream icm:targetResource service:GbrB .
icm:PropertyExpectation icm:hasTarget service:ConvVideo .
icm:PropertyParameter rdfs:subclass kpi:latency .
kpi:latency icm:valueBy \"150ms\"^^xsd:string , \"20ms\"^^xsd:string .
";

    const BLUEPRINT: &str = "\
@prefix icm: <http://ikg.example.org/icm#> .
@prefix kpi: <http://ikg.example.org/kpi#> .
@prefix slot: <urn:ikg:slot:> .
icm:Intent icm:hasExpectation icm:PropertyExpectation .
icm:PropertyExpectation icm:hasTarget ??? .
slot:0 icm:targetResource ??? .
kpi:latency icm:valueBy ??? .
";

    fn setup() -> (Graph, Kg2eModel) {
        let g = parse(IKG, Format::TurtleSubset).unwrap();
        let cfg = ModelConfig { dim: 8, ..ModelConfig::default() };
        let m = init_model(build_vocab(&g).unwrap(), cfg, 5).unwrap();
        (g, m)
    }

    fn iri(ns: &str, local: &str) -> Term {
        Term::iri(format!("{ns}{local}"))
    }

    #[test]
    fn predictions_match_brute_force() {
        let (g, m) = setup();
        let open = Triple::new(iri(ns::ICM, "PropertyExpectation"), Term::iri(ns::HAS_TARGET), Term::Placeholder(0)).unwrap();
        let preds = predict_candidates(&m, &g, &open, Role::Service, 5).unwrap();
        assert_eq!(preds.len(), 5);
        let r = m.vocab.relation_id(ns::HAS_TARGET).unwrap();
        let h = m.vocab.entity_id(&open.head).unwrap();
        let mut oracle: Vec<(f64, usize)> = (0..m.num_entities())
            .filter(|&e| !m.vocab.entities()[e].is_literal())
            .map(|e| (m.score(TripleIds::new(h, r, e)).unwrap(), e))
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (p, (s, e)) in preds.iter().zip(oracle) {
            assert_eq!(p.candidate, m.vocab.entities()[e]);
            assert_eq!(p.score, s);
        }
        assert_eq!(preds.iter().map(|p| p.rank).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
        assert!(preds.windows(2).all(|w| w[0].score >= w[1].score));
        assert_eq!(predict_candidates(&m, &g, &open, Role::Service, 1).unwrap().len(), 1);
        assert!(predict_candidates(&m, &g, &open, Role::Service, 0).is_err());
    }

    #[test]
    fn value_slots_only_offer_observed_literals() {
        let (g, m) = setup();
        let open = Triple::new(iri(ns::KPI, "latency"), Term::iri(ns::VALUE_BY), Term::Placeholder(0)).unwrap();
        let preds = predict_candidates(&m, &g, &open, Role::Value, 10).unwrap();
        assert_eq!(preds.len(), 2);
        assert!(preds.iter().all(|p| p.candidate.is_literal()));
        let service = predict_candidates(&m, &g, &open, Role::Service, 100).unwrap();
        assert!(service.iter().all(|p| !p.candidate.is_literal()));
    }

    #[test]
    fn unknown_known_side_rejected() {
        let (g, m) = setup();
        let open = Triple::new(iri(ns::ICM, "Nope"), Term::iri(ns::HAS_TARGET), Term::Placeholder(0)).unwrap();
        assert!(matches!(predict_candidates(&m, &g, &open, Role::Service, 3), Err(Error::UnknownEntity(_))));
    }

    fn template() -> IntentTemplate {
        let bp = parse(BLUEPRINT, Format::TurtleSubset).unwrap();
        build_template(&bp, &[], &RoleMap::default()).unwrap()
    }

    #[test]
    fn completion_respects_admissibility_and_chains_slots() {
        let (g, m) = setup();
        let knowledge = Knowledge::new(&g);
        let intent = complete_template(&template(), &m, &knowledge, &[], 50).unwrap();
        assert_eq!(intent.slots.len(), 3);
        let service = &intent.slots[0].chosen;
        assert!(knowledge.admissible(service, Role::Service));
        assert_eq!(&intent.slots[1].triple.head, service);
        assert!(knowledge.admissible(&intent.slots[1].chosen, Role::Resource));
        assert!(intent.slots[2].chosen.is_literal());
        assert!(intent.triples().iter().all(|t| !t.has_placeholder()));
        for s in &intent.slots {
            let mut open = s.triple.clone();
            open.tail = Term::Placeholder(s.slot);
            let preds = predict_candidates(&m, &g, &open, s.role, 50).unwrap();
            let first_ok = preds.iter().find(|p| knowledge.admissible(&p.candidate, s.role)).unwrap();
            assert_eq!(first_ok.rank, s.rank);
            assert_eq!(first_ok.score, s.score);
        }
    }

    #[test]
    fn hints_narrow_the_choice() {
        let (g, m) = setup();
        let knowledge = Knowledge::new(&g);
        for target in ["GbrA", "GbrB"] {
            let hint = Hint { role: Role::Service, term: iri(ns::SERVICE, target) };
            let intent = complete_template(&template(), &m, &knowledge, &[hint], 50).unwrap();
            let expect = if target == "GbrA" { "ConvVideo" } else { "Stream" };
            assert_eq!(intent.slots[0].chosen, iri(ns::SERVICE, expect));
        }
        // An unsatisfiable hint is ignored rather than blocking the slot.
        let hint = Hint { role: Role::Service, term: iri(ns::KPI, "latency") };
        let intent = complete_template(&template(), &m, &knowledge, &[hint], 50).unwrap();
        assert!(knowledge.admissible(&intent.slots[0].chosen, Role::Service));
    }

    #[test]
    fn selection_is_stable_in_k() {
        let (g, m) = setup();
        let knowledge = Knowledge::new(&g);
        let mut resolved: Option<Vec<Term>> = None;
        for k in 1..20 {
            match complete_template(&template(), &m, &knowledge, &[], k) {
                Ok(intent) => {
                    let chosen: Vec<Term> = intent.slots.iter().map(|s| s.chosen.clone()).collect();
                    assert!(intent.slots.iter().all(|s| s.rank <= k));
                    if let Some(prev) = &resolved {
                        assert_eq!(prev, &chosen);
                    }
                    resolved = Some(chosen);
                }
                Err(Error::UnresolvedSlot { k: kk, .. }) => {
                    assert_eq!(kk, k);
                    assert!(resolved.is_none());
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(resolved.is_some());
    }

    #[test]
    fn verification_is_conjunction_of_classifications() {
        let (g, m) = setup();
        let knowledge = Knowledge::new(&g);
        let cand = complete_template(&template(), &m, &knowledge, &[], 50).unwrap();
        let ok = verify_intent(cand.clone(), &m, &ThresholdTable::uniform(f64::NEG_INFINITY)).unwrap();
        assert!(ok.verified);
        assert!(ok.failing().is_empty());

        let value_rel = m.vocab.relation_id(ns::VALUE_BY).unwrap();
        let mut th = ThresholdTable::uniform(f64::NEG_INFINITY);
        th.per_relation.insert(value_rel, f64::INFINITY);
        let bad = verify_intent(cand, &m, &th).unwrap();
        assert!(!bad.verified);
        let failing = bad.failing();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].slot, 2);
    }

    #[test]
    fn translate_is_deterministic_and_reports_failures() {
        let (g, m) = setup();
        let bp = parse(BLUEPRINT, Format::TurtleSubset).unwrap();
        let corpus = KeywordCorpus::parse("video\tservice\tservice:VideoService\n", g.prefixes(), &m.vocab).unwrap();
        let open = ThresholdTable::uniform(f64::NEG_INFINITY);
        let t = Translator {
            model: &m,
            knowledge: Knowledge::new(&g),
            corpus: &corpus,
            blueprint: &bp,
            thresholds: &open,
            k: 50,
        };
        let a = t.translate("a video please").unwrap();
        let b = t.translate("a video please").unwrap();
        assert_eq!(a.report_json().unwrap(), b.report_json().unwrap());
        assert_eq!(a.keywords, ["video"]);
        let nothing = t.translate("no keywords here").unwrap();
        assert!(nothing.keywords.is_empty());

        let closed = ThresholdTable::uniform(f64::INFINITY);
        let t = Translator { thresholds: &closed, ..t };
        match t.translate("video") {
            Err(Error::NotVerified(intent)) => assert_eq!(intent.failing().len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_prediction_window_is_unresolved() {
        let (g, m) = setup();
        let knowledge = Knowledge::new(&g);
        let err = complete_template(&template(), &m, &knowledge, &[], 0).unwrap_err();
        assert!(matches!(err, Error::UnresolvedSlot { slot: 0, k: 0 }));
    }
}
