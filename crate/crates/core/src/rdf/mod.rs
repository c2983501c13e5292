//! RDF triple sets: terms, graphs, dense vocabularies and the text formats
//! used for the intent knowledge graph, blueprints and network intents.
//!
//! IRIs are stored fully expanded. Prefixes are kept on the [`Graph`] only so
//! that Turtle output can be compacted again.

mod parser;
mod writer;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parser::{parse, parse_term};
pub use writer::serialize;

/// Text formats understood by [`parse`] and [`serialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    NTriples,
    /// `@prefix`, prefixed names, `a`, `;` and `,` lists, typed literals.
    /// No blank nodes, collections or language tags.
    TurtleSubset,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal {
        lexical: String,
        datatype: Option<String>,
    },
    /// The `???` token of a slotted template triple.
    Placeholder(u32),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn literal(lexical: impl Into<String>, datatype: Option<&str>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            datatype: datatype.map(str::to_owned),
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    pub fn is_placeholder(&self) -> bool {
        matches!(self, Term::Placeholder(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }
}

/// N-Triples rendering; [`parse_term`] reads it back.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal { lexical, datatype } => {
                write!(f, "\"{}\"", writer::escape_literal(lexical))?;
                if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
            Term::Placeholder(_) => f.write_str("???"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: Term,
    pub relation: Term,
    pub tail: Term,
}

impl Triple {
    /// Checks the structural rules: the relation is an IRI and the head is
    /// not a literal.
    pub fn new(head: Term, relation: Term, tail: Term) -> Result<Self> {
        if !relation.is_iri() {
            return Err(Error::InvalidTriple(format!(
                "relation must be an IRI, got {relation}"
            )));
        }
        if head.is_literal() {
            return Err(Error::InvalidTriple(format!(
                "literal {head} cannot be a subject"
            )));
        }
        Ok(Self {
            head,
            relation,
            tail,
        })
    }

    pub fn relation_iri(&self) -> &str {
        self.relation.as_iri().expect("relation is always an IRI")
    }

    pub fn placeholders(&self) -> impl Iterator<Item = u32> + '_ {
        [&self.head, &self.tail].into_iter().filter_map(|t| match t {
            Term::Placeholder(id) => Some(*id),
            _ => None,
        })
    }

    pub fn has_placeholder(&self) -> bool {
        self.head.is_placeholder() || self.tail.is_placeholder()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.head, self.relation, self.tail)
    }
}

/// An ordered fact set. Equality is set equality on triples plus equality of
/// the prefix maps; order only drives serialization and vocabulary indexing.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    index: HashSet<Triple>,
    prefixes: BTreeMap<String, String>,
    duplicates: usize,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(prefixes: BTreeMap<String, String>) -> Self {
        Self {
            prefixes,
            ..Self::default()
        }
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut g = Self::new();
        g.extend(triples);
        g
    }

    /// Inserts a triple; returns false (and counts a duplicate) when the
    /// triple is already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.index.contains(&triple) {
            self.duplicates += 1;
            return false;
        }
        self.index.insert(triple.clone());
        self.triples.push(triple);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.index.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn set_prefix(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    /// Number of duplicate insertions collapsed so far.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn has_placeholders(&self) -> bool {
        self.triples.iter().any(Triple::has_placeholder)
    }

    /// Expands `prefix:local` against the prefix map.
    pub fn expand(&self, pname: &str) -> Option<String> {
        let (prefix, local) = pname.split_once(':')?;
        self.prefixes.get(prefix).map(|ns| format!("{ns}{local}"))
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && self.prefixes == other.prefixes
    }
}

impl Eq for Graph {}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

/// A triple encoded against a [`Vocab`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleIds {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl TripleIds {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Dense, bijective indexing of entities and relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entities: Vec<Term>,
    entity_index: HashMap<Term, usize>,
    relations: Vec<String>,
    relation_index: HashMap<String, usize>,
}

/// Collects entities (heads and tails) and relations in first-seen order.
pub fn build_vocab(graph: &Graph) -> Result<Vocab> {
    if graph.has_placeholders() {
        return Err(Error::PlaceholderPresent);
    }
    let mut vocab = Vocab::default();
    for t in graph {
        vocab.intern_entity(&t.head);
        vocab.intern_relation(t.relation_iri());
        vocab.intern_entity(&t.tail);
    }
    Ok(vocab)
}

impl Vocab {
    /// Rebuilds a vocabulary from its index-ordered parts.
    pub fn from_parts(entities: Vec<Term>, relations: Vec<String>) -> Result<Self> {
        let mut vocab = Vocab::default();
        for e in &entities {
            if e.is_placeholder() {
                return Err(Error::PlaceholderPresent);
            }
            if vocab.entity_index.contains_key(e) {
                return Err(Error::ModelFormat(format!("duplicate entity {e}")));
            }
            vocab.intern_entity(e);
        }
        for r in &relations {
            if vocab.relation_index.contains_key(r) {
                return Err(Error::ModelFormat(format!("duplicate relation <{r}>")));
            }
            vocab.intern_relation(r);
        }
        Ok(vocab)
    }

    fn intern_entity(&mut self, term: &Term) -> usize {
        if let Some(&i) = self.entity_index.get(term) {
            return i;
        }
        let i = self.entities.len();
        self.entities.push(term.clone());
        self.entity_index.insert(term.clone(), i);
        i
    }

    fn intern_relation(&mut self, iri: &str) -> usize {
        if let Some(&i) = self.relation_index.get(iri) {
            return i;
        }
        let i = self.relations.len();
        self.relations.push(iri.to_owned());
        self.relation_index.insert(iri.to_owned(), i);
        i
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }

    pub fn entities(&self) -> &[Term] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn entity(&self, index: usize) -> Option<&Term> {
        self.entities.get(index)
    }

    pub fn relation(&self, index: usize) -> Option<&str> {
        self.relations.get(index).map(String::as_str)
    }

    pub fn entity_id(&self, term: &Term) -> Option<usize> {
        self.entity_index.get(term).copied()
    }

    pub fn relation_id(&self, iri: &str) -> Option<usize> {
        self.relation_index.get(iri).copied()
    }

    pub fn encode(&self, triple: &Triple) -> Result<TripleIds> {
        if triple.has_placeholder() {
            return Err(Error::PlaceholderPresent);
        }
        let lookup = |t: &Term| {
            self.entity_id(t)
                .ok_or_else(|| Error::UnknownEntity(t.to_string()))
        };
        let relation = self
            .relation_id(triple.relation_iri())
            .ok_or_else(|| Error::UnknownRelation(triple.relation.to_string()))?;
        Ok(TripleIds::new(
            lookup(&triple.head)?,
            relation,
            lookup(&triple.tail)?,
        ))
    }

    pub fn decode(&self, ids: TripleIds) -> Result<Triple> {
        let entity = |i: usize| {
            self.entity(i).cloned().ok_or(Error::IndexOutOfRange {
                kind: "entity",
                index: i,
                len: self.num_entities(),
            })
        };
        let relation = self.relation(ids.relation).ok_or(Error::IndexOutOfRange {
            kind: "relation",
            index: ids.relation,
            len: self.num_relations(),
        })?;
        Triple::new(entity(ids.head)?, Term::iri(relation), entity(ids.tail)?)
    }

    pub fn encode_graph(&self, graph: &Graph) -> Result<Vec<TripleIds>> {
        graph.iter().map(|t| self.encode(t)).collect()
    }
}
