use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ns;
use crate::rdf::{Graph, Term};

/// Class structure of the IKG: `rdfs:subclass` edges (parent → child) and
/// `rdf:type` assertions.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    children: HashMap<Term, Vec<Term>>,
    types: HashMap<Term, Vec<Term>>,
    outgoing: HashMap<Term, Vec<(String, Term)>>,
}

impl Ontology {
    pub fn from_graph(ikg: &Graph) -> Self {
        let mut o = Self::default();
        for t in ikg {
            match t.relation_iri() {
                ns::RDFS_SUBCLASS => o.children.entry(t.head.clone()).or_default().push(t.tail.clone()),
                ns::RDF_TYPE => o.types.entry(t.head.clone()).or_default().push(t.tail.clone()),
                _ => {}
            }
            o.outgoing
                .entry(t.head.clone())
                .or_default()
                .push((t.relation_iri().to_owned(), t.tail.clone()));
        }
        o
    }

    /// `class` and everything below it through subclass edges.
    pub fn descendants(&self, class: &Term) -> BTreeSet<Term> {
        let mut seen = BTreeSet::from([class.clone()]);
        let mut stack = vec![class];
        while let Some(c) = stack.pop() {
            for child in self.children.get(c).into_iter().flatten() {
                if seen.insert(child.clone()) {
                    stack.push(child);
                }
            }
        }
        seen
    }

    /// Strict subclass of `class`, or typed by `class` or one of its
    /// subclasses.
    pub fn is_a(&self, term: &Term, class: &Term) -> bool {
        if term == class {
            return false;
        }
        let below = self.descendants(class);
        below.contains(term)
            || self
                .types
                .get(term)
                .is_some_and(|ts| ts.iter().any(|t| below.contains(t)))
    }

    /// Whether `term` agrees with a keyword hint: it is the hinted entity,
    /// falls under it, or links (by a non-taxonomic edge) to something that
    /// does.
    pub fn consistent_with(&self, term: &Term, hint: &Term) -> bool {
        let under = |t: &Term| t == hint || self.is_a(t, hint);
        under(term)
            || self.outgoing.get(term).is_some_and(|edges| {
                edges
                    .iter()
                    .filter(|(r, _)| r != ns::RDFS_SUBCLASS && r != ns::RDF_TYPE)
                    .any(|(_, t)| under(t))
            })
    }

    /// Every term that has an `rdf:type` or appears below `class`; used by
    /// tests and reports.
    pub fn members(&self, class: &Term) -> HashSet<Term> {
        let below = self.descendants(class);
        let mut out: HashSet<Term> = below.iter().filter(|t| *t != class).cloned().collect();
        for (term, ts) in &self.types {
            if ts.iter().any(|t| below.contains(t)) {
                out.insert(term.clone());
            }
        }
        out
    }
}
