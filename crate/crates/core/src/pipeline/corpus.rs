use std::collections::BTreeMap;

use serde::Serialize;

use super::Role;
use crate::error::{Error, Result};
use crate::rdf::{parse_term, Term, Vocab};

/// One entity suggested by a keyword, tagged with the slot role it informs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hint {
    pub role: Role,
    #[serde(serialize_with = "super::term_string")]
    pub term: Term,
}

/// Gazetteer of intent keywords. Keys are lower-cased and whitespace
/// normalised; phrases are allowed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordCorpus {
    entries: BTreeMap<String, Vec<Hint>>,
    /// Longest key, in tokens.
    max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordMatch {
    pub keyword: String,
    pub hints: Vec<Hint>,
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn resolve_term(raw: &str, prefixes: &BTreeMap<String, String>) -> Option<Term> {
    if raw.starts_with('<') {
        return parse_term(raw).ok().filter(Term::is_iri);
    }
    let (prefix, local) = raw.split_once(':')?;
    prefixes.get(prefix).map(|ns| Term::iri(format!("{ns}{local}")))
}

impl KeywordCorpus {
    /// Reads `keyword TAB role TAB entity` lines. Entities are `<iri>` or
    /// prefixed names resolved through `prefixes`, and must be IKG entities.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, prefixes: &BTreeMap<String, String>, vocab: &Vocab) -> Result<Self> {
        let mut corpus = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| Error::Corpus {
                line: line_no,
                message,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [keyword, role, entity] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let role: Role = role.parse().map_err(err)?;
            let term = resolve_term(entity, prefixes)
                .ok_or_else(|| err(format!("cannot resolve entity `{entity}`")))?;
            if vocab.entity_id(&term).is_none() {
                return Err(err(format!("entity {term} is not in the IKG")));
            }
            corpus.insert(keyword, Hint { role, term }).map_err(err)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, keyword: &str, hint: Hint) -> std::result::Result<(), String> {
        let toks = tokens(keyword);
        if toks.is_empty() {
            return Err(format!("empty keyword `{keyword}`"));
        }
        self.max_len = self.max_len.max(toks.len());
        let hints = self.entries.entry(toks.join(" ")).or_default();
        if !hints.contains(&hint) {
            hints.push(hint);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hints(&self, keyword: &str) -> Option<&[Hint]> {
        self.entries.get(keyword).map(Vec::as_slice)
    }
}

/// Step A. Case-insensitive, longest-match-first scan; each keyword is
/// reported once, at its first position.
pub fn extract_keywords(text: &str, corpus: &KeywordCorpus) -> Vec<KeywordMatch> {
    let toks = tokens(text);
    let mut found: Vec<KeywordMatch> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let longest = (1..=corpus.max_len.min(toks.len() - i)).rev().find_map(|n| {
            let key = toks[i..i + n].join(" ");
            corpus.entries.get(&key).map(|hints| (n, key, hints))
        });
        match longest {
            Some((n, keyword, hints)) => {
                if !found.iter().any(|m| m.keyword == keyword) {
                    found.push(KeywordMatch {
                        keyword,
                        hints: hints.clone(),
                    });
                }
                i += n;
            }
            None => i += 1,
        }
    }
    found
}
