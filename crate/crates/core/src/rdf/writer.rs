use std::fmt::Write;

use super::{Format, Graph, Term};

pub(crate) fn escape_literal(lexical: &str) -> String {
    let mut out = String::with_capacity(lexical.len());
    for c in lexical.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn valid_local(local: &str) -> bool {
    let ok_char = |c: char| c.is_alphanumeric() || c == '_' || c == '-' || c == '.';
    local.chars().all(ok_char)
        && !local.starts_with(['.', '-'])
        && !local.ends_with('.')
}

/// Longest matching namespace wins; ties go to the lexicographically
/// smallest prefix, which is the first one seen in BTreeMap order.
fn compact(graph: &Graph, iri: &str) -> String {
    let mut best: Option<(&str, &str)> = None;
    for (prefix, ns) in graph.prefixes() {
        if let Some(local) = iri.strip_prefix(ns.as_str()) {
            if valid_local(local) && best.is_none_or(|(_, b)| ns.len() > b.len()) {
                best = Some((prefix, ns));
            }
        }
    }
    match best {
        Some((prefix, ns)) => format!("{prefix}:{}", &iri[ns.len()..]),
        None => format!("<{iri}>"),
    }
}

fn render(graph: &Graph, term: &Term, format: Format) -> String {
    match (format, term) {
        (Format::TurtleSubset, Term::Iri(iri)) => compact(graph, iri),
        (Format::TurtleSubset, Term::Literal { lexical, datatype: Some(dt) }) => {
            format!("\"{}\"^^{}", escape_literal(lexical), compact(graph, dt))
        }
        _ => term.to_string(),
    }
}

/// Deterministic rendering: prefixes sorted by name, triples in insertion
/// order, one statement per line. N-Triples output carries no prefixes.
pub fn serialize(graph: &Graph, format: Format) -> String {
    let mut out = String::new();
    if format == Format::TurtleSubset {
        for (prefix, ns) in graph.prefixes() {
            let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
        }
        if !graph.prefixes().is_empty() && !graph.is_empty() {
            out.push('\n');
        }
    }
    for t in graph {
        let _ = writeln!(
            out,
            "{} {} {} .",
            render(graph, &t.head, format),
            render(graph, &t.relation, format),
            render(graph, &t.tail, format)
        );
    }
    out
}
