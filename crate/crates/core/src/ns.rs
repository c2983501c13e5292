//! Namespaces of the intent knowledge graph.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const ICM: &str = "http://ikg.example.org/icm#";
pub const SERVICE: &str = "http://ikg.example.org/service#";
pub const MCPTT: &str = "http://ikg.example.org/mcptt#";
pub const NONMCPTT: &str = "http://ikg.example.org/nonmcptt#";
pub const KPI: &str = "http://ikg.example.org/kpi#";
/// Back-references to earlier template slots (`slot:0`, `slot:1`, ...).
pub const SLOT: &str = "urn:ikg:slot:";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
/// Subclass edge, spelled as in the IKG (parent as subject, child as object).
pub const RDFS_SUBCLASS: &str = "http://www.w3.org/2000/01/rdf-schema#subclass";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

pub const HAS_TARGET: &str = "http://ikg.example.org/icm#hasTarget";
pub const TARGET_RESOURCE: &str = "http://ikg.example.org/icm#targetResource";
pub const HAS_PARAMETER: &str = "http://ikg.example.org/icm#hasParameter";
pub const VALUE_BY: &str = "http://ikg.example.org/icm#valueBy";
pub const HAS_EXPECTATION: &str = "http://ikg.example.org/icm#hasExpectation";

/// Prefix table used for every file this crate writes.
pub fn standard_prefixes() -> std::collections::BTreeMap<String, String> {
    [
        ("rdf", RDF),
        ("rdfs", RDFS),
        ("xsd", XSD),
        ("icm", ICM),
        ("service", SERVICE),
        ("mcptt", MCPTT),
        ("nonmcptt", NONMCPTT),
        ("kpi", KPI),
    ]
    .into_iter()
    .map(|(p, ns)| (p.to_owned(), ns.to_owned()))
    .collect()
}
