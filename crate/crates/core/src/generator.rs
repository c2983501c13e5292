//! Deterministic synthetic intent knowledge graph.
//!
//! The graph has an intent-model skeleton (intent, expectations, targets,
//! parameters), a service taxonomy split by category, a resource taxonomy
//! split into guaranteed-bit-rate domains, KPI parameters with literal
//! values, and per-service links to resources and KPIs. Services in the same
//! domain, category and resource cluster share their link pattern.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ns;
use crate::rdf::{Graph, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkgGenSpec {
    pub seed: u64,
    pub n_services: usize,
    /// Resource leaves, spread over the three domains.
    pub n_resources: usize,
    pub n_kpis: usize,
    pub target_triples: usize,
}

impl Default for IkgGenSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            n_services: 150,
            n_resources: 30,
            n_kpis: 12,
            target_triples: 1575,
        }
    }
}

/// Allowed relative shortfall below the target.
pub const TOLERANCE: f64 = 0.02;

const DOMAINS: [&str; 3] = ["GBR", "NonGBR", "DelayCriticalGBR"];
const DOMAIN_TAGS: [&str; 3] = ["Gbr", "NonGbr", "DcGbr"];
const CATEGORIES: [&str; 6] = ["Video", "Voice", "Data", "Messaging", "Gaming", "Telemetry"];
const KPIS: [(&str, &str); 10] = [
    ("latency", "ms"),
    ("throughput", "Mbps"),
    ("jitter", "ms"),
    ("packetLoss", "%"),
    ("availability", "%"),
    ("bitrate", "Mbps"),
    ("delayBudget", "ms"),
    ("errorRate", "%"),
    ("setupTime", "ms"),
    ("reliability", "%"),
];

fn iri(namespace: &str, local: &str) -> Term {
    Term::iri(format!("{namespace}{local}"))
}

struct Builder {
    core: Vec<Triple>,
    optional: Vec<Triple>,
}

impl Builder {
    fn push(&mut self, core: bool, h: Term, r: &str, t: Term) {
        let triple = Triple::new(h, Term::iri(r), t).expect("generator triples are well formed");
        if core {
            self.core.push(triple);
        } else {
            self.optional.push(triple);
        }
    }
}

fn expectation(domain: usize, category: usize) -> Term {
    if domain == 0 && category == 0 {
        iri(ns::ICM, "PropertyExpectation")
    } else {
        iri(ns::ICM, &format!("{}{}Expectation", DOMAIN_TAGS[domain], CATEGORIES[category]))
    }
}

fn validate(spec: &IkgGenSpec) -> Result<()> {
    let bad = |m: String| Err(Error::Infeasible(m));
    if spec.n_services == 0 || spec.target_triples == 0 {
        return bad("n_services and target_triples must be positive".into());
    }
    if spec.n_resources < DOMAINS.len() + 1 {
        return bad(format!("n_resources must be at least {}", DOMAINS.len() + 1));
    }
    Ok(())
}

/// Builds the graph, trimming optional triples so the count equals the
/// target whenever enough are available.
pub fn gen_ikg(spec: &IkgGenSpec) -> Result<Graph> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        core: Vec::new(),
        optional: Vec::new(),
    };
    let sub = ns::RDFS_SUBCLASS;

    // Intent-model skeleton.
    let intent = iri(ns::ICM, "Intent");
    let target = iri(ns::ICM, "Target");
    let service_root = iri(ns::SERVICE, "Service");
    let resource_root = iri(ns::SERVICE, "Resource");
    let parameter = iri(ns::ICM, "PropertyParameter");
    b.push(true, intent.clone(), ns::HAS_EXPECTATION, iri(ns::ICM, "Expectation"));
    b.push(true, iri(ns::ICM, "Expectation"), ns::HAS_TARGET, target.clone());
    b.push(true, iri(ns::ICM, "PropertyExpectation"), ns::HAS_PARAMETER, parameter.clone());
    b.push(true, target.clone(), sub, service_root.clone());
    b.push(true, target, sub, resource_root.clone());
    for (d, domain) in DOMAINS.iter().enumerate() {
        b.push(true, resource_root.clone(), sub, iri(ns::SERVICE, domain));
        for c in 0..CATEGORIES.len() {
            let e = expectation(d, c);
            b.push(true, iri(ns::ICM, "Expectation"), sub, e.clone());
            b.push(false, intent.clone(), ns::HAS_EXPECTATION, e);
        }
    }
    for cat in CATEGORIES {
        b.push(true, service_root.clone(), sub, iri(ns::SERVICE, &format!("{cat}Service")));
    }

    // Resources, round-robin over domains, grouped into clusters of three.
    let mut resources: [Vec<Term>; 3] = Default::default();
    for i in 0..spec.n_resources {
        let d = i % DOMAINS.len();
        let n = resources[d].len();
        let leaf = match (d, n) {
            (0, 0) => iri(ns::SERVICE, "NonMcpttGBRService"),
            (0, 1) => iri(ns::SERVICE, "McpttGBRService"),
            _ => iri(ns::SERVICE, &format!("{}Res{n}", DOMAIN_TAGS[d])),
        };
        let anchor = d == 0 && n < 2;
        b.push(anchor, iri(ns::SERVICE, DOMAINS[d]), sub, leaf.clone());
        resources[d].push(leaf);
    }
    let clusters: Vec<Vec<&[Term]>> = resources
        .iter()
        .map(|rs| {
            let mut cs: Vec<&[Term]> = rs.chunks(3).collect();
            if cs.len() > 1 && cs.last().is_some_and(|c| c.len() < 3) {
                let n = cs.len();
                let start = (n - 2) * 3;
                cs.truncate(n - 2);
                cs.push(&rs[start..]);
            }
            cs
        })
        .collect();

    // KPIs with literal values; KPI i belongs to domain i mod 3.
    let mut domain_kpis: [Vec<Term>; 3] = Default::default();
    for i in 0..spec.n_kpis {
        let (name, unit) = KPIS
            .get(i)
            .map(|&(n, u)| (n.to_owned(), u))
            .unwrap_or_else(|| (format!("kpi{i}"), "%"));
        let kpi = iri(ns::KPI, &name);
        b.push(i == 0, parameter.clone(), sub, kpi.clone());
        let mut values: Vec<u32> = if i == 0 { vec![150] } else { Vec::new() };
        while values.len() < 3 {
            let v = rng.random_range(1..100u32) * 5;
            if !values.contains(&v) {
                values.push(v);
            }
        }
        for (j, v) in values.into_iter().enumerate() {
            let lit = Term::literal(format!("{v}{unit}"), Some(ns::XSD_STRING));
            b.push(i == 0 && j == 0, kpi.clone(), ns::VALUE_BY, lit);
        }
        domain_kpis[i % DOMAINS.len()].push(kpi);
    }
    for (d, rs) in resources.iter().enumerate() {
        for r in rs {
            for k in &domain_kpis[d] {
                b.push(false, r.clone(), ns::HAS_PARAMETER, k.clone());
            }
        }
    }

    // Services: domain, then category, then cluster vary fastest to slowest.
    let mut per_profile: std::collections::HashMap<(usize, usize, usize), usize> = Default::default();
    for i in 0..spec.n_services {
        let d = i % DOMAINS.len();
        let c = (i / DOMAINS.len()) % CATEGORIES.len();
        let k = (i / (DOMAINS.len() * CATEGORIES.len())) % clusters[d].len();
        let n = per_profile.entry((d, c, k)).or_default();
        let anchor = (d, c, k, *n) == (0, 0, 0, 0);
        let svc = if anchor {
            iri(ns::NONMCPTT, "ConvVideo")
        } else {
            let space = if n.is_multiple_of(2) { ns::NONMCPTT } else { ns::MCPTT };
            iri(space, &format!("{}{}C{k}N{n}", CATEGORIES[c], DOMAIN_TAGS[d]))
        };
        *n += 1;
        b.push(anchor, iri(ns::SERVICE, &format!("{}Service", CATEGORIES[c])), sub, svc.clone());
        b.push(anchor, expectation(d, c), ns::HAS_TARGET, svc.clone());
        for r in clusters[d][k] {
            let keep = anchor && r.as_iri().is_some_and(|s| s.ends_with("GBRService"));
            b.push(keep, svc.clone(), ns::TARGET_RESOURCE, r.clone());
        }
        for kpi in &domain_kpis[d] {
            b.push(false, svc.clone(), ns::HAS_PARAMETER, kpi.clone());
        }
    }

    let Builder { core, optional } = b;
    let available = core.len() + optional.len();
    let min = (spec.target_triples as f64 * (1.0 - TOLERANCE)).ceil() as usize;
    if available < min || core.len() > spec.target_triples {
        return Err(Error::Infeasible(format!(
            "{available} triples available ({} required), target {} ± {:.0}%",
            core.len(),
            spec.target_triples,
            TOLERANCE * 100.0
        )));
    }
    let keep = spec.target_triples.min(available) - core.len();
    let mut order: Vec<usize> = (0..optional.len()).collect();
    order.shuffle(&mut rng);
    let mut kept = vec![false; optional.len()];
    for &i in &order[..keep] {
        kept[i] = true;
    }

    let mut g = Graph::with_prefixes(ns::standard_prefixes());
    g.extend(core);
    g.extend(optional.into_iter().zip(kept).filter(|(_, k)| *k).map(|(t, _)| t));
    debug_assert_eq!(g.duplicates(), 0);
    Ok(g)
}
