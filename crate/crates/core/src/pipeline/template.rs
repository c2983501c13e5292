use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ns;
use crate::rdf::{Graph, Term, Triple};

/// What kind of entity a slot expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Service,
    Resource,
    Kpi,
    /// Literal values; predicted only over literals seen for the relation.
    Value,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "service" => Ok(Role::Service),
            "resource" => Ok(Role::Resource),
            "kpi" => Ok(Role::Kpi),
            "value" => Ok(Role::Value),
            _ => Err(format!("unknown role `{s}` (expected service, resource, kpi or value)")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Service => "service",
            Role::Resource => "resource",
            Role::Kpi => "kpi",
            Role::Value => "value",
        })
    }
}

/// Which role a slot plays, keyed by the relation of its triple, and which
/// IKG class each entity role must fall under.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleMap {
    pub by_relation: BTreeMap<String, Role>,
    pub classes: BTreeMap<Role, Term>,
}

impl Default for RoleMap {
    fn default() -> Self {
        let by_relation = [
            (ns::HAS_TARGET, Role::Service),
            (ns::TARGET_RESOURCE, Role::Resource),
            (ns::HAS_PARAMETER, Role::Kpi),
            (ns::VALUE_BY, Role::Value),
        ]
        .into_iter()
        .map(|(r, role)| (r.to_owned(), role))
        .collect();
        let classes = [
            (Role::Service, format!("{}Service", ns::SERVICE)),
            (Role::Resource, format!("{}Resource", ns::SERVICE)),
            (Role::Kpi, format!("{}PropertyParameter", ns::ICM)),
        ]
        .into_iter()
        .map(|(role, c)| (role, Term::iri(c)))
        .collect();
        Self { by_relation, classes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlottedTriple {
    /// Holds exactly one placeholder. The other position may be a
    /// back-reference `<urn:ikg:slot:N>` to an earlier slot.
    pub triple: Triple,
    pub slot: u32,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentTemplate {
    pub intent_id: String,
    pub complete: Vec<Triple>,
    /// In slot-id order.
    pub slotted: Vec<SlottedTriple>,
}

/// Slot id referenced by a `<urn:ikg:slot:N>` term.
pub fn slot_reference(term: &Term) -> Option<u32> {
    term.as_iri()?.strip_prefix(ns::SLOT)?.parse().ok()
}

/// Step B: instantiate a blueprint. Placeholder slot ids come from the
/// blueprint's document order; the keywords only name the intent.
pub fn build_template(blueprint: &Graph, keywords: &[String], roles: &RoleMap) -> Result<IntentTemplate> {
    if blueprint.is_empty() {
        return Err(Error::Blueprint("blueprint has no triples".into()));
    }
    let mut complete = Vec::new();
    let mut slotted: Vec<SlottedTriple> = Vec::new();
    for t in blueprint {
        let slots: Vec<u32> = t.placeholders().collect();
        for r in [&t.head, &t.tail].into_iter().filter_map(slot_reference) {
            let earlier = slots.first().is_some_and(|&s| r < s);
            if !earlier {
                return Err(Error::Blueprint(format!(
                    "{t}: slot:{r} must refer to an earlier slot of a slotted triple"
                )));
            }
        }
        match slots[..] {
            [] => complete.push(t.clone()),
            [slot] => {
                let role = *roles.by_relation.get(t.relation_iri()).ok_or_else(|| {
                    Error::Blueprint(format!("{t}: no role is defined for relation {}", t.relation))
                })?;
                if role == Role::Value && t.head.is_placeholder() {
                    return Err(Error::Blueprint(format!("{t}: a value slot must be in object position")));
                }
                slotted.push(SlottedTriple {
                    triple: t.clone(),
                    slot,
                    role,
                });
            }
            _ => return Err(Error::Blueprint(format!("{t}: more than one `???` in a triple"))),
        }
    }
    slotted.sort_by_key(|s| s.slot);
    let intent_id = if keywords.is_empty() {
        "intent".to_owned()
    } else {
        format!("intent-{}", keywords.join("-").replace(' ', "_"))
    };
    Ok(IntentTemplate {
        intent_id,
        complete,
        slotted,
    })
}

/// Step C.
pub fn find_incomplete(template: &IntentTemplate) -> Vec<&SlottedTriple> {
    let mut out: Vec<&SlottedTriple> = template.slotted.iter().collect();
    out.sort_by_key(|s| s.slot);
    out
}
