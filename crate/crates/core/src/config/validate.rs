use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use super::{DescriptorKind, DescriptorSet, EventClass, KindClass, Role, SupplyChainConfig};
use crate::params::ParamType;

/// One validation finding, located by descriptor file and item index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub file: DescriptorKind,
    /// `None` for file-level findings.
    pub index: Option<usize>,
    pub problem: Problem,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]: {}", self.file, i, self.problem),
            None => write!(f, "{}: {}", self.file, self.problem),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Problem {
    DuplicateId { id: String },
    DanglingReference { owner: String, field: &'static str, target: String },
    EmptyList { owner: String, field: &'static str },
    NoAdministrator,
    VersionMismatch { expected: u32, found: u32 },
    ClassMismatch { event: String },
    GeneratesNonProduct { event: String, kind: String },
    DuplicateParam { event: String, param: String },
    EnumWithoutOptions { event: String, param: String },
    OptionsOnNonEnum { event: String, param: String },
    YieldOnDocumentation { event: String },
    UnlockOnDocumentation { event: String },
    KeyMismatch,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::DuplicateId { id } => write!(f, "duplicate id `{id}`"),
            Problem::DanglingReference {
                owner,
                field,
                target,
            } => write!(f, "`{owner}`.{field} references unknown id `{target}`"),
            Problem::EmptyList { owner, field } => write!(f, "`{owner}`.{field} is empty"),
            Problem::NoAdministrator => write!(f, "no actor has the administrator role"),
            Problem::VersionMismatch { expected, found } => {
                write!(f, "version {found} differs from actors version {expected}")
            }
            Problem::ClassMismatch { event } => write!(
                f,
                "documentation event `{event}` must not declare generated kinds"
            ),
            Problem::GeneratesNonProduct { event, kind } => write!(
                f,
                "event `{event}` generates `{kind}`, which is not a product kind"
            ),
            Problem::DuplicateParam { event, param } => {
                write!(f, "event `{event}` declares parameter `{param}` twice")
            }
            Problem::EnumWithoutOptions { event, param } => {
                write!(f, "enum parameter `{param}` of event `{event}` has no options")
            }
            Problem::OptionsOnNonEnum { event, param } => write!(
                f,
                "parameter `{param}` of event `{event}` lists options but is not an enum"
            ),
            Problem::YieldOnDocumentation { event } => {
                write!(f, "documentation event `{event}` declares max_yield")
            }
            Problem::UnlockOnDocumentation { event } => write!(
                f,
                "documentation event `{event}` declares required_unlock_actor_ids"
            ),
            Problem::KeyMismatch => write!(f, "collection keys disagree with item ids"),
        }
    }
}

struct Collector {
    out: Vec<Violation>,
    file: DescriptorKind,
}

impl Collector {
    fn at(&mut self, index: Option<usize>, problem: Problem) {
        self.out.push(Violation {
            file: self.file,
            index,
            problem,
        });
    }

    fn refs<'a>(
        &mut self,
        index: usize,
        owner: &str,
        field: &'static str,
        targets: impl IntoIterator<Item = &'a String>,
        known: &HashSet<&str>,
    ) {
        for t in targets {
            if !known.contains(t.as_str()) {
                self.at(
                    Some(index),
                    Problem::DanglingReference {
                        owner: owner.to_string(),
                        field,
                        target: t.clone(),
                    },
                );
            }
        }
    }

    fn non_empty<T>(&mut self, index: usize, owner: &str, field: &'static str, list: &[T]) {
        if list.is_empty() {
            self.at(
                Some(index),
                Problem::EmptyList {
                    owner: owner.to_string(),
                    field,
                },
            );
        }
    }
}

fn unique_ids<'a>(
    c: &mut Collector,
    ids: impl Iterator<Item = &'a str>,
) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            c.at(Some(i), Problem::DuplicateId { id: id.to_string() });
        }
    }
    seen
}

/// Cross-checks the five collections. On failure every violation is
/// returned, ordered by (file, item index).
pub fn validate_config(set: &DescriptorSet) -> Result<SupplyChainConfig, Vec<Violation>> {
    let mut out = Vec::new();
    let version = set.actors.version;

    let mut c = Collector {
        out: Vec::new(),
        file: DescriptorKind::Actors,
    };
    let actor_ids = unique_ids(&mut c, set.actors.items.iter().map(|a| a.id.as_str()));
    if !set.actors.items.iter().any(|a| a.role == Role::Administrator) {
        c.at(None, Problem::NoAdministrator);
    }
    out.append(&mut c.out);

    // kind ids are needed by companies, so collect them before walking files in order
    let kind_ids: HashSet<&str> = set.kinds.items.iter().map(|k| k.id.as_str()).collect();
    let product_ids: HashSet<&str> = set
        .kinds
        .items
        .iter()
        .filter(|k| k.kind_class == KindClass::P)
        .map(|k| k.id.as_str())
        .collect();
    let company_names: HashSet<&str> = set.companies.items.iter().map(|c| c.name.as_str()).collect();
    let event_ids: HashSet<&str> = set.event_kinds.items.iter().map(|e| e.id.as_str()).collect();

    c.file = DescriptorKind::Companies;
    unique_ids(&mut c, set.companies.items.iter().map(|x| x.name.as_str()));
    for (i, co) in set.companies.items.iter().enumerate() {
        c.non_empty(i, &co.name, "resource_ids", &co.resource_ids);
        c.refs(i, &co.name, "resource_ids", &co.resource_ids, &kind_ids);
        c.non_empty(i, &co.name, "authorized_actor_ids", &co.authorized_actor_ids);
        c.refs(i, &co.name, "authorized_actor_ids", &co.authorized_actor_ids, &actor_ids);
    }
    out.append(&mut c.out);

    c.file = DescriptorKind::Kinds;
    unique_ids(&mut c, set.kinds.items.iter().map(|k| k.id.as_str()));
    for (i, k) in set.kinds.items.iter().enumerate() {
        c.refs(i, &k.id, "authorized_actor_ids", &k.authorized_actor_ids, &actor_ids);
    }
    out.append(&mut c.out);

    c.file = DescriptorKind::EventKinds;
    unique_ids(&mut c, set.event_kinds.items.iter().map(|e| e.id.as_str()));
    for (i, e) in set.event_kinds.items.iter().enumerate() {
        c.non_empty(i, &e.id, "applicable_kind_ids", &e.applicable_kind_ids);
        c.refs(i, &e.id, "applicable_kind_ids", &e.applicable_kind_ids, &kind_ids);
        c.refs(i, &e.id, "authorized_actor_ids", &e.authorized_actor_ids, &actor_ids);
        c.refs(i, &e.id, "generated_kind_ids", &e.generated_kind_ids, &kind_ids);
        c.refs(
            i,
            &e.id,
            "required_unlock_actor_ids",
            &e.required_unlock_actor_ids,
            &actor_ids,
        );
        match e.event_class {
            EventClass::D => {
                let event = e.id.clone();
                if !e.generated_kind_ids.is_empty() {
                    c.at(Some(i), Problem::ClassMismatch { event: event.clone() });
                }
                if e.max_yield.is_some() {
                    c.at(Some(i), Problem::YieldOnDocumentation { event: event.clone() });
                }
                if !e.required_unlock_actor_ids.is_empty() {
                    c.at(Some(i), Problem::UnlockOnDocumentation { event });
                }
            }
            EventClass::T => {
                for g in &e.generated_kind_ids {
                    if kind_ids.contains(g.as_str()) && !product_ids.contains(g.as_str()) {
                        c.at(
                            Some(i),
                            Problem::GeneratesNonProduct {
                                event: e.id.clone(),
                                kind: g.clone(),
                            },
                        );
                    }
                }
            }
        }
        let mut names = HashSet::new();
        for p in &e.param_specs {
            let (event, param) = (e.id.clone(), p.name.clone());
            if !names.insert(p.name.as_str()) {
                c.at(Some(i), Problem::DuplicateParam { event: event.clone(), param: param.clone() });
            }
            match (p.param_type == ParamType::Enum, p.enum_options.is_empty()) {
                (true, true) => c.at(Some(i), Problem::EnumWithoutOptions { event, param }),
                (false, false) => c.at(Some(i), Problem::OptionsOnNonEnum { event, param }),
                _ => {}
            }
        }
    }
    out.append(&mut c.out);

    c.file = DescriptorKind::Activities;
    for (i, a) in set.activities.items.iter().enumerate() {
        let owner = format!("activity {i}");
        c.refs(i, &owner, "company_name", a.company_name.iter(), &company_names);
        c.refs(i, &owner, "actor_id", a.actor_id.iter(), &actor_ids);
        c.refs(i, &owner, "visible_event_kind_ids", &a.visible_event_kind_ids, &event_ids);
    }
    out.append(&mut c.out);

    // versions: every file must agree with the actors file
    let versions = [
        (DescriptorKind::Companies, set.companies.version),
        (DescriptorKind::Kinds, set.kinds.version),
        (DescriptorKind::EventKinds, set.event_kinds.version),
        (DescriptorKind::Activities, set.activities.version),
    ];
    for (file, found) in versions {
        if found != version {
            out.push(Violation {
                file,
                index: None,
                problem: Problem::VersionMismatch {
                    expected: version,
                    found,
                },
            });
        }
    }

    if !out.is_empty() {
        // stable: findings within one item keep discovery order
        out.sort_by_key(|v| (v.file, v.index));
        return Err(out);
    }

    fn keyed<T: Clone>(items: &[T], key: impl Fn(&T) -> &String) -> IndexMap<String, T> {
        items.iter().map(|x| (key(x).clone(), x.clone())).collect()
    }
    Ok(SupplyChainConfig {
        version,
        actors: keyed(&set.actors.items, |a| &a.id),
        companies: keyed(&set.companies.items, |c| &c.name),
        kinds: keyed(&set.kinds.items, |k| &k.id),
        event_kinds: keyed(&set.event_kinds.items, |e| &e.id),
        activities: set.activities.items.clone(),
    })
}
