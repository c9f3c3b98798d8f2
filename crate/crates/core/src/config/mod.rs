//! Supply-chain descriptor files.
//!
//! A supply chain is described by five JSON files, each wrapped in an
//! envelope `{"kind": ..., "version": ..., "items": [...]}`. The `kind` key
//! selects how the items are read. [`validate_config`] cross-checks the five
//! collections and produces the [`SupplyChainConfig`] used by every other
//! module.

mod validate;
mod yield_ratio;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::params::ParamType;

pub use validate::{validate_config, Problem, Violation};
pub use yield_ratio::YieldRatio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Actors,
    Companies,
    Kinds,
    EventKinds,
    Activities,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 5] = [
        DescriptorKind::Actors,
        DescriptorKind::Companies,
        DescriptorKind::Kinds,
        DescriptorKind::EventKinds,
        DescriptorKind::Activities,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Actors => "actors",
            DescriptorKind::Companies => "companies",
            DescriptorKind::Kinds => "kinds",
            DescriptorKind::EventKinds => "event_kinds",
            DescriptorKind::Activities => "activities",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.json", self.as_str())
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ConfigError::UnsupportedDescriptor(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Administrator,
    Producer,
    Supplier,
    Transformer,
    Wholesaler,
    Retailer,
    CertificationAuthority,
    Professional,
    AnalysisLab,
    Warehouse,
    Device,
}

impl Role {
    /// Roles allowed to asseverate records.
    pub fn can_certify(self) -> bool {
        matches!(
            self,
            Role::CertificationAuthority | Role::Professional | Role::AnalysisLab
        )
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KindClass {
    /// Productive resource.
    R,
    /// Product.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventClass {
    /// Documentation.
    D,
    /// Transformation.
    T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorDef {
    pub id: String,
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanyDef {
    pub name: String,
    pub resource_ids: Vec<String>,
    pub authorized_actor_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindDef {
    pub id: String,
    pub kind_class: KindClass,
    pub name: String,
    pub authorized_actor_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub param_type: ParamType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enum_options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventKindDef {
    pub id: String,
    pub name: String,
    pub applicable_kind_ids: Vec<String>,
    pub authorized_actor_ids: Vec<String>,
    pub event_class: EventClass,
    #[serde(default)]
    pub generated_kind_ids: Vec<String>,
    #[serde(default)]
    pub param_specs: Vec<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_yield: Option<YieldRatio>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_unlock_actor_ids: Vec<String>,
}

impl EventKindDef {
    /// Output base units allowed per input base unit; 1 when unset.
    pub fn effective_max_yield(&self) -> YieldRatio {
        self.max_yield.unwrap_or(YieldRatio::ONE)
    }

    pub fn requires_unlock(&self) -> bool {
        !self.required_unlock_actor_ids.is_empty()
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.param_specs.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub company_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_id: Option<String>,
    pub visible_event_kind_ids: Vec<String>,
}

/// One parsed descriptor file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorFile<T> {
    pub kind: DescriptorKind,
    pub version: u32,
    pub items: Vec<T>,
}

impl<T: Serialize> DescriptorFile<T> {
    pub fn new(kind: DescriptorKind, version: u32, items: Vec<T>) -> Self {
        DescriptorFile {
            kind,
            version,
            items,
        }
    }

    /// Canonical text: two-space indented JSON, struct field order, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("descriptor serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Descriptor {
    Actors(DescriptorFile<ActorDef>),
    Companies(DescriptorFile<CompanyDef>),
    Kinds(DescriptorFile<KindDef>),
    EventKinds(DescriptorFile<EventKindDef>),
    Activities(DescriptorFile<ActivityDef>),
}

impl Descriptor {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            Descriptor::Actors(_) => DescriptorKind::Actors,
            Descriptor::Companies(_) => DescriptorKind::Companies,
            Descriptor::Kinds(_) => DescriptorKind::Kinds,
            Descriptor::EventKinds(_) => DescriptorKind::EventKinds,
            Descriptor::Activities(_) => DescriptorKind::Activities,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Descriptor::Actors(f) => f.items.len(),
            Descriptor::Companies(f) => f.items.len(),
            Descriptor::Kinds(f) => f.items.len(),
            Descriptor::EventKinds(f) => f.items.len(),
            Descriptor::Activities(f) => f.items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_canonical_json(&self) -> String {
        match self {
            Descriptor::Actors(f) => f.to_canonical_json(),
            Descriptor::Companies(f) => f.to_canonical_json(),
            Descriptor::Kinds(f) => f.to_canonical_json(),
            Descriptor::EventKinds(f) => f.to_canonical_json(),
            Descriptor::Activities(f) => f.to_canonical_json(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}syntax error at line {line}, column {column}: {message}", origin_prefix(.origin))]
    Syntax {
        origin: Option<String>,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported descriptor kind `{0}`")]
    UnsupportedDescriptor(String),
    #[error("descriptor `{0}` is missing")]
    MissingDescriptor(DescriptorKind),
    #[error("descriptor `{0}` appears more than once")]
    DuplicateDescriptor(DescriptorKind),
    #[error("{} violation(s):\n{}", .0.len(), format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn origin_prefix(origin: &Option<String>) -> String {
    origin.as_ref().map(|o| format!("{o}: ")).unwrap_or_default()
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn syntax(e: serde_json::Error) -> ConfigError {
    ConfigError::Syntax {
        origin: None,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn parse_items<T: DeserializeOwned>(text: &str) -> Result<DescriptorFile<T>, ConfigError> {
    serde_json::from_str(text).map_err(syntax)
}

/// Parses one descriptor file. The envelope `kind` selects the item type.
pub fn parse_descriptor(bytes: &[u8]) -> Result<Descriptor, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Syntax {
        origin: None,
        line: 0,
        column: e.valid_up_to(),
        message: "content is not UTF-8".into(),
    })?;
    #[derive(Deserialize)]
    struct Head {
        kind: String,
    }
    // first pass: syntax and envelope kind
    let value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
    let head: Head = serde_json::from_value(value).map_err(|e| ConfigError::Syntax {
        origin: None,
        line: 1,
        column: 1,
        message: e.to_string(),
    })?;
    // second pass over the original text keeps line/column on typed errors
    Ok(match head.kind.parse::<DescriptorKind>()? {
        DescriptorKind::Actors => Descriptor::Actors(parse_items(text)?),
        DescriptorKind::Companies => Descriptor::Companies(parse_items(text)?),
        DescriptorKind::Kinds => Descriptor::Kinds(parse_items(text)?),
        DescriptorKind::EventKinds => Descriptor::EventKinds(parse_items(text)?),
        DescriptorKind::Activities => Descriptor::Activities(parse_items(text)?),
    })
}

/// The five descriptor collections, before cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorSet {
    pub actors: DescriptorFile<ActorDef>,
    pub companies: DescriptorFile<CompanyDef>,
    pub kinds: DescriptorFile<KindDef>,
    pub event_kinds: DescriptorFile<EventKindDef>,
    pub activities: DescriptorFile<ActivityDef>,
}

impl DescriptorSet {
    pub fn from_descriptors(
        descriptors: impl IntoIterator<Item = Descriptor>,
    ) -> Result<DescriptorSet, ConfigError> {
        let (mut a, mut c, mut k, mut e, mut v) = (None, None, None, None, None);
        fn put<T>(slot: &mut Option<T>, val: T, kind: DescriptorKind) -> Result<(), ConfigError> {
            if slot.replace(val).is_some() {
                return Err(ConfigError::DuplicateDescriptor(kind));
            }
            Ok(())
        }
        for d in descriptors {
            let kind = d.kind();
            match d {
                Descriptor::Actors(f) => put(&mut a, f, kind)?,
                Descriptor::Companies(f) => put(&mut c, f, kind)?,
                Descriptor::Kinds(f) => put(&mut k, f, kind)?,
                Descriptor::EventKinds(f) => put(&mut e, f, kind)?,
                Descriptor::Activities(f) => put(&mut v, f, kind)?,
            }
        }
        Ok(DescriptorSet {
            actors: a.ok_or(ConfigError::MissingDescriptor(DescriptorKind::Actors))?,
            companies: c.ok_or(ConfigError::MissingDescriptor(DescriptorKind::Companies))?,
            kinds: k.ok_or(ConfigError::MissingDescriptor(DescriptorKind::Kinds))?,
            event_kinds: e.ok_or(ConfigError::MissingDescriptor(DescriptorKind::EventKinds))?,
            activities: v.ok_or(ConfigError::MissingDescriptor(DescriptorKind::Activities))?,
        })
    }

    /// Reads every `*.json` file in `dir`; file names are not significant.
    pub fn load_dir(dir: &Path) -> Result<DescriptorSet, ConfigError> {
        let io = |path: &Path, source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut descriptors = Vec::new();
        for p in paths {
            let bytes = std::fs::read(&p).map_err(|e| io(&p, e))?;
            let d = parse_descriptor(&bytes).map_err(|e| match e {
                ConfigError::Syntax {
                    line,
                    column,
                    message,
                    ..
                } => ConfigError::Syntax {
                    origin: Some(p.display().to_string()),
                    line,
                    column,
                    message,
                },
                other => other,
            })?;
            descriptors.push(d);
        }
        DescriptorSet::from_descriptors(descriptors)
    }

    /// Canonical text of each file, keyed by its conventional file name.
    pub fn to_canonical_files(&self) -> Vec<(String, String)> {
        vec![
            (DescriptorKind::Actors.file_name(), self.actors.to_canonical_json()),
            (DescriptorKind::Companies.file_name(), self.companies.to_canonical_json()),
            (DescriptorKind::Kinds.file_name(), self.kinds.to_canonical_json()),
            (DescriptorKind::EventKinds.file_name(), self.event_kinds.to_canonical_json()),
            (DescriptorKind::Activities.file_name(), self.activities.to_canonical_json()),
        ]
    }
}

/// Validated supply-chain model. Collections keep descriptor file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyChainConfig {
    pub version: u32,
    pub actors: IndexMap<String, ActorDef>,
    pub companies: IndexMap<String, CompanyDef>,
    pub kinds: IndexMap<String, KindDef>,
    pub event_kinds: IndexMap<String, EventKindDef>,
    pub activities: Vec<ActivityDef>,
}

impl SupplyChainConfig {
    pub fn load_dir(dir: &Path) -> Result<SupplyChainConfig, ConfigError> {
        validate_config(&DescriptorSet::load_dir(dir)?).map_err(ConfigError::Invalid)
    }

    pub fn actor(&self, id: &str) -> Option<&ActorDef> {
        self.actors.get(id)
    }

    pub fn kind(&self, id: &str) -> Option<&KindDef> {
        self.kinds.get(id)
    }

    pub fn event_kind(&self, id: &str) -> Option<&EventKindDef> {
        self.event_kinds.get(id)
    }

    pub fn company(&self, name: &str) -> Option<&CompanyDef> {
        self.companies.get(name)
    }

    /// Back to the five descriptor collections.
    pub fn descriptors(&self) -> DescriptorSet {
        let v = self.version;
        DescriptorSet {
            actors: DescriptorFile::new(
                DescriptorKind::Actors,
                v,
                self.actors.values().cloned().collect(),
            ),
            companies: DescriptorFile::new(
                DescriptorKind::Companies,
                v,
                self.companies.values().cloned().collect(),
            ),
            kinds: DescriptorFile::new(
                DescriptorKind::Kinds,
                v,
                self.kinds.values().cloned().collect(),
            ),
            event_kinds: DescriptorFile::new(
                DescriptorKind::EventKinds,
                v,
                self.event_kinds.values().cloned().collect(),
            ),
            activities: DescriptorFile::new(DescriptorKind::Activities, v, self.activities.clone()),
        }
    }

    /// Re-runs validation on this model (used when a config arrives from a
    /// chain file rather than from descriptor files).
    pub fn revalidate(&self) -> Result<(), Vec<Violation>> {
        let again = validate_config(&self.descriptors())?;
        if &again != self {
            // keyed collections whose keys disagree with item ids
            return Err(vec![Violation {
                file: DescriptorKind::Actors,
                index: None,
                problem: Problem::KeyMismatch,
            }]);
        }
        Ok(())
    }

    /// Event kinds the activities file shows to an actor, in config order.
    /// Rows match when each of their set fields matches; an actor matches a
    /// company row when the company authorizes them.
    pub fn visible_event_kinds(&self, actor_id: &str) -> Vec<&EventKindDef> {
        let mut visible = std::collections::BTreeSet::new();
        for a in &self.activities {
            let actor_ok = a.actor_id.as_deref().is_none_or(|x| x == actor_id);
            let company_ok = a.company_name.as_deref().is_none_or(|c| {
                self.companies
                    .get(c)
                    .is_some_and(|c| c.authorized_actor_ids.iter().any(|x| x == actor_id))
            });
            if actor_ok && company_ok {
                visible.extend(a.visible_event_kind_ids.iter().map(String::as_str));
            }
        }
        self.event_kinds
            .values()
            .filter(|e| visible.contains(e.id.as_str()))
            .collect()
    }
}

/// The olive-oil reference chain shipped in `fixtures/oliveoil`.
pub mod fixtures {
    use super::*;

    pub const OLIVE_OIL_FILES: [(&str, &str); 5] = [
        ("actors.json", include_str!("../../../../fixtures/oliveoil/actors.json")),
        ("companies.json", include_str!("../../../../fixtures/oliveoil/companies.json")),
        ("kinds.json", include_str!("../../../../fixtures/oliveoil/kinds.json")),
        ("event_kinds.json", include_str!("../../../../fixtures/oliveoil/event_kinds.json")),
        ("activities.json", include_str!("../../../../fixtures/oliveoil/activities.json")),
    ];

    pub fn olive_oil_descriptors() -> DescriptorSet {
        DescriptorSet::from_descriptors(
            OLIVE_OIL_FILES
                .iter()
                .map(|(_, text)| parse_descriptor(text.as_bytes()).expect("fixture parses")),
        )
        .expect("fixture complete")
    }

    pub fn olive_oil() -> SupplyChainConfig {
        validate_config(&olive_oil_descriptors()).expect("fixture validates")
    }
}
