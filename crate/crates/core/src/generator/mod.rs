//! Code generation from a validated config: a contract IR with renderers,
//! and per-event form schemas.

mod forms;
mod render;

use serde::{Deserialize, Serialize};

use crate::config::{EventClass, EventKindDef, KindClass, SupplyChainConfig};
use crate::params::ParamType;

pub use forms::{generate_form_schema, generate_form_schemas, FieldError, FormField, FormSchema, TargetSelector, ValidationRule, Widget};
pub use render::{render_contracts, RenderTarget, SourceFile};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("unknown event kind `{0}`")]
    UnknownEventKind(String),
    #[error("unknown render target `{0}`")]
    UnknownTarget(String),
}

/// Semantic type of a state field or method argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemType {
    Address,
    AddressList,
    AddressSet,
    Uint,
    UintList,
    Text,
    Bytes,
    Digest,
    Bool,
    Status,
    EventClass,
    EventRecords,
    Asseverations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub immutable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthRule {
    /// The catalog owner.
    Owner,
    /// Listed on the kind and on the managing company.
    KindAndCompany,
    /// Listed on the kind of every entity touched.
    Kind,
    /// Listed on the event kind and on the kind of every entity touched.
    EventAndKind,
    /// Holds a certifying role.
    CertifyingRole,
    /// Named in the unlock request's required set.
    RequiredApprover,
    /// Any enabled catalog entry.
    Registered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authorization {
    pub rule: AuthRule,
    /// Actors that can satisfy the rule for at least one configured kind.
    pub actor_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub params: Vec<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns: Option<SemType>,
    pub auth: Authorization,
    /// Creates new contract instances at runtime.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub factory: bool,
    /// Payloads go to the event log, not to contract storage.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub emits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindBinding {
    pub kind_id: String,
    pub name: String,
    pub authorized_actor_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyBinding {
    pub name: String,
    pub resource_ids: Vec<String>,
    pub authorized_actor_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_abstract: bool,
    pub fields: Vec<Field>,
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kinds: Vec<KindBinding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub companies: Vec<CompanyBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogParam {
    pub name: String,
    pub param_type: ParamType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enum_options: Vec<String>,
}

/// Log event emitted when an event kind is recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEventSig {
    pub name: String,
    pub event_kind_id: String,
    pub event_class: EventClass,
    pub applicable_kind_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generated_kind_ids: Vec<String>,
    pub authorized_actor_ids: Vec<String>,
    /// Encoded into the single `parameters` bytes argument.
    pub params: Vec<LogParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_yield: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_unlock_actor_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractIR {
    pub config_version: u32,
    pub contracts: Vec<ContractDef>,
    pub records: Vec<RecordDef>,
    pub log_events: Vec<LogEventSig>,
}

impl ContractIR {
    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("IR serializes");
        s.push('\n');
        s
    }
}

pub const PRODUCER: &str = "Producer";
pub const ABSTRACT_RESOURCE: &str = "AbstractResource";
pub const PRODUCTIVE_RESOURCE: &str = "ProductiveResource";
pub const AGRI_PRODUCT: &str = "AgriProduct";
pub const AGRI_EVENT: &str = "AgriEvent";

/// Built-in log events emitted by lot changes and notarization.
pub const SPLIT_EVENT: &str = "Split";
pub const MERGE_EVENT: &str = "Merge";
pub const NOTARIZATION_EVENT: &str = "Notarization";
pub const ASSEVERATION_EVENT: &str = "Asseverated";

/// `soil_reading` → `SoilReading`.
pub fn camel_case(id: &str) -> String {
    id.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|p| !p.is_empty())
        .map(|p| {
            let mut cs = p.chars();
            let first = cs.next().expect("non-empty").to_ascii_uppercase();
            std::iter::once(first).chain(cs).collect::<String>()
        })
        .collect()
}

fn f(name: &str, ty: SemType) -> Field {
    Field {
        name: name.into(),
        ty,
        immutable: false,
    }
}

fn fixed(name: &str, ty: SemType) -> Field {
    Field {
        immutable: true,
        ..f(name, ty)
    }
}

/// Configured actor ids satisfying `pred`, in actor order.
fn actors_where(config: &SupplyChainConfig, pred: impl Fn(&str) -> bool) -> Vec<String> {
    config
        .actors
        .keys()
        .filter(|a| pred(a))
        .cloned()
        .collect()
}

fn kind_actors(config: &SupplyChainConfig, class: Option<KindClass>) -> Vec<String> {
    actors_where(config, |a| {
        config
            .kinds
            .values()
            .filter(|k| class.is_none_or(|c| k.kind_class == c))
            .any(|k| k.authorized_actor_ids.iter().any(|x| x == a))
    })
}

fn auth(rule: AuthRule, actor_ids: Vec<String>) -> Authorization {
    Authorization { rule, actor_ids }
}

fn method(name: &str, params: Vec<Field>, returns: Option<SemType>, auth: Authorization) -> Method {
    Method {
        name: name.into(),
        params,
        returns,
        auth,
        factory: false,
        emits: Vec::new(),
    }
}

fn kind_bindings(config: &SupplyChainConfig, class: KindClass) -> Vec<KindBinding> {
    config
        .kinds
        .values()
        .filter(|k| k.kind_class == class)
        .map(|k| KindBinding {
            kind_id: k.id.clone(),
            name: k.name.clone(),
            authorized_actor_ids: k.authorized_actor_ids.clone(),
            default_unit: k.default_unit.clone(),
        })
        .collect()
}

pub fn log_event_sig(e: &EventKindDef) -> LogEventSig {
    LogEventSig {
        name: camel_case(&e.id),
        event_kind_id: e.id.clone(),
        event_class: e.event_class,
        applicable_kind_ids: e.applicable_kind_ids.clone(),
        generated_kind_ids: e.generated_kind_ids.clone(),
        authorized_actor_ids: e.authorized_actor_ids.clone(),
        params: e
            .param_specs
            .iter()
            .map(|p| LogParam {
                name: p.name.clone(),
                param_type: p.param_type,
                enum_options: p.enum_options.clone(),
            })
            .collect(),
        max_yield: (e.event_class == EventClass::T).then(|| e.effective_max_yield().to_string()),
        required_unlock_actor_ids: e.required_unlock_actor_ids.clone(),
    }
}

/// Base contracts specialized to `config`. Method authorization depends on
/// kinds and roles only, so each event kind contributes exactly one log
/// event signature.
pub fn generate_contract_ir(config: &SupplyChainConfig) -> ContractIR {
    use SemType::*;

    let administrators = actors_where(config, |a| config.actors[a].role == crate::config::Role::Administrator);
    let certifiers = actors_where(config, |a| config.actors[a].role.can_certify());
    let everyone = actors_where(config, |_| true);
    let all_kind_actors = kind_actors(config, None);
    let product_actors = kind_actors(config, Some(KindClass::P));
    let resource_actors = actors_where(config, |a| {
        config.companies.values().any(|c| {
            c.authorized_actor_ids.iter().any(|x| x == a)
                && c.resource_ids.iter().any(|k| {
                    config.kind(k).is_some_and(|k| {
                        k.kind_class == KindClass::R && k.authorized_actor_ids.iter().any(|x| x == a)
                    })
                })
        })
    });

    let producer = ContractDef {
        name: PRODUCER.into(),
        base: None,
        is_abstract: false,
        fields: vec![fixed("companyName", Text), fixed("catalog", Address), f("owned", AddressSet)],
        methods: vec![
            Method {
                factory: true,
                ..method(
                    "createResource",
                    vec![f("kindId", Text), f("description", Text), f("size", Uint), f("unit", Text)],
                    Some(Address),
                    auth(AuthRule::KindAndCompany, resource_actors),
                )
            },
            method("registerAddress", vec![f("account", Address), f("actorId", Text), f("enabled", Bool)], None, auth(AuthRule::Owner, administrators)),
            method("pay", vec![f("recipient", Address), f("amount", Uint)], None, auth(AuthRule::Registered, everyone)),
        ],
        kinds: Vec::new(),
        companies: config
            .companies
            .values()
            .map(|c| CompanyBinding {
                name: c.name.clone(),
                resource_ids: c.resource_ids.clone(),
                authorized_actor_ids: c.authorized_actor_ids.clone(),
            })
            .collect(),
    };

    let abstract_resource = ContractDef {
        name: ABSTRACT_RESOURCE.into(),
        base: None,
        is_abstract: true,
        fields: vec![
            fixed("kindId", Text),
            fixed("producer", Address),
            f("events", EventRecords),
            f("produced", AddressList),
            f("status", Status),
        ],
        methods: vec![
            Method {
                emits: vec!["<event kind>".into()],
                ..method(
                    "recordEvent",
                    vec![f("eventKindId", Text), f("parameters", Bytes)],
                    None,
                    auth(AuthRule::EventAndKind, all_kind_actors.clone()),
                )
            },
            Method {
                factory: true,
                emits: vec!["<event kind>".into()],
                ..method(
                    "transform",
                    vec![
                        f("inputs", AddressList),
                        f("eventKindId", Text),
                        f("outputKinds", AddressList),
                        f("outputQuantities", UintList),
                        f("parameters", Bytes),
                    ],
                    Some(AddressList),
                    auth(AuthRule::EventAndKind, all_kind_actors.clone()),
                )
            },
            Method {
                emits: vec![NOTARIZATION_EVENT.into()],
                ..method(
                    "notarize",
                    vec![f("digest", Digest), f("locator", Text), f("metadata", Bytes)],
                    None,
                    auth(AuthRule::Kind, all_kind_actors.clone()),
                )
            },
            Method {
                emits: vec![ASSEVERATION_EVENT.into()],
                ..method("asseverate", vec![f("record", Uint)], None, auth(AuthRule::CertifyingRole, certifiers))
            },
            method(
                "requestUnlock",
                vec![f("eventKindId", Text)],
                Some(Uint),
                auth(AuthRule::EventAndKind, all_kind_actors),
            ),
            method(
                "approveUnlock",
                vec![f("request", Uint)],
                None,
                auth(AuthRule::RequiredApprover, everyone_required(config)),
            ),
        ],
        kinds: Vec::new(),
        companies: Vec::new(),
    };

    let productive_resource = ContractDef {
        name: PRODUCTIVE_RESOURCE.into(),
        base: Some(ABSTRACT_RESOURCE.into()),
        is_abstract: false,
        fields: vec![f("description", Text), fixed("size", Uint), fixed("unit", Text)],
        methods: Vec::new(),
        kinds: kind_bindings(config, KindClass::R),
        companies: Vec::new(),
    };

    let agri_product = ContractDef {
        name: AGRI_PRODUCT.into(),
        base: Some(ABSTRACT_RESOURCE.into()),
        is_abstract: false,
        fields: vec![
            fixed("origins", AddressList),
            fixed("quantity", Uint),
            fixed("unit", Text),
            f("holder", Address),
        ],
        methods: vec![
            Method {
                factory: true,
                emits: vec![SPLIT_EVENT.into()],
                ..method(
                    "split",
                    vec![f("quantities", UintList)],
                    Some(AddressList),
                    auth(AuthRule::Kind, product_actors.clone()),
                )
            },
            Method {
                factory: true,
                emits: vec![MERGE_EVENT.into()],
                ..method(
                    "merge",
                    vec![f("others", AddressList), f("quantities", UintList)],
                    Some(AddressList),
                    auth(AuthRule::Kind, product_actors),
                )
            },
        ],
        kinds: kind_bindings(config, KindClass::P),
        companies: Vec::new(),
    };

    let agri_event = RecordDef {
        name: AGRI_EVENT.into(),
        fields: vec![
            f("eventKindId", Text),
            f("eventClass", EventClass),
            f("registrant", Address),
            f("blockHeight", Uint),
            f("txHash", Digest),
            f("logIndex", Uint),
            f("asseverations", Asseverations),
        ],
    };

    ContractIR {
        config_version: config.version,
        contracts: vec![producer, abstract_resource, productive_resource, agri_product],
        records: vec![agri_event],
        log_events: config.event_kinds.values().map(log_event_sig).collect(),
    }
}

/// Approvers named anywhere in the config's unlock requirements.
fn everyone_required(config: &SupplyChainConfig) -> Vec<String> {
    actors_where(config, |a| {
        config
            .event_kinds
            .values()
            .any(|e| e.required_unlock_actor_ids.iter().any(|x| x == a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::fixtures::olive_oil;
    use crate::config::validate_config;

    #[test]
    fn camel_names() {
        assert_eq!(camel_case("soil_reading"), "SoilReading");
        assert_eq!(camel_case("harvest"), "Harvest");
        assert_eq!(camel_case("mill-2"), "Mill2");
    }

    #[test]
    fn fixture_ir_shape() {
        let config = olive_oil();
        let ir = generate_contract_ir(&config);
        let names: Vec<_> = ir.contracts.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, [PRODUCER, ABSTRACT_RESOURCE, PRODUCTIVE_RESOURCE, AGRI_PRODUCT]);
        assert_eq!(ir.records[0].name, AGRI_EVENT);
        assert_eq!(ir.log_events.len(), config.event_kinds.len());
        assert_eq!(ir.contract(PRODUCTIVE_RESOURCE).unwrap().kinds.len(), 2);
        assert_eq!(ir.contract(AGRI_PRODUCT).unwrap().kinds.len(), 4);
        for c in &ir.contracts {
            for m in &c.methods {
                assert!(!m.auth.actor_ids.is_empty(), "{}.{}", c.name, m.name);
                for a in &m.auth.actor_ids {
                    assert!(config.actor(a).is_some());
                }
            }
        }
        assert_eq!(generate_contract_ir(&config), ir);
    }

    #[test]
    fn resource_creators_need_kind_and_company() {
        let ir = generate_contract_ir(&olive_oil());
        let create = &ir.contract(PRODUCER).unwrap().methods[0];
        assert_eq!(create.auth.actor_ids, ["farmer", "agronomist", "sensor", "miller"]);
    }

    #[test]
    fn no_event_kinds_gives_bases_only() {
        let mut set = olive_oil().descriptors();
        set.event_kinds.items.clear();
        set.activities.items.clear();
        let config = validate_config(&set).unwrap();
        let ir = generate_contract_ir(&config);
        assert_eq!(ir.contracts.len(), 4);
        assert!(ir.log_events.is_empty());
    }

    #[test]
    fn one_more_d_event_adds_one_signature() {
        let base = olive_oil();
        let mut set = base.descriptors();
        let mut extra = set.event_kinds.items[1].clone();
        extra.id = "irrigation".into();
        extra.name = "Irrigation".into();
        set.event_kinds.items.push(extra);
        let grown = validate_config(&set).unwrap();
        let (a, b) = (generate_contract_ir(&base), generate_contract_ir(&grown));
        assert_eq!(a.contracts, b.contracts);
        assert_eq!(a.records, b.records);
        assert_eq!(b.log_events.len(), a.log_events.len() + 1);
        assert_eq!(b.log_events[..a.log_events.len()], a.log_events[..]);
        assert_eq!(b.log_events.last().unwrap().name, "Irrigation");
    }
}
