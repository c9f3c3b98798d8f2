use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::GeneratorError;
use crate::config::{EventClass, EventKindDef, ParamSpec, SupplyChainConfig};
use crate::params::ParamType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Widget {
    IntegerInput,
    DecimalInput,
    TextInput,
    TextArea,
    Select,
    UriInput,
    UriDigestPair,
    FileUpload,
    HashedFileUpload,
}

impl Widget {
    pub fn for_type(t: ParamType) -> Widget {
        match t {
            ParamType::Int => Widget::IntegerInput,
            ParamType::Float => Widget::DecimalInput,
            ParamType::String => Widget::TextInput,
            ParamType::Text => Widget::TextArea,
            ParamType::Enum => Widget::Select,
            ParamType::Link => Widget::UriInput,
            ParamType::Hashlink => Widget::UriDigestPair,
            ParamType::Upload => Widget::FileUpload,
            ParamType::Hashupload => Widget::HashedFileUpload,
        }
    }
}

/// Range checks a pattern cannot express.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Fits a signed 64-bit integer.
    I64,
    /// Finite double precision value.
    FiniteF64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRule {
    /// Whole-value regular expression.
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<Bound>,
}

const URI: &str = r"[A-Za-z][A-Za-z0-9+.\-]*:[^\s\p{Cc}]+";
const DIGEST: &str = "[0-9a-f]{64}";

impl ValidationRule {
    fn for_spec(spec: &ParamSpec) -> ValidationRule {
        let (pattern, bound) = match spec.param_type {
            ParamType::Int => ("^[+-]?[0-9]+$".to_string(), Some(Bound::I64)),
            ParamType::Float => (
                r"^[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?$".to_string(),
                Some(Bound::FiniteF64),
            ),
            ParamType::String => (r"^[^\n\r]*$".to_string(), None),
            ParamType::Text => (r"^[\s\S]*$".to_string(), None),
            ParamType::Enum => {
                let alts: Vec<String> = spec.enum_options.iter().map(|o| regex::escape(o)).collect();
                (format!("^(?:{})$", alts.join("|")), None)
            }
            ParamType::Link => (format!("^{URI}$"), None),
            ParamType::Hashlink => (format!(r"^{URI}\x1F{DIGEST}$"), None),
            ParamType::Upload | ParamType::Hashupload => (format!("^{DIGEST}$"), None),
        };
        ValidationRule { pattern, bound }
    }

    pub fn accepts(&self, value: &str) -> bool {
        let re = Regex::new(&self.pattern).expect("generated pattern compiles");
        re.is_match(value)
            && match self.bound {
                None => true,
                Some(Bound::I64) => value.parse::<i64>().is_ok(),
                Some(Bound::FiniteF64) => value.parse::<f64>().is_ok_and(f64::is_finite),
            }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormField {
    pub name: String,
    pub param_type: ParamType,
    pub widget: Widget,
    pub rule: ValidationRule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    /// The value is a stored document's content id.
    pub upload: bool,
    /// A digest of the referenced content is part of the value.
    pub hashed: bool,
}

/// The entity (or entities, for transformations) the event is recorded on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSelector {
    pub kind_ids: Vec<String>,
    pub multiple: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSchema {
    pub event_kind_id: String,
    pub title: String,
    pub event_class: EventClass,
    pub target: TargetSelector,
    pub authorized_actor_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output_kind_ids: Vec<String>,
    pub fields: Vec<FormField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum FieldError {
    Missing { field: String },
    Unknown { field: String },
    Invalid { field: String, value: String },
}

impl FormSchema {
    /// Every field present and matching its rule, no extra names.
    pub fn validate(&self, values: &BTreeMap<String, String>) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        for name in values.keys() {
            if !self.fields.iter().any(|f| &f.name == name) {
                errors.push(FieldError::Unknown { field: name.clone() });
            }
        }
        for f in &self.fields {
            match values.get(&f.name) {
                None => errors.push(FieldError::Missing { field: f.name.clone() }),
                Some(v) if !f.rule.accepts(v) => errors.push(FieldError::Invalid {
                    field: f.name.clone(),
                    value: v.clone(),
                }),
                Some(_) => {}
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serializes");
        s.push('\n');
        s
    }
}

fn schema_for(e: &EventKindDef) -> FormSchema {
    FormSchema {
        event_kind_id: e.id.clone(),
        title: e.name.clone(),
        event_class: e.event_class,
        target: TargetSelector {
            kind_ids: e.applicable_kind_ids.clone(),
            multiple: e.event_class == EventClass::T,
        },
        authorized_actor_ids: e.authorized_actor_ids.clone(),
        output_kind_ids: e.generated_kind_ids.clone(),
        fields: e
            .param_specs
            .iter()
            .map(|p| FormField {
                name: p.name.clone(),
                param_type: p.param_type,
                widget: Widget::for_type(p.param_type),
                rule: ValidationRule::for_spec(p),
                options: p.enum_options.clone(),
                upload: matches!(p.param_type, ParamType::Upload | ParamType::Hashupload),
                hashed: matches!(p.param_type, ParamType::Hashlink | ParamType::Hashupload),
            })
            .collect(),
    }
}

pub fn generate_form_schema(config: &SupplyChainConfig, event_kind_id: &str) -> Result<FormSchema, GeneratorError> {
    config
        .event_kind(event_kind_id)
        .map(schema_for)
        .ok_or_else(|| GeneratorError::UnknownEventKind(event_kind_id.to_string()))
}

/// One schema per event kind, in config order.
pub fn generate_form_schemas(config: &SupplyChainConfig) -> Vec<FormSchema> {
    config.event_kinds.values().map(schema_for).collect()
}
