//! Typed event parameters and their byte encoding.
//!
//! A parameter list is a sequence of `(name, type, value)` triples. On the
//! wire each triple is one record; records are separated by `0x1E` and the
//! three fields of a record by `0x1F`. A backslash escapes `0x1E`, `0x1F`
//! and itself wherever they occur inside a field. The encoding of a given
//! list is unique, so identical inputs always produce identical bytes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

const RECORD_SEP: u8 = 0x1E;
const FIELD_SEP: u8 = 0x1F;
const ESCAPE: u8 = b'\\';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Int,
    Float,
    String,
    Text,
    Enum,
    Link,
    Hashlink,
    Upload,
    Hashupload,
}

impl ParamType {
    pub const ALL: [ParamType; 9] = [
        ParamType::Int,
        ParamType::Float,
        ParamType::String,
        ParamType::Text,
        ParamType::Enum,
        ParamType::Link,
        ParamType::Hashlink,
        ParamType::Upload,
        ParamType::Hashupload,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ParamType::Int => "int",
            ParamType::Float => "float",
            ParamType::String => "string",
            ParamType::Text => "text",
            ParamType::Enum => "enum",
            ParamType::Link => "link",
            ParamType::Hashlink => "hashlink",
            ParamType::Upload => "upload",
            ParamType::Hashupload => "hashupload",
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ParamType {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamType::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| ParamError::IllegalType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub name: String,
    pub param_type: ParamType,
    pub value: String,
}

impl ParamTriple {
    pub fn new(name: impl Into<String>, param_type: ParamType, value: impl Into<String>) -> Self {
        ParamTriple {
            name: name.into(),
            param_type,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("illegal parameter type tag `{0}`")]
    IllegalType(String),
    #[error("malformed parameter bytes: {0}")]
    Malformed(&'static str),
    #[error("parameter `{name}`: value {value:?} is not a valid {param_type}")]
    InvalidValue {
        name: String,
        param_type: ParamType,
        value: String,
    },
    #[error("unknown parameter `{0}`")]
    UnknownName(String),
    #[error("missing parameter `{0}`")]
    Missing(String),
}

fn push_escaped(out: &mut Vec<u8>, field: &str) {
    for &b in field.as_bytes() {
        if b == RECORD_SEP || b == FIELD_SEP || b == ESCAPE {
            out.push(ESCAPE);
        }
        out.push(b);
    }
}

pub fn encode_parameters(triples: &[ParamTriple]) -> Result<Vec<u8>, ParamError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, t) in triples.iter().enumerate() {
        if !seen.insert(t.name.as_str()) {
            return Err(ParamError::DuplicateName(t.name.clone()));
        }
        if i > 0 {
            out.push(RECORD_SEP);
        }
        push_escaped(&mut out, &t.name);
        out.push(FIELD_SEP);
        out.extend_from_slice(t.param_type.tag().as_bytes());
        out.push(FIELD_SEP);
        push_escaped(&mut out, &t.value);
    }
    Ok(out)
}

pub fn decode_parameters(bytes: &[u8]) -> Result<Vec<ParamTriple>, ParamError> {
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let mut records: Vec<Vec<Vec<u8>>> = vec![vec![Vec::new()]];
    let mut iter = bytes.iter();
    while let Some(&b) = iter.next() {
        match b {
            ESCAPE => match iter.next() {
                Some(&n) if n == RECORD_SEP || n == FIELD_SEP || n == ESCAPE => {
                    records.last_mut().unwrap().last_mut().unwrap().push(n)
                }
                Some(_) => return Err(ParamError::Malformed("invalid escape sequence")),
                None => return Err(ParamError::Malformed("dangling escape")),
            },
            RECORD_SEP => records.push(vec![Vec::new()]),
            FIELD_SEP => records.last_mut().unwrap().push(Vec::new()),
            _ => records.last_mut().unwrap().last_mut().unwrap().push(b),
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for fields in records {
        let [name, tag, value]: [Vec<u8>; 3] = fields
            .try_into()
            .map_err(|_| ParamError::Malformed("record does not have three fields"))?;
        let name = String::from_utf8(name).map_err(|_| ParamError::Malformed("name is not UTF-8"))?;
        let tag = String::from_utf8(tag).map_err(|_| ParamError::Malformed("type is not UTF-8"))?;
        let value =
            String::from_utf8(value).map_err(|_| ParamError::Malformed("value is not UTF-8"))?;
        if !seen.insert(name.clone()) {
            return Err(ParamError::DuplicateName(name));
        }
        out.push(ParamTriple {
            name,
            param_type: tag.parse()?,
            value,
        });
    }
    Ok(out)
}

/// Checks a raw value against a parameter type and returns its canonical text.
///
/// Canonical forms: decimal integers without sign or leading zeros except
/// `-`, shortest round-trip decimals for floats, the label itself for enums,
/// `uri\x1Fdigest` for hashlinks and a lowercase 64-digit content id for
/// uploads.
pub fn canonical_value(
    param_type: ParamType,
    enum_options: &[String],
    raw: &str,
) -> Option<String> {
    match param_type {
        ParamType::Int => {
            let digits = raw.strip_prefix(['+', '-']).unwrap_or(raw);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            raw.parse::<i64>().ok().map(|v| v.to_string())
        }
        ParamType::Float => {
            // f64::from_str also takes inf/nan spellings; finiteness rules them out
            let v: f64 = raw.parse().ok()?;
            v.is_finite().then(|| v.to_string())
        }
        ParamType::String => (!raw.contains(['\n', '\r'])).then(|| raw.to_string()),
        ParamType::Text => Some(raw.to_string()),
        ParamType::Enum => enum_options
            .iter()
            .any(|o| o == raw)
            .then(|| raw.to_string()),
        ParamType::Link => is_uri(raw).then(|| raw.to_string()),
        ParamType::Hashlink => {
            let (uri, digest) = raw.split_once('\x1F')?;
            (is_uri(uri) && is_content_id(digest)).then(|| raw.to_string())
        }
        ParamType::Upload | ParamType::Hashupload => is_content_id(raw).then(|| raw.to_string()),
    }
}

/// `scheme ":" rest`, where the scheme starts with a letter and the rest is
/// non-empty and free of whitespace and control characters.
pub fn is_uri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut sc = scheme.chars();
    let scheme_ok = matches!(sc.next(), Some(c) if c.is_ascii_alphabetic())
        && sc.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok && !rest.is_empty() && !rest.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// 64 lowercase hex digits.
pub fn is_content_id(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}
