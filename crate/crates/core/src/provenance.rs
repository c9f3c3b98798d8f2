//! Backward and forward navigation of the origins/produced graph, report
//! rendering and the QR payload format.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{EventClass, KindClass};
use crate::contracts::{EntityStatus, EventRecord, NotarizationRecord, RecordBody};
use crate::crypto::Address;
use crate::ledger::Chain;
use crate::params::{decode_parameters, ParamTriple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("unknown entity {0}")]
    UnknownEntity(Address),
    #[error("log entry for record {index} on {entity} is missing or unreadable")]
    CorruptLog { entity: Address, index: usize },
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error("invalid QR payload: {0}")]
    BadPayload(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSummary {
    /// Position in the entity's record list (registration order).
    pub index: usize,
    pub event_kind: String,
    pub event_class: EventClass,
    pub registrant: Address,
    pub height: u64,
    pub parameters: Vec<ParamTriple>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<Address>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notarization: Option<NotarizationRecord>,
    pub asseveration_count: usize,
    pub asseverators: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceNode {
    pub address: Address,
    pub kind_id: String,
    pub class: KindClass,
    pub producer: Address,
    pub company: String,
    pub quantity: u64,
    pub unit: String,
    pub status: EntityStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Most recent first.
    pub events: Vec<EventSummary>,
    /// One per origin, in origin order.
    pub children: Vec<TraceNode>,
    /// Set when `max_depth` stopped expansion below this node.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl TraceNode {
    /// Addresses of nodes without children that were not cut by `max_depth`.
    pub fn leaves(&self) -> BTreeSet<Address> {
        let mut out = BTreeSet::new();
        self.walk(&mut |n| {
            if n.children.is_empty() && !n.truncated {
                out.insert(n.address);
            }
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TraceNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn find(&self, address: &Address) -> Option<&TraceNode> {
        if self.address == *address {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(address))
    }
}

fn summarize(chain: &Chain, entity: Address, index: usize, r: &EventRecord) -> Result<EventSummary, ProvenanceError> {
    let corrupt = || ProvenanceError::CorruptLog { entity, index };
    let payload = &chain.log_entry(r.log).ok_or_else(corrupt)?.payload;
    let parameters = decode_parameters(payload).map_err(|_| corrupt())?;
    let (inputs, outputs, notarization) = match &r.body {
        RecordBody::Transformation { inputs, outputs, .. } | RecordBody::Merge { inputs, outputs } => {
            (inputs.clone(), outputs.clone(), None)
        }
        RecordBody::Split { parent, children } => (vec![*parent], children.clone(), None),
        RecordBody::Notarization(n) => (Vec::new(), Vec::new(), Some(n.clone())),
        RecordBody::Documentation { .. } => (Vec::new(), Vec::new(), None),
    };
    Ok(EventSummary {
        index,
        event_kind: r.body.label().to_string(),
        event_class: r.body.event_class(),
        registrant: r.registrant,
        height: r.tx.height,
        parameters,
        inputs,
        outputs,
        notarization,
        asseveration_count: r.asseverations.len(),
        asseverators: r.asseverations.iter().map(|a| a.certifier).collect(),
    })
}

fn node(chain: &Chain, address: Address, depth: usize, max_depth: Option<usize>) -> Result<TraceNode, ProvenanceError> {
    let state = chain.state();
    let e = state
        .entity(&address)
        .ok_or(ProvenanceError::UnknownEntity(address))?;
    let mut events = e
        .events
        .iter()
        .enumerate()
        .map(|(i, r)| summarize(chain, address, i, r))
        .collect::<Result<Vec<_>, _>>()?;
    events.reverse();
    let stop = max_depth.is_some_and(|m| depth >= m);
    let children = if stop {
        Vec::new()
    } else {
        e.origins
            .iter()
            .map(|o| node(chain, *o, depth + 1, max_depth))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(TraceNode {
        address,
        kind_id: e.kind_id.clone(),
        class: e.class,
        producer: e.producer,
        company: state
            .producers
            .get(&e.producer)
            .map(|p| p.company_name.clone())
            .unwrap_or_default(),
        quantity: e.quantity,
        unit: e.unit.clone(),
        status: e.status,
        description: e.description.clone(),
        events,
        children,
        truncated: stop && !e.origins.is_empty(),
    })
}

/// Full origin tree of `address` over sealed state. Shared ancestors are
/// repeated on every path that reaches them.
pub fn trace_back(chain: &Chain, address: Address, max_depth: Option<usize>) -> Result<TraceNode, ProvenanceError> {
    node(chain, address, 0, max_depth)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descendant {
    pub address: Address,
    pub kind_id: String,
    /// Shortest distance from the start entity.
    pub depth: usize,
    pub origins: Vec<Address>,
}

/// Every entity reachable through `produced` links, breadth first.
pub fn trace_forward(chain: &Chain, address: Address) -> Result<Vec<Descendant>, ProvenanceError> {
    let state = chain.state();
    let start = state
        .entity(&address)
        .ok_or(ProvenanceError::UnknownEntity(address))?;
    let mut seen = BTreeSet::from([address]);
    let mut queue: VecDeque<(Address, usize)> = start.produced.iter().map(|p| (*p, 1)).collect();
    let mut out = Vec::new();
    while let Some((a, depth)) = queue.pop_front() {
        if !seen.insert(a) {
            continue;
        }
        let e = state.entity(&a).ok_or(ProvenanceError::UnknownEntity(a))?;
        out.push(Descendant {
            address: a,
            kind_id: e.kind_id.clone(),
            depth,
            origins: e.origins.clone(),
        });
        queue.extend(e.produced.iter().map(|p| (*p, depth + 1)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Json,
    Text,
}

impl FromStr for TraceFormat {
    type Err = ProvenanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(TraceFormat::Json),
            "text" => Ok(TraceFormat::Text),
            other => Err(ProvenanceError::UnknownFormat(other.to_string())),
        }
    }
}

pub fn render_trace(tree: &TraceNode, format: &str) -> Result<String, ProvenanceError> {
    Ok(match format.parse()? {
        TraceFormat::Json => {
            let mut s = serde_json::to_string_pretty(tree).expect("trace serializes");
            s.push('\n');
            s
        }
        TraceFormat::Text => {
            let mut s = String::new();
            text_node(&mut s, tree, 0);
            s
        }
    })
}

fn text_node(out: &mut String, n: &TraceNode, depth: usize) {
    let pad = "  ".repeat(depth);
    let status = match n.status {
        EntityStatus::Active => "active",
        EntityStatus::Invalidated => "invalidated",
    };
    let _ = writeln!(
        out,
        "{pad}{} {} [{:?}, {status}] {} {} from {}",
        n.kind_id, n.address, n.class, n.quantity, n.unit, n.company
    );
    if let Some(d) = &n.description {
        let _ = writeln!(out, "{pad}  description: {d}");
    }
    for e in &n.events {
        let _ = writeln!(
            out,
            "{pad}  * {} ({:?}) block {} by {}, {} asseveration(s)",
            e.event_kind, e.event_class, e.height, e.registrant, e.asseveration_count
        );
        for p in &e.parameters {
            let _ = writeln!(out, "{pad}      {} = {}", p.name, p.value.replace('\u{1f}', " "));
        }
        if let Some(nr) = &e.notarization {
            let _ = writeln!(out, "{pad}      document {} at {}", nr.digest, nr.locator);
        }
    }
    if n.truncated {
        let _ = writeln!(out, "{pad}  (origins not expanded)");
    }
    for c in &n.children {
        text_node(out, c, depth + 1);
    }
}

/// `trace://<chain-id>/product/<entity address>`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QrPayload {
    pub chain_id: String,
    pub address: Address,
}

const QR_SCHEME: &str = "trace://";

impl fmt::Display for QrPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{QR_SCHEME}{}/product/{}", self.chain_id, self.address)
    }
}

impl FromStr for QrPayload {
    type Err = ProvenanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ProvenanceError::BadPayload(m.to_string());
        let rest = s.strip_prefix(QR_SCHEME).ok_or_else(|| bad("missing trace:// scheme"))?;
        let (chain_id, addr) = rest
            .split_once("/product/")
            .ok_or_else(|| bad("expected <chain-id>/product/<address>"))?;
        if chain_id.is_empty() || chain_id.contains('/') {
            return Err(bad("invalid chain id"));
        }
        if !addr.starts_with("0x") {
            return Err(bad("address must start with 0x"));
        }
        let address = addr.parse().map_err(|_| bad("invalid address"))?;
        Ok(QrPayload {
            chain_id: chain_id.to_string(),
            address,
        })
    }
}
