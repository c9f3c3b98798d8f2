use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::Role;
use crate::crypto::{Address, Hash};
use crate::params::ParamTriple;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub kind_id: String,
    pub quantity: u64,
    pub unit: String,
}

/// A state-changing contract call. Unknown operation names fail to decode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    /// Owner only. Re-registering replaces roles and the enabled flag.
    RegisterAddress {
        address: Address,
        actor_id: String,
        roles: BTreeSet<Role>,
        enabled: bool,
    },
    CreateResource {
        producer: Address,
        kind_id: String,
        description: String,
        size: u64,
        unit: String,
    },
    RecordEvent {
        entity: Address,
        event_kind_id: String,
        values: BTreeMap<String, String>,
    },
    Transform {
        inputs: Vec<Address>,
        event_kind_id: String,
        outputs: Vec<OutputSpec>,
        values: BTreeMap<String, String>,
    },
    Split {
        product: Address,
        quantities: Vec<u64>,
    },
    Merge {
        products: Vec<Address>,
        quantities: Vec<u64>,
    },
    Notarize {
        entity: Address,
        digest: Hash,
        locator: String,
        metadata: Vec<ParamTriple>,
    },
    Asseverate {
        entity: Address,
        record: u32,
    },
    RequestUnlock {
        event_kind_id: String,
        target: Address,
    },
    ApproveUnlock {
        request: u64,
    },
    Pay {
        recipient: Address,
        amount: u64,
    },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::RegisterAddress { .. } => "register_address",
            Operation::CreateResource { .. } => "create_resource",
            Operation::RecordEvent { .. } => "record_event",
            Operation::Transform { .. } => "transform",
            Operation::Split { .. } => "split",
            Operation::Merge { .. } => "merge",
            Operation::Notarize { .. } => "notarize",
            Operation::Asseverate { .. } => "asseverate",
            Operation::RequestUnlock { .. } => "request_unlock",
            Operation::ApproveUnlock { .. } => "approve_unlock",
            Operation::Pay { .. } => "pay",
        }
    }
}
