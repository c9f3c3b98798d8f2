//! Supply-chain contract state.
//!
//! Every change enters through [`Operation`]s executed by the ledger. The
//! state mirrors the contract model: an address catalog owned by the
//! administrator, one producer contract per company, resource and product
//! instances linked through `origins`/`produced`, per-kind token balances,
//! unlock requests and native-currency balances.

mod error;
mod exec;
mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{EventClass, KindClass, Role, SupplyChainConfig};
use crate::crypto::{hash_parts, Address, Hash};

pub use error::ContractError;
pub use exec::{bind_values, ExecContext};
pub use ops::{Operation, OutputSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub actor_id: String,
    pub roles: BTreeSet<Role>,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProducerContract {
    pub address: Address,
    pub company_name: String,
    /// Every resource and product related to the company.
    pub owned: BTreeSet<Address>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityStatus {
    Active,
    Invalidated,
}

/// Points at the transaction that made a change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxRef {
    pub height: u64,
    pub tx: Hash,
}

/// Position of a log entry: block height and index within that block's log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRef {
    pub height: u64,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asseveration {
    pub certifier: Address,
    pub tx: TxRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotarizationRecord {
    pub digest: Hash,
    /// URI or content id where the document can be fetched.
    pub locator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecordBody {
    Documentation {
        event_kind_id: String,
    },
    Transformation {
        event_kind_id: String,
        inputs: Vec<Address>,
        outputs: Vec<Address>,
    },
    Split {
        parent: Address,
        children: Vec<Address>,
    },
    Merge {
        inputs: Vec<Address>,
        outputs: Vec<Address>,
    },
    Notarization(NotarizationRecord),
}

impl RecordBody {
    pub fn event_class(&self) -> EventClass {
        match self {
            RecordBody::Documentation { .. } | RecordBody::Notarization(_) => EventClass::D,
            _ => EventClass::T,
        }
    }

    /// Configured event kind, or the built-in name for split/merge/notarization.
    pub fn label(&self) -> &str {
        match self {
            RecordBody::Documentation { event_kind_id }
            | RecordBody::Transformation { event_kind_id, .. } => event_kind_id,
            RecordBody::Split { .. } => "split",
            RecordBody::Merge { .. } => "merge",
            RecordBody::Notarization(_) => "notarization",
        }
    }
}

/// An event attached to a resource or product. The encoded parameters live
/// in the event log at `log`; persistent state keeps only this reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub body: RecordBody,
    pub registrant: Address,
    pub tx: TxRef,
    pub log: LogRef,
    /// Append-only; the same certifier may appear more than once.
    pub asseverations: Vec<Asseveration>,
}

/// What a successful operation produced, for callers that need the new ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// Entities created, in output order.
    pub created: Vec<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlock_request: Option<u64>,
}

/// A productive resource (no origins) or a product lot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub address: Address,
    pub kind_id: String,
    pub class: KindClass,
    pub producer: Address,
    /// Account holding this product's tokens; the creator for resources.
    pub holder: Address,
    /// Frozen at creation. Always empty for resources.
    pub origins: Vec<Address>,
    /// Append-only.
    pub produced: Vec<Address>,
    /// Base units for products, size for resources.
    pub quantity: u64,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub status: EntityStatus,
    pub created: TxRef,
    pub events: Vec<EventRecord>,
}

impl Entity {
    pub fn is_active(&self) -> bool {
        self.status == EntityStatus::Active
    }

    pub fn is_resource(&self) -> bool {
        self.class == KindClass::R
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnlockStatus {
    Pending,
    Unlocked,
    Consumed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlockRequest {
    pub id: u64,
    pub event_kind_id: String,
    pub target: Address,
    pub requested_by: Address,
    /// Actor ids whose approval is needed.
    pub required: BTreeSet<String>,
    /// Approving actor id → address that sent the approval.
    pub approvals: BTreeMap<String, Address>,
    pub status: UnlockStatus,
}

/// Per-kind, per-holder token amounts. Zero balances are removed so the
/// serialized form does not depend on history.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenLedger(BTreeMap<String, BTreeMap<Address, u64>>);

impl TokenLedger {
    pub fn balance(&self, kind_id: &str, holder: &Address) -> u64 {
        self.0
            .get(kind_id)
            .and_then(|m| m.get(holder))
            .copied()
            .unwrap_or(0)
    }

    pub fn supply(&self, kind_id: &str) -> u64 {
        self.0.get(kind_id).map_or(0, |m| m.values().sum())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Address, u64)> {
        self.0
            .iter()
            .flat_map(|(k, m)| m.iter().map(move |(a, v)| (k.as_str(), a, *v)))
    }

    pub(crate) fn mint(&mut self, kind_id: &str, holder: Address, amount: u64) {
        if amount == 0 {
            return;
        }
        *self
            .0
            .entry(kind_id.to_string())
            .or_default()
            .entry(holder)
            .or_default() += amount;
    }

    /// Callers check the balance first; burning more than held is a bug.
    pub(crate) fn burn(&mut self, kind_id: &str, holder: Address, amount: u64) {
        if amount == 0 {
            return;
        }
        let per_kind = self.0.get_mut(kind_id).expect("burn from known kind");
        let bal = per_kind.get_mut(&holder).expect("burn from holder");
        *bal = bal.checked_sub(amount).expect("burn within balance");
        if *bal == 0 {
            per_kind.remove(&holder);
        }
        if per_kind.is_empty() {
            self.0.remove(kind_id);
        }
    }
}

/// All contract state. Serialized with sorted keys, so its digest is the
/// platform-independent state root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractState {
    pub chain_id: String,
    pub config: Arc<SupplyChainConfig>,
    pub owner: Address,
    pub catalog: BTreeMap<Address, CatalogEntry>,
    pub producers: BTreeMap<Address, ProducerContract>,
    pub entities: BTreeMap<Address, Entity>,
    pub tokens: TokenLedger,
    pub unlocks: BTreeMap<u64, UnlockRequest>,
    pub balances: BTreeMap<Address, u64>,
}

impl ContractState {
    /// Fresh state: the owner is catalogued under `owner_actor_id` and one
    /// producer contract exists per configured company.
    pub fn new(
        chain_id: &str,
        config: Arc<SupplyChainConfig>,
        owner: Address,
        owner_actor_id: &str,
        allocations: &BTreeMap<Address, u64>,
    ) -> Result<ContractState, ContractError> {
        let actor = config
            .actor(owner_actor_id)
            .ok_or_else(|| ContractError::UnknownActor(owner_actor_id.to_string()))?;
        if actor.role != Role::Administrator {
            return Err(ContractError::Unauthorized(format!(
                "owner actor `{owner_actor_id}` is not an administrator"
            )));
        }
        let mut catalog = BTreeMap::new();
        catalog.insert(
            owner,
            CatalogEntry {
                actor_id: owner_actor_id.to_string(),
                roles: BTreeSet::from([Role::Administrator]),
                enabled: true,
            },
        );
        let producers = config
            .companies
            .keys()
            .map(|name| {
                let address = producer_address(chain_id, name);
                (
                    address,
                    ProducerContract {
                        address,
                        company_name: name.clone(),
                        owned: BTreeSet::new(),
                    },
                )
            })
            .collect();
        Ok(ContractState {
            chain_id: chain_id.to_string(),
            config,
            owner,
            catalog,
            producers,
            entities: BTreeMap::new(),
            tokens: TokenLedger::default(),
            unlocks: BTreeMap::new(),
            balances: allocations.clone(),
        })
    }

    pub fn entity(&self, address: &Address) -> Option<&Entity> {
        self.entities.get(address)
    }

    pub fn producer_by_company(&self, company: &str) -> Option<&ProducerContract> {
        self.producers.values().find(|p| p.company_name == company)
    }

    pub fn catalog_entry(&self, address: &Address) -> Option<&CatalogEntry> {
        self.catalog.get(address)
    }

    /// Enabled addresses bound to `actor_id`.
    pub fn addresses_of(&self, actor_id: &str) -> Vec<Address> {
        self.catalog
            .iter()
            .filter(|(_, e)| e.enabled && e.actor_id == actor_id)
            .map(|(a, _)| *a)
            .collect()
    }

    pub fn balance(&self, address: &Address) -> u64 {
        self.balances.get(address).copied().unwrap_or(0)
    }

    /// Sum of quantities of active products of `kind_id`.
    pub fn live_quantity(&self, kind_id: &str) -> u64 {
        self.entities
            .values()
            .filter(|e| e.kind_id == kind_id && e.class == KindClass::P && e.is_active())
            .map(|e| e.quantity)
            .sum()
    }
}

/// Deterministic address of a company's producer contract.
pub fn producer_address(chain_id: &str, company: &str) -> Address {
    Address::from_digest(&hash_parts([
        b"producer".as_slice(),
        chain_id.as_bytes(),
        &[0],
        company.as_bytes(),
    ]))
}

/// Address of the `index`-th entity created by transaction `tx`.
pub fn entity_address(tx: &Hash, index: u32) -> Address {
    Address::from_digest(&hash_parts([
        b"entity".as_slice(),
        tx.as_bytes(),
        &index.to_be_bytes(),
    ]))
}
