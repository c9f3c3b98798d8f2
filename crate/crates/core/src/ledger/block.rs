use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GasSchedule, Transaction};
use crate::config::SupplyChainConfig;
use crate::crypto::{hash_parts, Address, Hash};

/// Event-log record. Sealed logs are readable through query APIs only;
/// contract code never reads them back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEntry {
    pub contract: Address,
    pub topic: String,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
}

mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        if s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(serde::de::Error::custom("hex must be lowercase"));
        }
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}

/// Execution outcome recorded per transaction in a sealed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockReceipt {
    pub gas_used: u64,
    pub log_count: u32,
}

/// Everything needed to rebuild the initial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Genesis {
    pub chain_id: String,
    pub config: SupplyChainConfig,
    pub owner: Address,
    pub owner_actor_id: String,
    pub allocations: BTreeMap<Address, u64>,
    pub gas_schedule: GasSchedule,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub parent_hash: Hash,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genesis: Option<Genesis>,
    pub transactions: Vec<Transaction>,
    pub receipts: Vec<BlockReceipt>,
    pub log_entries: Vec<LogEntry>,
    pub state_root: Hash,
    pub hash: Hash,
}

impl Block {
    /// digest(height ‖ parent ‖ tx digests ‖ state root ‖ timestamp)
    pub fn compute_hash(&self) -> Hash {
        let height = self.height.to_be_bytes();
        let ts = self.timestamp.to_be_bytes();
        let digests: Vec<Hash> = self.transactions.iter().map(Transaction::digest).collect();
        let mut parts: Vec<&[u8]> = vec![&height, self.parent_hash.as_bytes()];
        parts.extend(digests.iter().map(|d| d.as_bytes().as_slice()));
        parts.push(self.state_root.as_bytes());
        parts.push(&ts);
        hash_parts(parts)
    }
}
