//! Gas accounting.
//!
//! Two storage classes are priced differently: persistent contract state is
//! charged per 32-byte slot, the event log per byte. Event payloads are read
//! only by external applications, so they go to the log.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const SLOT_BYTES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSchedule {
    pub base_tx_cost: u64,
    pub calldata_cost_per_byte: u64,
    pub storage_new_slot_cost: u64,
    pub storage_update_cost: u64,
    pub log_base_cost: u64,
    pub log_topic_cost: u64,
    pub log_cost_per_byte: u64,
}

impl Default for GasSchedule {
    /// Public Ethereum mainnet constants.
    fn default() -> Self {
        GasSchedule {
            base_tx_cost: 21_000,
            calldata_cost_per_byte: 16,
            storage_new_slot_cost: 20_000,
            storage_update_cost: 5_000,
            log_base_cost: 375,
            log_topic_cost: 375,
            log_cost_per_byte: 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GasError {
    #[error("unknown storage mode `{0}` (expected `log` or `persistent`)")]
    UnknownMode(String),
    #[error("a new storage slot must cost more than 32 log bytes ({slot} <= {per_byte} * 32)")]
    Ordering { slot: u64, per_byte: u64 },
    #[error("gas schedule: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("gas schedule: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    Persistent,
    Log,
}

impl FromStr for StorageMode {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "persistent" => Ok(StorageMode::Persistent),
            "log" => Ok(StorageMode::Log),
            other => Err(GasError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for StorageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StorageMode::Persistent => "persistent",
            StorageMode::Log => "log",
        })
    }
}

impl GasSchedule {
    pub fn validate(&self) -> Result<(), GasError> {
        if self.storage_new_slot_cost <= self.log_cost_per_byte.saturating_mul(SLOT_BYTES) {
            return Err(GasError::Ordering {
                slot: self.storage_new_slot_cost,
                per_byte: self.log_cost_per_byte,
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<GasSchedule, GasError> {
        let s: GasSchedule = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<GasSchedule, GasError> {
        GasSchedule::from_json(&std::fs::read_to_string(path)?)
    }

    /// Cost of a transaction carrying `payload_bytes` of data stored with
    /// `mode`, one log topic and no pre-existing slots touched.
    pub fn estimate(&self, mode: StorageMode, payload_bytes: u64) -> u64 {
        self.estimate_with(mode, payload_bytes, 1, 0)
    }

    pub fn estimate_with(
        &self,
        mode: StorageMode,
        payload_bytes: u64,
        topics: u64,
        updated_slots: u64,
    ) -> u64 {
        let fixed = self.base_tx_cost + payload_bytes * self.calldata_cost_per_byte;
        match mode {
            StorageMode::Persistent => {
                fixed
                    + payload_bytes.div_ceil(SLOT_BYTES) * self.storage_new_slot_cost
                    + updated_slots * self.storage_update_cost
            }
            StorageMode::Log => {
                fixed
                    + self.log_base_cost
                    + topics * self.log_topic_cost
                    + payload_bytes * self.log_cost_per_byte
            }
        }
    }
}

/// Running gas total for one executed transaction.
#[derive(Debug, Clone)]
pub struct GasMeter {
    schedule: GasSchedule,
    used: u64,
}

impl GasMeter {
    pub fn new(schedule: GasSchedule, calldata_bytes: usize) -> GasMeter {
        GasMeter {
            used: schedule.base_tx_cost + calldata_bytes as u64 * schedule.calldata_cost_per_byte,
            schedule,
        }
    }

    pub fn store_new(&mut self, bytes: usize) {
        self.used += (bytes as u64).div_ceil(SLOT_BYTES) * self.schedule.storage_new_slot_cost;
    }

    pub fn store_update(&mut self, slots: u64) {
        self.used += slots * self.schedule.storage_update_cost;
    }

    pub fn log(&mut self, topics: u64, bytes: usize) {
        self.used += self.schedule.log_base_cost
            + topics * self.schedule.log_topic_cost
            + bytes as u64 * self.schedule.log_cost_per_byte;
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}
