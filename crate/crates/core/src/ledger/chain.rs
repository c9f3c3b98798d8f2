use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Block, BlockReceipt, GasMeter, GasSchedule, Genesis, LogEntry, Transaction};
use crate::contracts::{ContractError, ContractState, ExecContext, LogRef, Operation, Outcome, TxRef};
use crate::crypto::{hash, Address, Hash, Signer};

/// Persistent state covered by the state root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldState {
    pub gas_schedule: GasSchedule,
    /// Last nonce used by each sender.
    pub nonces: BTreeMap<Address, u64>,
    pub contracts: ContractState,
}

impl WorldState {
    /// Digest of the canonical serialization (all maps are key-sorted).
    pub fn root(&self) -> Hash {
        hash(&serde_json::to_vec(self).expect("state serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("bad signature")]
    BadSignature,
    #[error("stale nonce: expected {expected}, got {got}")]
    StaleNonce { expected: u64, got: u64 },
    #[error("nonce gap: expected {expected}, got {got}")]
    NonceGap { expected: u64, got: u64 },
    #[error("rejected: {0}")]
    Rejected(ContractError),
    #[error("invalid genesis: {0}")]
    InvalidGenesis(String),
    #[error("chain verification failed: {0}")]
    Verification(VerificationFailure),
}

/// Outcome of an accepted transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx: Hash,
    /// Height of the block the transaction will be sealed into.
    pub height: u64,
    pub index: u32,
    pub gas_used: u64,
    pub logs: Vec<LogEntry>,
    pub outcome: Outcome,
}

/// Where block timestamps come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSource {
    /// Wall clock, never earlier than the parent block.
    System,
    /// Parent timestamp + 1; reproducible.
    Logical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Decode,
    NonCanonical,
    MissingGenesis,
    UnexpectedGenesis,
    InvalidGenesis,
    HeightMismatch,
    HashMismatch,
    ParentMismatch,
    TimestampRegression,
    BadSignature,
    ReplayRejected,
    ReceiptMismatch,
    LogMismatch,
    StateRootMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationFailure {
    /// Index of the block record in the chain (equals its height when intact).
    pub block: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_index: Option<usize>,
    pub kind: FailureKind,
    pub detail: String,
}

impl fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}", self.block)?;
        if let Some(i) = self.tx_index {
            write!(f, " tx {i}")?;
        }
        write!(f, ": {:?}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub blocks_verified: u64,
    pub failure: Option<VerificationFailure>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Single-sealer chain. Submitted transactions execute immediately against
/// pending state; `seal_block` commits them. Queries read sealed state.
#[derive(Debug, Clone)]
pub struct Chain {
    blocks: Vec<Block>,
    sealed: WorldState,
    pending: WorldState,
    pending_txs: Vec<Transaction>,
    pending_receipts: Vec<BlockReceipt>,
    pending_logs: Vec<LogEntry>,
    time: TimeSource,
}

pub(super) fn fail(block: u64, tx_index: Option<usize>, kind: FailureKind, detail: impl Into<String>) -> VerificationFailure {
    VerificationFailure {
        block,
        tx_index,
        kind,
        detail: detail.into(),
    }
}

fn genesis_state(g: &Genesis) -> Result<WorldState, LedgerError> {
    g.config
        .revalidate()
        .map_err(|v| LedgerError::InvalidGenesis(format!("{} config violation(s)", v.len())))?;
    g.gas_schedule
        .validate()
        .map_err(|e| LedgerError::InvalidGenesis(e.to_string()))?;
    let contracts = ContractState::new(
        &g.chain_id,
        Arc::new(g.config.clone()),
        g.owner,
        &g.owner_actor_id,
        &g.allocations,
    )
    .map_err(|e| LedgerError::InvalidGenesis(e.to_string()))?;
    Ok(WorldState {
        gas_schedule: g.gas_schedule,
        nonces: BTreeMap::new(),
        contracts,
    })
}

impl Chain {
    pub fn genesis(genesis: Genesis, time: TimeSource) -> Result<Chain, LedgerError> {
        let state = genesis_state(&genesis)?;
        let mut block = Block {
            height: 0,
            parent_hash: Hash::ZERO,
            timestamp: genesis.timestamp,
            genesis: Some(genesis),
            transactions: Vec::new(),
            receipts: Vec::new(),
            log_entries: Vec::new(),
            state_root: state.root(),
            hash: Hash::ZERO,
        };
        block.hash = block.compute_hash();
        Ok(Chain {
            blocks: vec![block],
            sealed: state.clone(),
            pending: state,
            pending_txs: Vec::new(),
            pending_receipts: Vec::new(),
            pending_logs: Vec::new(),
            time,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("genesis present")
    }

    pub fn height(&self) -> u64 {
        self.head().height
    }

    pub fn chain_id(&self) -> &str {
        &self.sealed.contracts.chain_id
    }

    /// Sealed contract state.
    pub fn state(&self) -> &ContractState {
        &self.sealed.contracts
    }

    pub fn world(&self) -> &WorldState {
        &self.sealed
    }

    /// State including executed but unsealed transactions.
    pub fn pending_state(&self) -> &ContractState {
        &self.pending.contracts
    }

    pub fn pending_len(&self) -> usize {
        self.pending_txs.len()
    }

    pub fn gas_schedule(&self) -> &GasSchedule {
        &self.sealed.gas_schedule
    }

    /// Nonce the next transaction from `sender` must carry.
    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.pending.nonces.get(sender).copied().unwrap_or(0) + 1
    }

    pub fn log_entry(&self, at: LogRef) -> Option<&LogEntry> {
        self.blocks
            .get(at.height as usize)?
            .log_entries
            .get(at.index as usize)
    }

    /// Signs `op` with the next nonce and submits it.
    pub fn execute(&mut self, signer: &impl Signer, op: Operation) -> Result<Receipt, LedgerError> {
        let nonce = self.next_nonce(&signer.address());
        self.submit(Transaction::sign(signer, nonce, op))
    }

    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        tx.verify_signature().map_err(|_| LedgerError::BadSignature)?;
        self.apply_verified(tx)
    }

    fn apply_verified(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce < expected {
            return Err(LedgerError::StaleNonce {
                expected,
                got: tx.nonce,
            });
        }
        if tx.nonce > expected {
            return Err(LedgerError::NonceGap {
                expected,
                got: tx.nonce,
            });
        }
        let digest = tx.digest();
        let height = self.height() + 1;
        let mut ctx = ExecContext {
            sender: tx.sender,
            tx: TxRef { height, tx: digest },
            log_offset: self.pending_logs.len() as u32,
            meter: GasMeter::new(self.pending.gas_schedule, tx.signing_bytes().len()),
            logs: Vec::new(),
        };
        let mut contracts = self.pending.contracts.clone();
        let outcome = contracts
            .apply(&mut ctx, &tx.operation)
            .map_err(LedgerError::Rejected)?;
        self.pending.contracts = contracts;
        self.pending.nonces.insert(tx.sender, tx.nonce);
        let receipt = Receipt {
            tx: digest,
            height,
            index: self.pending_txs.len() as u32,
            gas_used: ctx.meter.used(),
            logs: ctx.logs.clone(),
            outcome,
        };
        self.pending_receipts.push(BlockReceipt {
            gas_used: receipt.gas_used,
            log_count: ctx.logs.len() as u32,
        });
        self.pending_logs.extend(ctx.logs);
        self.pending_txs.push(tx);
        Ok(receipt)
    }

    fn next_timestamp(&self) -> u64 {
        let parent = self.head().timestamp;
        match self.time {
            TimeSource::Logical => parent + 1,
            TimeSource::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
                .max(parent),
        }
    }

    pub fn seal_block(&mut self) -> &Block {
        let ts = self.next_timestamp();
        self.seal_block_at(ts)
    }

    /// Seals pending transactions in arrival order. Empty blocks are allowed.
    pub fn seal_block_at(&mut self, timestamp: u64) -> &Block {
        let parent = self.head();
        let mut block = Block {
            height: parent.height + 1,
            parent_hash: parent.hash,
            timestamp: timestamp.max(parent.timestamp),
            genesis: None,
            transactions: std::mem::take(&mut self.pending_txs),
            receipts: std::mem::take(&mut self.pending_receipts),
            log_entries: std::mem::take(&mut self.pending_logs),
            state_root: self.pending.root(),
            hash: Hash::ZERO,
        };
        block.hash = block.compute_hash();
        self.sealed = self.pending.clone();
        self.blocks.push(block);
        self.head()
    }

    /// Rebuilds a chain by replaying `blocks` from genesis, checking every
    /// hash, link, signature, receipt, log entry and state root.
    pub fn replay(blocks: &[Block], time: TimeSource) -> Result<Chain, VerificationFailure> {
        let first = blocks
            .first()
            .ok_or_else(|| fail(0, None, FailureKind::MissingGenesis, "empty chain"))?;
        let genesis = first
            .genesis
            .clone()
            .ok_or_else(|| fail(0, None, FailureKind::MissingGenesis, "block 0 has no genesis"))?;
        if first.compute_hash() != first.hash {
            return Err(fail(0, None, FailureKind::HashMismatch, "stored hash differs"));
        }
        if first.height != 0
            || first.parent_hash != Hash::ZERO
            || first.timestamp != genesis.timestamp
            || !first.transactions.is_empty()
            || !first.receipts.is_empty()
            || !first.log_entries.is_empty()
        {
            return Err(fail(0, None, FailureKind::InvalidGenesis, "malformed genesis block"));
        }
        let mut chain = Chain::genesis(genesis, time)
            .map_err(|e| fail(0, None, FailureKind::InvalidGenesis, e.to_string()))?;
        if chain.blocks[0] != *first {
            return Err(fail(0, None, FailureKind::StateRootMismatch, "genesis state differs"));
        }
        for (i, b) in blocks.iter().enumerate().skip(1) {
            chain.replay_block(i as u64, b)?;
        }
        Ok(chain)
    }

    fn replay_block(&mut self, i: u64, b: &Block) -> Result<(), VerificationFailure> {
        let parent = self.head().clone();
        if b.genesis.is_some() {
            return Err(fail(i, None, FailureKind::UnexpectedGenesis, "genesis data after block 0"));
        }
        if b.height != i {
            return Err(fail(i, None, FailureKind::HeightMismatch, format!("height {}", b.height)));
        }
        if b.compute_hash() != b.hash {
            return Err(fail(i, None, FailureKind::HashMismatch, "stored hash differs"));
        }
        if b.parent_hash != parent.hash {
            return Err(fail(i, None, FailureKind::ParentMismatch, "parent hash differs"));
        }
        if b.timestamp < parent.timestamp {
            return Err(fail(i, None, FailureKind::TimestampRegression, "timestamp before parent"));
        }
        for (t, tx) in b.transactions.iter().enumerate() {
            if tx.verify_signature().is_err() {
                return Err(fail(i, Some(t), FailureKind::BadSignature, format!("sender {}", tx.sender)));
            }
        }
        for (t, tx) in b.transactions.iter().enumerate() {
            self.apply_verified(tx.clone())
                .map_err(|e| fail(i, Some(t), FailureKind::ReplayRejected, e.to_string()))?;
        }
        if self.pending_receipts != b.receipts {
            return Err(fail(i, None, FailureKind::ReceiptMismatch, "receipts differ from replay"));
        }
        if self.pending_logs != b.log_entries {
            return Err(fail(i, None, FailureKind::LogMismatch, "log entries differ from replay"));
        }
        let sealed = self.seal_block_at(b.timestamp);
        if sealed.state_root != b.state_root {
            return Err(fail(i, None, FailureKind::StateRootMismatch, "state root differs from replay"));
        }
        debug_assert_eq!(sealed, b);
        Ok(())
    }
}

/// Full verification of an in-memory chain.
pub fn verify_chain(blocks: &[Block]) -> VerificationReport {
    match Chain::replay(blocks, TimeSource::Logical) {
        Ok(c) => VerificationReport {
            blocks_verified: c.blocks.len() as u64,
            failure: None,
        },
        Err(f) => VerificationReport {
            blocks_verified: f.block,
            failure: Some(f),
        },
    }
}
