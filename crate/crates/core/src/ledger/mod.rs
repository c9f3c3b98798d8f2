//! Simulated permissioned ledger: signed transactions, hash-chained blocks,
//! persistent state versus event log, gas accounting.

mod block;
mod chain;
mod file;
mod gas;
mod tx;

pub use block::{Block, BlockReceipt, Genesis, LogEntry};
pub use chain::{
    verify_chain, Chain, FailureKind, LedgerError, Receipt, TimeSource, VerificationFailure,
    VerificationReport, WorldState,
};
pub use file::{append_block, decode_chain, encode_block, encode_chain, read_chain_file, verify_chain_bytes, write_chain_file};
pub use gas::{GasError, GasMeter, GasSchedule, StorageMode, SLOT_BYTES};
pub use tx::Transaction;
