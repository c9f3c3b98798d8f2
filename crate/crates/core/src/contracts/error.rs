use serde::{Deserialize, Serialize};

use crate::crypto::Address;
use crate::params::ParamError;

/// Contract-level rejection. The `code` is stable and travels verbatim
/// through the HTTP API.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail", rename_all = "snake_case")]
pub enum ContractError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("role missing: {0}")]
    RoleMissing(String),
    #[error("unknown actor `{0}`")]
    UnknownActor(String),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("unknown event kind `{0}`")]
    UnknownEventKind(String),
    #[error("unknown entity {0}")]
    UnknownEntity(Address),
    #[error("unknown producer {0}")]
    UnknownProducer(Address),
    #[error("unknown record {index} on {entity}")]
    UnknownRecord { entity: Address, index: u32 },
    #[error("unknown unlock request {0}")]
    UnknownUnlock(u64),
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error("event kind `{event_kind}` does not apply to kind `{kind}`")]
    NotApplicable { event_kind: String, kind: String },
    #[error("event kind `{event_kind}` cannot generate kind `{kind}`")]
    NotGenerated { event_kind: String, kind: String },
    #[error("company `{company}` does not manage kind `{kind}`")]
    NotManaged { company: String, kind: String },
    #[error("entity {0} is invalidated")]
    Invalidated(Address),
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("yield exceeded: {output} > {ratio} x {input}")]
    YieldExceeded { output: u64, input: u64, ratio: String },
    #[error("event kind `{event_kind}` on {target} is locked")]
    Locked { event_kind: String, target: Address },
    #[error("quantities sum to {actual}, expected {expected}")]
    SumMismatch { expected: u64, actual: u64 },
    #[error("quantity parts must be positive")]
    ZeroPart,
    #[error("kind mismatch: `{0}` vs `{1}`")]
    KindMismatch(String, String),
    #[error("unit mismatch: `{0}` vs `{1}`")]
    UnitMismatch(String, String),
    #[error("quantity overflow")]
    Overflow,
    #[error("empty document")]
    EmptyDocument,
    #[error("{0}")]
    Malformed(String),
    #[error("approver is not required for unlock request {0}")]
    NotRequiredApprover(u64),
    #[error("unlock request {0} is not pending")]
    UnlockNotPending(u64),
    #[error("insufficient funds: balance {balance}, amount {amount}")]
    InsufficientFunds { balance: u64, amount: u64 },
    #[error("amount must be positive")]
    ZeroAmount,
}

impl ContractError {
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::Unauthorized(_) => "unauthorized",
            ContractError::RoleMissing(_) => "role_missing",
            ContractError::UnknownActor(_) => "unknown_actor",
            ContractError::UnknownKind(_) => "unknown_kind",
            ContractError::UnknownEventKind(_) => "unknown_event_kind",
            ContractError::UnknownEntity(_) => "unknown_entity",
            ContractError::UnknownProducer(_) => "unknown_producer",
            ContractError::UnknownRecord { .. } => "unknown_record",
            ContractError::UnknownUnlock(_) => "unknown_unlock",
            ContractError::ClassMismatch(_) => "class_mismatch",
            ContractError::NotApplicable { .. } => "not_applicable",
            ContractError::NotGenerated { .. } => "not_generated",
            ContractError::NotManaged { .. } => "not_managed",
            ContractError::Invalidated(_) => "invalidated",
            ContractError::Param(_) => "invalid_parameters",
            ContractError::YieldExceeded { .. } => "yield_exceeded",
            ContractError::Locked { .. } => "locked",
            ContractError::SumMismatch { .. } => "sum_mismatch",
            ContractError::ZeroPart => "zero_part",
            ContractError::KindMismatch(..) => "kind_mismatch",
            ContractError::UnitMismatch(..) => "unit_mismatch",
            ContractError::Overflow => "overflow",
            ContractError::EmptyDocument => "empty_document",
            ContractError::Malformed(_) => "malformed",
            ContractError::NotRequiredApprover(_) => "not_required_approver",
            ContractError::UnlockNotPending(_) => "unlock_not_pending",
            ContractError::InsufficientFunds { .. } => "insufficient_funds",
            ContractError::ZeroAmount => "zero_amount",
        }
    }

    /// Caller lacks permission, as opposed to a malformed or impossible request.
    pub fn is_authorization(&self) -> bool {
        matches!(
            self,
            ContractError::Unauthorized(_)
                | ContractError::RoleMissing(_)
                | ContractError::NotRequiredApprover(_)
        )
    }

    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            ContractError::UnknownEntity(_)
                | ContractError::UnknownProducer(_)
                | ContractError::UnknownRecord { .. }
                | ContractError::UnknownUnlock(_)
        )
    }
}

impl From<ParamError> for ContractError {
    fn from(e: ParamError) -> Self {
        ContractError::Param(e.to_string())
    }
}
