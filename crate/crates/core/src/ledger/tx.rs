use serde::{Deserialize, Serialize};

use crate::contracts::Operation;
use crate::crypto::{self, hash, Address, CryptoError, Hash, PublicKey, Signature, Signer};

/// A signed call into the contracts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub sender: Address,
    pub public_key: PublicKey,
    /// 1 for a sender's first transaction, then +1 each time.
    pub nonce: u64,
    pub operation: Operation,
    pub signature: Signature,
}

/// The signed portion of a transaction.
#[derive(Serialize)]
struct SigningPayload<'a> {
    sender: &'a Address,
    nonce: u64,
    operation: &'a Operation,
}

pub(crate) fn signing_bytes(sender: &Address, nonce: u64, operation: &Operation) -> Vec<u8> {
    serde_json::to_vec(&SigningPayload {
        sender,
        nonce,
        operation,
    })
    .expect("operation serializes")
}

impl Transaction {
    pub fn sign(signer: &impl Signer, nonce: u64, operation: Operation) -> Transaction {
        let sender = signer.address();
        let signature = signer.sign(&signing_bytes(&sender, nonce, &operation));
        Transaction {
            sender,
            public_key: signer.public_key(),
            nonce,
            operation,
            signature,
        }
    }

    pub fn signing_bytes(&self) -> Vec<u8> {
        signing_bytes(&self.sender, self.nonce, &self.operation)
    }

    /// The key must derive the sender address and the signature must verify.
    pub fn verify_signature(&self) -> Result<(), CryptoError> {
        if Address::from_public_key(&self.public_key) != self.sender {
            return Err(CryptoError::BadSignature);
        }
        crypto::verify(&self.public_key, &self.signing_bytes(), &self.signature)
    }

    /// Digest of the full canonical encoding, signature included.
    pub fn digest(&self) -> Hash {
        hash(&serde_json::to_vec(self).expect("transaction serializes"))
    }
}
