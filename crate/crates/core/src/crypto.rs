//! Hashing, addresses and transaction signing.
//!
//! One 32-byte hash function (SHA-256) is used everywhere: block and
//! transaction digests, state roots, content ids in the document store and
//! notarization digests. Keeping a single function makes notarized digests
//! directly comparable with content ids.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid hex: {0}")]
    Hex(String),
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("invalid key material")]
    InvalidKey,
    #[error("signature does not verify")]
    BadSignature,
}

/// Hashes `data` with the global 32-byte hash function.
pub fn hash(data: &[u8]) -> Hash {
    Hash(Sha256::digest(data).into())
}

/// Hashes the concatenation of several byte slices.
pub fn hash_parts<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> Hash {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Hash(h.finalize().into())
}

macro_rules! fixed_bytes {
    ($name:ident, $len:expr, $prefix:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
                let arr: [u8; $len] = bytes.try_into().map_err(|_| CryptoError::Length {
                    expected: $len,
                    actual: bytes.len(),
                })?;
                Ok(Self(arr))
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, hex::encode(self.0))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self)
            }
        }

        impl FromStr for $name {
            type Err = CryptoError;

            /// Accepts lowercase hex only, with the canonical prefix optional.
            /// Uppercase is rejected so that every value has exactly one text form.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let body = s.strip_prefix($prefix).unwrap_or(s);
                if body.len() != $len * 2
                    || !body.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
                {
                    return Err(CryptoError::Hex(s.to_string()));
                }
                let bytes = hex::decode(body).map_err(|_| CryptoError::Hex(s.to_string()))?;
                Self::from_slice(&bytes)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                // the prefix is mandatory in serialized form
                if !$prefix.is_empty() && !s.starts_with($prefix) {
                    return Err(serde::de::Error::custom(format!("missing {} prefix", $prefix)));
                }
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(Hash, 32, "");
fixed_bytes!(Address, 20, "0x");
fixed_bytes!(PublicKey, 32, "");
fixed_bytes!(Signature, 64, "");

impl Hash {
    pub const ZERO: Hash = Hash([0u8; 32]);
}

impl Address {
    /// Trailing 20 bytes of the hash of the public key.
    pub fn from_public_key(pk: &PublicKey) -> Address {
        Address::from_digest(&hash(pk.as_bytes()))
    }

    /// Trailing 20 bytes of an arbitrary digest; used for contract addresses.
    pub fn from_digest(d: &Hash) -> Address {
        let mut out = [0u8; 20];
        out.copy_from_slice(&d.0[12..]);
        Address(out)
    }
}

/// Signs canonical transaction bytes. Implementations decide the scheme; the
/// ledger only relies on [`verify`] agreeing with the signer.
pub trait Signer {
    fn public_key(&self) -> PublicKey;
    fn sign(&self, message: &[u8]) -> Signature;

    fn address(&self) -> Address {
        Address::from_public_key(&self.public_key())
    }
}

/// Ed25519 key pair.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    /// Deterministic test-mode derivation: the secret key is the hash of the seed.
    pub fn from_seed(seed: &str) -> KeyPair {
        KeyPair {
            signing: SigningKey::from_bytes(&hash(seed.as_bytes()).0),
        }
    }

    pub fn from_secret_bytes(bytes: &[u8]) -> Result<KeyPair, CryptoError> {
        let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::InvalidKey)?;
        Ok(KeyPair {
            signing: SigningKey::from_bytes(&arr),
        })
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyPair({})", self.address())
    }
}

impl Signer for KeyPair {
    fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

pub fn verify(pk: &PublicKey, message: &[u8], sig: &Signature) -> Result<(), CryptoError> {
    let vk = VerifyingKey::from_bytes(&pk.0).map_err(|_| CryptoError::InvalidKey)?;
    let sig = ed25519_dalek::Signature::from_bytes(&sig.0);
    vk.verify(message, &sig).map_err(|_| CryptoError::BadSignature)
}
