//! Operator keys at rest: one JSON file per address, the secret sealed with
//! ChaCha20-Poly1305 under a PBKDF2-HMAC-SHA256 key derived from a
//! passphrase.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use agritrace::crypto::{Address, KeyPair, Signer};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

pub const KDF_ITERATIONS: u32 = 100_000;
const KDF: &str = "pbkdf2-hmac-sha256";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub actor_id: String,
    pub address: Address,
    pub kdf: String,
    pub iterations: u32,
    pub salt: String,
    pub nonce: String,
    pub ciphertext: String,
}

#[derive(Debug, thiserror::Error)]
pub enum KeystoreError {
    #[error("no key for {0}")]
    NotFound(String),
    #[error("wrong passphrase or damaged key file for {0}")]
    Decrypt(Address),
    #[error("key file {path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn derive_key(passphrase: &str, salt: &[u8], iterations: u32) -> Key {
    let mut key = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(passphrase.as_bytes(), salt, iterations, &mut key);
    Key::from(key)
}

#[derive(Debug, Clone)]
pub struct Keystore {
    dir: PathBuf,
}

impl Keystore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Keystore, KeystoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Keystore { dir })
    }

    fn path(&self, address: &Address) -> PathBuf {
        self.dir.join(format!("{}.json", address.to_hex()))
    }

    /// Encrypts and writes `key` for `actor_id`, replacing any file for the
    /// same address.
    pub fn save(&self, actor_id: &str, key: &KeyPair, passphrase: &str) -> Result<KeyFile, KeystoreError> {
        self.save_with(actor_id, key, passphrase, KDF_ITERATIONS)
    }

    pub fn save_with(
        &self,
        actor_id: &str,
        key: &KeyPair,
        passphrase: &str,
        iterations: u32,
    ) -> Result<KeyFile, KeystoreError> {
        let mut salt = [0u8; 16];
        let mut nonce = [0u8; 12];
        rand::thread_rng().fill_bytes(&mut salt);
        rand::thread_rng().fill_bytes(&mut nonce);
        let address = key.address();
        let cipher = ChaCha20Poly1305::new(&derive_key(passphrase, &salt, iterations));
        let ciphertext = cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: &key.secret_bytes(),
                    aad: address.as_bytes(),
                },
            )
            .expect("encryption of 32 bytes cannot fail");
        let file = KeyFile {
            actor_id: actor_id.to_string(),
            address,
            kdf: KDF.to_string(),
            iterations,
            salt: hex::encode(salt),
            nonce: hex::encode(nonce),
            ciphertext: hex::encode(ciphertext),
        };
        let path = self.path(&address);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&file).expect("key file serializes"))?;
        fs::rename(tmp, path)?;
        Ok(file)
    }

    fn read(path: &Path) -> Result<KeyFile, KeystoreError> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| KeystoreError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Every key file, ordered by actor id then address.
    pub fn list(&self) -> Result<Vec<KeyFile>, KeystoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|x| x == "json") {
                out.push(Self::read(&path)?);
            }
        }
        out.sort_by(|a, b| (&a.actor_id, a.address).cmp(&(&b.actor_id, b.address)));
        Ok(out)
    }

    pub fn file(&self, address: &Address) -> Result<KeyFile, KeystoreError> {
        let path = self.path(address);
        if !path.exists() {
            return Err(KeystoreError::NotFound(address.to_string()));
        }
        Self::read(&path)
    }

    /// First key file of `actor_id`.
    pub fn for_actor(&self, actor_id: &str) -> Result<KeyFile, KeystoreError> {
        self.list()?
            .into_iter()
            .find(|f| f.actor_id == actor_id)
            .ok_or_else(|| KeystoreError::NotFound(format!("actor `{actor_id}`")))
    }

    pub fn unlock(&self, file: &KeyFile, passphrase: &str) -> Result<KeyPair, KeystoreError> {
        let bad = || KeystoreError::Decrypt(file.address);
        let salt = hex::decode(&file.salt).map_err(|_| bad())?;
        let nonce = hex::decode(&file.nonce).map_err(|_| bad())?;
        let ciphertext = hex::decode(&file.ciphertext).map_err(|_| bad())?;
        if file.kdf != KDF || nonce.len() != 12 {
            return Err(bad());
        }
        let cipher = ChaCha20Poly1305::new(&derive_key(passphrase, &salt, file.iterations));
        let secret = cipher
            .decrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: &ciphertext,
                    aad: file.address.as_bytes(),
                },
            )
            .map_err(|_| bad())?;
        let key = KeyPair::from_secret_bytes(&secret).map_err(|_| bad())?;
        if key.address() != file.address {
            return Err(bad());
        }
        Ok(key)
    }
}
