//! A node's home directory: chain file, document store and keystore.
//!
//! ```text
//! <home>/chain.bin   length-prefixed block records
//! <home>/docs/       content-addressed documents
//! <home>/keys/       encrypted operator keys
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use agritrace::config::{Role, SupplyChainConfig};
use agritrace::contracts::Operation;
use agritrace::crypto::{Address, Hash, KeyPair, Signer};
use agritrace::docstore::{DocStore, DocStoreError};
use agritrace::ledger::{
    append_block, decode_chain, read_chain_file, write_chain_file, Block, Chain, GasSchedule, Genesis,
    LedgerError, TimeSource, VerificationFailure,
};
use agritrace::scenario::{olive_oil_flow, Participants};
use rand::RngCore;
use serde::Serialize;

use crate::keystore::{KeyFile, Keystore, KeystoreError};

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("chain file is invalid at {0}")]
    Verification(VerificationFailure),
    #[error("no chain at {0}; run `trace chain init` first")]
    NoChain(String),
    #[error("a chain already exists at {0}")]
    ChainExists(String),
    #[error("block {height} sealed but not written to disk: {source}")]
    Persist { height: u64, source: std::io::Error },
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error(transparent)]
    DocStore(#[from] DocStoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct Home {
    root: PathBuf,
}

impl Home {
    pub fn new(root: impl Into<PathBuf>) -> Home {
        Home { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn chain_path(&self) -> PathBuf {
        self.root.join("chain.bin")
    }

    pub fn docs(&self) -> Result<DocStore, NodeError> {
        Ok(DocStore::open(self.root.join("docs"))?)
    }

    pub fn keys(&self) -> Result<Keystore, NodeError> {
        Ok(Keystore::open(self.root.join("keys"))?)
    }

    /// Replays the chain file from genesis.
    pub fn load_chain(&self) -> Result<Chain, NodeError> {
        let path = self.chain_path();
        if !path.exists() {
            return Err(NodeError::NoChain(path.display().to_string()));
        }
        let bytes = read_chain_file(&path)?;
        let (blocks, failure) = decode_chain(&bytes);
        if let Some(f) = failure {
            return Err(NodeError::Verification(f));
        }
        Chain::replay(&blocks, TimeSource::System).map_err(NodeError::Verification)
    }
}

/// What a caller sees of an accepted, sealed transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceiptView {
    pub tx: Hash,
    pub height: u64,
    pub index: u32,
    pub block_hash: Hash,
    pub gas_used: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unlock_request: Option<u64>,
}

/// Executes `op`, seals it into its own block and returns the block to
/// persist. Nothing changes when the operation is rejected.
pub fn execute_and_seal(chain: &mut Chain, key: &KeyPair, op: Operation) -> Result<(ReceiptView, Block), NodeError> {
    let r = chain.execute(key, op)?;
    let block = chain.seal_block().clone();
    let view = ReceiptView {
        tx: r.tx,
        height: block.height,
        index: r.index,
        block_hash: block.hash,
        gas_used: r.gas_used,
        created: r.outcome.created,
        unlock_request: r.outcome.unlock_request,
    };
    Ok((view, block))
}

pub fn persist(home: &Home, block: &Block) -> Result<(), NodeError> {
    append_block(&home.chain_path(), block).map_err(|source| NodeError::Persist {
        height: block.height,
        source,
    })
}

#[derive(Debug, Clone)]
pub struct InitOptions {
    pub chain_id: String,
    pub admin: String,
    pub fund: u64,
    /// Derive keys from `olive-<actor id>` instead of the OS RNG.
    pub seeded: bool,
    /// Register every actor's key in block 1.
    pub register: bool,
    /// Run the olive-oil reference flow after registration.
    pub demo: bool,
    pub gas_schedule: GasSchedule,
    pub passphrase: String,
    pub kdf_iterations: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitReport {
    pub chain_id: String,
    pub height: u64,
    pub head: Hash,
    pub keys: Vec<KeyFile>,
}

fn random_key() -> KeyPair {
    let mut secret = [0u8; 32];
    rand::thread_rng().fill_bytes(&mut secret);
    KeyPair::from_secret_bytes(&secret).expect("32 bytes")
}

pub fn init(home: &Home, config: SupplyChainConfig, opts: &InitOptions) -> Result<InitReport, NodeError> {
    let path = home.chain_path();
    if path.exists() {
        return Err(NodeError::ChainExists(path.display().to_string()));
    }
    match config.actor(&opts.admin) {
        Some(a) if a.role == Role::Administrator => {}
        Some(_) => return Err(NodeError::Invalid(format!("actor `{}` is not an administrator", opts.admin))),
        None => return Err(NodeError::Invalid(format!("unknown actor `{}`", opts.admin))),
    }
    let seeded = opts.seeded || opts.demo;
    let people = Participants::for_config(&config);
    let keys: Vec<(String, KeyPair)> = config
        .actors
        .keys()
        .map(|id| {
            let key = if seeded { people.key(id).clone() } else { random_key() };
            (id.clone(), key)
        })
        .collect();
    let admin_key = keys.iter().find(|(id, _)| *id == opts.admin).map(|(_, k)| k.clone()).unwrap();
    let genesis = Genesis {
        chain_id: opts.chain_id.clone(),
        owner: admin_key.address(),
        owner_actor_id: opts.admin.clone(),
        allocations: keys.iter().map(|(_, k)| (k.address(), opts.fund)).collect(),
        gas_schedule: opts.gas_schedule,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config,
    };
    let mut chain = Chain::genesis(genesis, TimeSource::System)?;
    if opts.register || opts.demo {
        for (id, key) in &keys {
            if *id == opts.admin {
                continue;
            }
            chain.execute(
                &admin_key,
                Operation::RegisterAddress {
                    address: key.address(),
                    actor_id: id.clone(),
                    roles: BTreeSet::new(),
                    enabled: true,
                },
            )?;
        }
        chain.seal_block();
    }
    if opts.demo {
        olive_oil_flow(&mut chain, &people)
            .map_err(|e| NodeError::Invalid(format!("demo flow needs the olive-oil configuration: {e}")))?;
    }
    let store = home.keys()?;
    let mut files = Vec::new();
    for (id, key) in &keys {
        files.push(store.save_with(id, key, &opts.passphrase, opts.kdf_iterations)?);
    }
    home.docs()?;
    write_chain_file(&path, chain.blocks())?;
    Ok(InitReport {
        chain_id: opts.chain_id.clone(),
        height: chain.height(),
        head: chain.head().hash,
        keys: files,
    })
}
